#ifndef MAFF_KERNELS_HPP
#define MAFF_KERNELS_HPP

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "maff/matrix.hpp"

namespace maff {

// One point of the white-blood-cell count distribution used when
// converting parasite counts per 200 WBC into densities per microlitre.
struct WbcAtom {
  double wbc = 0.0;   // true WBC per microlitre
  double prob = 0.0;
};

// Measured parasite field density is 40 x (microscopy count per 200 WBC),
// i.e. reporting assumes 8000 WBC per microlitre.
enum class KernelFamily { Exact, Poisson, NegBin, WbcMixNegBin };

// Conditional law of the observed density given the current true density.
//   Exact        observation equals the true density
//   Poisson      count ~ Poisson(d / 40)
//   NegBin       count ~ NB(dispersion r, mean d / 40)
//   WbcMixNegBin count ~ NB(r, mean d * 200 / W) with W ~ wbc distribution
struct MeasurementKernel {
  KernelFamily family = KernelFamily::Poisson;
  double dispersion = 6.0;      // r; NegBin families only
  std::vector<WbcAtom> wbc;     // WbcMixNegBin only

  static MeasurementKernel exact();
  static MeasurementKernel poisson();
  static MeasurementKernel negbin(double r = 6.0);
  static MeasurementKernel wbc_negbin(double r = 6.0,
                                      std::vector<WbcAtom> dist = {});
  void validate() const;
  std::string name() const;
};

// Field WBC distribution: point masses at 4000..12000 per microlitre.
std::vector<WbcAtom> default_wbc_distribution();

// P(observed density = x_obs | current density = d).  For the count-based
// families x_obs is converted to a count x_obs / 40 and rounded to the
// nearest integer; pass `rounded` to learn whether rounding moved it.
double kernel_prob(const MeasurementKernel &kernel, double x_obs, double d,
                   bool *rounded = nullptr);
double kernel_log_prob(const MeasurementKernel &kernel, double x_obs, double d,
                       bool *rounded = nullptr);

// n x k matrix of kernel_prob(obs_i, support_j).  rounded_count, when
// given, accumulates how many observations were not multiples of 40 so the
// caller can warn once.
Matrix kernel_matrix(const MeasurementKernel &kernel,
                     const std::vector<double> &observations,
                     const std::vector<double> &support,
                     std::size_t *rounded_count = nullptr);

// Same matrix in logs (entries may be -inf).
Matrix kernel_log_matrix(const MeasurementKernel &kernel,
                         const std::vector<double> &observations,
                         const std::vector<double> &support,
                         std::size_t *rounded_count = nullptr);

// Slide-reading calibration data: `slides` blood films from patients with
// measured density mean_density, of which `negatives` read parasite-free.
struct FalseNegativeRecord {
  double mean_density = 0.0;  // per microlitre, > 0
  double negatives = 0.0;     // 0 <= negatives <= slides
  double slides = 0.0;        // > 0
};

struct DispersionFit {
  double r_hat = 0.0;
  double loglik = 0.0;
};

// Maximum-likelihood dispersion r of the NegBin kernel from false-negative
// counts: negatives_i ~ Binomial(slides_i, (r/(r + x_i/40))^r), maximized
// by golden-section search over r in [0.1, 1e4].
DispersionFit estimate_dispersion(const std::vector<FalseNegativeRecord> &records);

// CSV loaders.  Header lines are required and '#' lines are skipped.
std::vector<FalseNegativeRecord> parse_false_negative_csv(std::istream &in);
std::vector<WbcAtom> parse_wbc_csv(std::istream &in);

}  // namespace maff

#endif
