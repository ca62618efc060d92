#ifndef MAFF_GMODEL_HPP
#define MAFF_GMODEL_HPP

#include <cstddef>
#include <vector>

#include "maff/matrix.hpp"

namespace maff {

// Latent parasite-density lattice shared by both samples.  values are
// equispaced, start at exactly 0, and strictly increase; the febrile
// sample lives on the same lattice shrunk by the fever-killing factor
// beta in (0, 1].
struct Grid {
  std::vector<double> values;
  double beta = 1.0;

  std::size_t size() const { return values.size(); }
  std::vector<double> scaled() const;  // {beta * d_j}
  void validate() const;

  static Grid equispaced(double max_value, std::size_t k, double beta = 1.0);
};

// Probability masses over the grid points (or any finite support).
struct DiscreteDensity {
  std::vector<double> mass;

  double sum() const;
  void validate(double tol = 1e-12) const;
  double mean(const std::vector<double> &support) const;
};

// Exponential-family density on the basis rows:
//   g_j = exp(Q_j . alpha + offset_j - phi),  phi = logsumexp over j.
// offset is an optional per-point additive term in the exponent (used for
// exponential tilting); pass an empty vector for none.
DiscreteDensity density(const Matrix &q, const std::vector<double> &alpha,
                        const std::vector<double> &offset = {});

// d log g_j / d alpha = Q_j - E_g[Q]; returned as a (points x df) matrix.
Matrix log_density_gradient(const Matrix &q, const std::vector<double> &alpha,
                            const std::vector<double> &offset = {});

// Density restricted to the positive grid points: mass[0] is exactly 0 and
// the exponential-family form runs over rows of q_positive, which must have
// been built on grid points 2..k (one fewer row than the full grid).
DiscreteDensity positive_support_density(const Matrix &q_positive,
                                         const std::vector<double> &alpha);

}  // namespace maff

#endif
