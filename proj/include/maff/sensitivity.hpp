#ifndef MAFF_SENSITIVITY_HPP
#define MAFF_SENSITIVITY_HPP

#include <cstddef>
#include <vector>

#include "maff/gmodel.hpp"
#include "maff/likelihood.hpp"

namespace maff {

// Departures from the identifying assumptions:
//   delta1  exponential tilt exp(delta1 * d) of the febrile copy of g1,
//           relaxing "no-fever density unaffected by fever status"
//           (units: 1 / (parasites per microlitre); >= 0)
//   tau     P(no other fever | malarial fever) / P(no other fever | none),
//           relaxing independence of the two fever causes (>= 1)
struct SensitivityParams {
  double delta1 = 0.0;
  double tau = 1.0;
};

struct SensitivityResult {
  double delta1 = 0.0;
  double tau = 1.0;
  double maff = 0.0;     // generalized adjustment, capped at 1 when infeasible
  bool feasible = true;  // tau pi0 <= 1, pi0 = (1 - p)/(1 - p lambda*)
  bool capped = false;   // raw formula value exceeded 1
  FitResult fit;
};

// Exponentially tilted exponential-family density:
// mass_j proportional to exp(Q_j alpha + delta1 * support_j).
DiscreteDensity tilt_density(const Matrix &q, const std::vector<double> &alpha,
                             double delta1,
                             const std::vector<double> &support);

// MAFF when a fraction tau pi0 of malarial-fever children would have had
// no other fever: lambda = lambda* tau (1 - p) / (1 - p lambda*).
// tau = 1 reduces to the independent-fevers adjustment.
double generalized_maff(double lambda_star, double p, double tau,
                        bool *feasible = nullptr, bool *capped = nullptr);

// Refit with the febrile g1 component tilted by delta1, then apply the
// generalized adjustment.  (delta1, tau) = (0, 1) follows exactly the
// plain fit's optimizer path.
SensitivityResult sensitivity_fit(const SurveyDataset &dataset,
                                  const FitConfig &config,
                                  const SensitivityParams &params);

// Row-major (delta1 x tau) sweep.  tau only affects the final adjustment,
// so each delta1 row shares one fit; cells are filled in canonical order
// whatever the thread count.
struct SensitivityGrid {
  std::vector<double> delta1_values;
  std::vector<double> tau_values;
  std::vector<SensitivityResult> cells;  // delta1-major

  const SensitivityResult &cell(std::size_t i_delta, std::size_t i_tau) const {
    return cells[i_delta * tau_values.size() + i_tau];
  }
};

SensitivityGrid sensitivity_grid(const SurveyDataset &dataset,
                                 const FitConfig &config,
                                 double delta1_max = 1.0 / 40000.0,
                                 double tau_max = 1.06,
                                 std::size_t n_delta = 5,
                                 std::size_t n_tau = 5,
                                 unsigned threads = 1);

}  // namespace maff

#endif
