#ifndef MAFF_BASELINES_HPP
#define MAFF_BASELINES_HPP

#include <cstdint>
#include <vector>

#include "maff/survey.hpp"

namespace maff {

// Classical attributable-fraction estimators computed from the survey.
// Out-of-range values are reported as-is with the flag set, never clamped.
struct BaselineEstimate {
  double estimate = 0.0;
  bool out_of_range = false;
};

// Risk-ratio plug-in from the 2x2 table: p_f (R - 1) / R with
// R = P(fever | positive) / P(fever | slide-negative).
BaselineEstimate maff_rr_table(const SummaryTable &table);

// Odds-ratio-type plug-in from the margins: (p_f - p_a) / (1 - p_a).
BaselineEstimate maff_or_table(const SummaryTable &table);

// Logistic regression logit P(fever | D) = a + b log(1 + D), mapped to an
// attributable fraction through the same p_f (R - 1) / R form with
// R = mean fitted risk among parasite-positive records / fitted risk at 0.
struct LogisticMaff {
  double estimate = 0.0;
  bool out_of_range = false;
  double intercept = 0.0;
  double slope = 0.0;
  double risk_ratio = 0.0;
  bool converged = false;
};
LogisticMaff maff_logistic(const SurveyDataset &dataset);

// Power-logistic variant logit P = a + b D^c with the exponent c profiled
// over a log-spaced grid on [0.05, 2].
struct PowerLogisticMaff {
  double estimate = 0.0;
  bool out_of_range = false;
  double intercept = 0.0;
  double slope = 0.0;
  double exponent = 0.0;
  double risk_ratio = 0.0;
  bool converged = false;
};
PowerLogisticMaff maff_power_logistic(const SurveyDataset &dataset,
                                      std::size_t exponent_grid = 40);

// Population with malaria-fever probability a, other-fever probability b,
// fevers combining as Y = min(Y_mi + Y_nmi, 1).  pos_prob is the marginal
// P(D > 0) (>= a since malarial fever requires parasites); negative means
// the midpoint default a + (1 - a)/2.  pi0 and tau parameterize the
// dependent generalization used by the sensitivity oracle.
struct PopulationSpec {
  double a = 0.0;
  double b = 0.0;
  bool independent = true;
  double pos_prob = -1.0;
  double pi0 = -1.0;
  double tau = 1.0;

  double resolved_pos_prob() const;
};

// Exact population-level identities for an independent population:
// theoretical MAFF, the limits of the RR and OR plug-ins, and the
// residuals of the three textbook identities linking them.
struct PropositionReport {
  double p = 0.0;
  double maff = 0.0;
  double rr_plim = 0.0;
  double or_plim = 0.0;
  double resid_rr_is_maff = 0.0;       // |rr_plim - maff|
  double resid_or_is_lambda = 0.0;     // |or_plim - a/p|
  double resid_rr_or_link = 0.0;       // |rr_plim - or_plim (1 - b)|
  double resid_adjust_roundtrip = 0.0; // |adjusted(or_plim, p) - maff|
};
PropositionReport verify_propositions(const PopulationSpec &population);

// Multinomial sample of the 2x2 fever-by-parasitaemia table from an
// independent population; used by convergence checks.
SummaryTable sample_population_table(const PopulationSpec &population,
                                     std::size_t n, std::uint64_t seed);

}  // namespace maff

#endif
