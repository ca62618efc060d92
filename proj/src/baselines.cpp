#include "maff/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "maff/errors.hpp"
#include "maff/likelihood.hpp"
#include "maff/rng.hpp"

namespace maff {

namespace {

bool outside_unit(double v) { return v < 0.0 || v > 1.0; }

double rr_form(double p_f, double risk_ratio) {
  return p_f * (risk_ratio - 1.0) / risk_ratio;
}

// Two-parameter logistic regression of fever on a single covariate by
// Newton scoring.  Returns false on separation / non-convergence.
bool logistic_irls(const std::vector<double> &covariate,
                   const std::vector<char> &fever, double &intercept,
                   double &slope) {
  const std::size_t n = covariate.size();
  double scale = 0.0;
  for (double t : covariate) scale = std::max(scale, std::abs(t));
  if (scale == 0.0) return false;
  const double inv_scale = 1.0 / scale;

  double b0 = 0.0, b1 = 0.0;  // on the rescaled covariate
  for (int iter = 0; iter < 100; ++iter) {
    double s0 = 0.0, s1 = 0.0;          // score
    double i00 = 0.0, i01 = 0.0, i11 = 0.0;  // information
    for (std::size_t i = 0; i < n; ++i) {
      const double t = covariate[i] * inv_scale;
      const double eta = b0 + b1 * t;
      const double mu = 1.0 / (1.0 + std::exp(-eta));
      const double r = (fever[i] ? 1.0 : 0.0) - mu;
      const double w = mu * (1.0 - mu);
      s0 += r;
      s1 += r * t;
      i00 += w;
      i01 += w * t;
      i11 += w * t * t;
    }
    const double det = i00 * i11 - i01 * i01;
    if (!(std::abs(det) > 1e-14)) return false;
    const double step0 = (i11 * s0 - i01 * s1) / det;
    const double step1 = (i00 * s1 - i01 * s0) / det;
    b0 += step0;
    b1 += step1;
    if (std::abs(b0) > 1e3 || std::abs(b1) > 1e3) return false;  // separation
    if (std::abs(step0) < 1e-10 && std::abs(step1) < 1e-10) {
      intercept = b0;
      slope = b1 * inv_scale;
      return true;
    }
  }
  return false;
}

// p_f (R - 1) / R with R = mean fitted risk among parasite-positive
// records over the fitted risk at density zero.
double regression_estimate(const SurveyDataset &dataset,
                           const std::vector<double> &fitted,
                           double fitted_at_zero, double &risk_ratio) {
  double positives = 0.0;
  double mean_positive = 0.0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset.records[i].density > 0.0) {
      positives += 1.0;
      mean_positive += fitted[i];
    }
  }
  if (positives == 0.0)
    throw EstimationError("no parasite-positive records");
  mean_positive /= positives;
  risk_ratio = mean_positive / fitted_at_zero;
  const SummaryTable table = summarize(dataset);
  return rr_form(table.positive_given_febrile(), risk_ratio);
}

}  // namespace

BaselineEstimate maff_rr_table(const SummaryTable &table) {
  const std::size_t positives = table.febrile_positive + table.afebrile_positive;
  const std::size_t zeros = table.febrile_zero + table.afebrile_zero;
  if (positives == 0)
    throw EstimationError("no parasite-positive records: risk ratio undefined");
  if (zeros == 0)
    throw EstimationError("no slide-negative records: risk ratio undefined");
  const double risk_positive =
      static_cast<double>(table.febrile_positive) /
      static_cast<double>(positives);
  const double risk_zero =
      static_cast<double>(table.febrile_zero) / static_cast<double>(zeros);
  if (risk_positive == 0.0)
    throw EstimationError("no febrile parasite-positive records");
  BaselineEstimate out;
  const double p_f = table.positive_given_febrile();
  // risk_zero == 0 is the R -> infinity limit of p_f (R - 1) / R.
  out.estimate = risk_zero == 0.0 ? p_f
                                  : rr_form(p_f, risk_positive / risk_zero);
  out.out_of_range = outside_unit(out.estimate);
  return out;
}

BaselineEstimate maff_or_table(const SummaryTable &table) {
  const double p_f = table.positive_given_febrile();
  const double p_a = table.positive_given_afebrile();
  if (p_a == 1.0)
    throw EstimationError("every afebrile record is parasite-positive: "
                          "odds-ratio estimator undefined");
  BaselineEstimate out;
  out.estimate = (p_f - p_a) / (1.0 - p_a);
  out.out_of_range = outside_unit(out.estimate);
  return out;
}

LogisticMaff maff_logistic(const SurveyDataset &dataset) {
  dataset.validate();
  const std::size_t n = dataset.size();
  std::vector<double> covariate(n);
  std::vector<char> fever(n);
  for (std::size_t i = 0; i < n; ++i) {
    covariate[i] = std::log1p(dataset.records[i].density);
    fever[i] = dataset.records[i].fever ? 1 : 0;
  }
  LogisticMaff out;
  out.converged = logistic_irls(covariate, fever, out.intercept, out.slope);
  if (!out.converged)
    throw EstimationError("logistic regression failed to converge "
                          "(possible separation)");
  std::vector<double> fitted(n);
  for (std::size_t i = 0; i < n; ++i)
    fitted[i] = 1.0 / (1.0 + std::exp(-(out.intercept +
                                        out.slope * covariate[i])));
  const double at_zero = 1.0 / (1.0 + std::exp(-out.intercept));
  out.estimate = regression_estimate(dataset, fitted, at_zero,
                                     out.risk_ratio);
  out.out_of_range = outside_unit(out.estimate);
  return out;
}

PowerLogisticMaff maff_power_logistic(const SurveyDataset &dataset,
                                      std::size_t exponent_grid) {
  dataset.validate();
  if (exponent_grid < 2) throw ArgumentError("need at least 2 exponent values");
  const std::size_t n = dataset.size();
  std::vector<char> fever(n);
  for (std::size_t i = 0; i < n; ++i)
    fever[i] = dataset.records[i].fever ? 1 : 0;

  const double c_lo = 0.05, c_hi = 2.0;
  double best_loglik = -std::numeric_limits<double>::infinity();
  PowerLogisticMaff out;
  bool any = false;
  std::vector<double> covariate(n), best_covariate;
  for (std::size_t step = 0; step < exponent_grid; ++step) {
    const double c = c_lo * std::pow(c_hi / c_lo,
                                     static_cast<double>(step) /
                                         static_cast<double>(exponent_grid - 1));
    for (std::size_t i = 0; i < n; ++i)
      covariate[i] = std::pow(dataset.records[i].density, c);
    double b0 = 0.0, b1 = 0.0;
    if (!logistic_irls(covariate, fever, b0, b1)) continue;
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double eta = b0 + b1 * covariate[i];
      ll += fever[i] ? -std::log1p(std::exp(-eta))
                     : -std::log1p(std::exp(eta));
    }
    if (ll > best_loglik) {
      best_loglik = ll;
      out.intercept = b0;
      out.slope = b1;
      out.exponent = c;
      best_covariate = covariate;
      any = true;
    }
  }
  if (!any)
    throw EstimationError("power-logistic regression failed at every "
                          "profiled exponent");
  out.converged = true;
  std::vector<double> fitted(n);
  for (std::size_t i = 0; i < n; ++i)
    fitted[i] = 1.0 / (1.0 + std::exp(-(out.intercept +
                                        out.slope * best_covariate[i])));
  const double at_zero = 1.0 / (1.0 + std::exp(-out.intercept));
  out.estimate = regression_estimate(dataset, fitted, at_zero,
                                     out.risk_ratio);
  out.out_of_range = outside_unit(out.estimate);
  return out;
}

double PopulationSpec::resolved_pos_prob() const {
  if (pos_prob >= 0.0) return pos_prob;
  return a + 0.5 * (1.0 - a);
}

PropositionReport verify_propositions(const PopulationSpec &population) {
  if (!population.independent)
    throw ArgumentError("proposition identities assume independent fevers");
  const double a = population.a;
  const double b = population.b;
  if (!(a >= 0.0) || a > 1.0 || !(b >= 0.0) || b > 1.0)
    throw ArgumentError("a and b must lie in [0, 1]");
  if (a == 0.0 && b == 0.0)
    throw ArgumentError("a = b = 0: no fevers, MAFF undefined");
  if (b == 1.0)
    throw ArgumentError("b = 1: no afebrile stratum, estimators undefined");
  const double pos = population.resolved_pos_prob();
  if (pos < a || pos > 1.0)
    throw ArgumentError("P(D > 0) must lie in [a, 1]");

  PropositionReport report;
  // Joint 2x2 cells, each a product of inputs.  Complements of the tiny
  // no-fever probability are carried explicitly: computing 1 - p after
  // p = a + b - ab cancels catastrophically when both causes are common
  // and would swamp the 1e-12 identity residuals this report exists to
  // measure.
  const double qb = 1.0 - b;
  const double febrile_pos = a + (pos - a) * b;
  const double febrile_neg = (1.0 - pos) * b;
  const double afebrile_pos = (pos - a) * qb;
  const double afebrile_neg = (1.0 - pos) * qb;
  const double no_fever = afebrile_pos + afebrile_neg;  // = (1-a)(1-b)
  const double p = 1.0 - no_fever;
  report.p = p;
  report.maff = a * qb / p;

  const double fever_given_positive = b + qb * (pos > 0.0 ? a / pos : 0.0);
  const double p_f = febrile_pos / p;        // P(positive | fever)
  const double p_a = afebrile_pos / no_fever;  // P(positive | no fever)
  report.rr_plim =
      b > 0.0 ? rr_form(p_f, fever_given_positive / b) : p_f;
  report.or_plim = (p_f - p_a) / (1.0 - p_a);

  // 1 - p lambda* via complements: 1 - or = (1 - p_f) / (1 - p_a) exactly,
  // so the adjustment denominator is no_fever + p (1 - or).
  const double one_minus_or =
      (febrile_neg / p) / (afebrile_neg / no_fever);
  const double adjust_denom = no_fever + p * one_minus_or;
  const double roundtrip = report.or_plim * no_fever / adjust_denom;

  report.resid_rr_is_maff = std::abs(report.rr_plim - report.maff);
  report.resid_or_is_lambda = std::abs(report.or_plim - a / p);
  report.resid_rr_or_link =
      std::abs(report.rr_plim - report.or_plim * qb);
  report.resid_adjust_roundtrip = std::abs(roundtrip - report.maff);
  return report;
}

SummaryTable sample_population_table(const PopulationSpec &population,
                                     std::size_t n, std::uint64_t seed) {
  if (!population.independent)
    throw ArgumentError("sampling is implemented for independent populations");
  const double pos = population.resolved_pos_prob();
  SummaryTable table;
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(seed, i);
    const bool positive = rng.bernoulli(pos);
    const bool y_mi =
        positive && pos > 0.0 && rng.bernoulli(population.a / pos);
    const bool y_nmi = rng.bernoulli(population.b);
    const bool fever = y_mi || y_nmi;
    if (fever)
      ++(positive ? table.febrile_positive : table.febrile_zero);
    else
      ++(positive ? table.afebrile_positive : table.afebrile_zero);
  }
  return table;
}

}  // namespace maff
