#include "maff/simulate.hpp"

#include <cmath>

#include "maff/errors.hpp"
#include "maff/parallel.hpp"

namespace maff {

void ScenarioConfig::validate() const {
  if (n == 0) throw ArgumentError("n must be positive");
  if (!(q >= 0.0) || q >= 1.0) throw ArgumentError("q must lie in [0, 1)");
  if (!(beta > 0.0) || beta > 1.0)
    throw ArgumentError("beta must lie in (0, 1]");
  kernel.validate();
  if (!(target_p > 0.0) || target_p >= 1.0)
    throw ArgumentError("target_p must lie in (0, 1)");
  if (!(target_maff >= 0.0) || target_maff > 1.0)
    throw ArgumentError("target_maff must lie in [0, 1]");
  if (!(sigma1 > 0.0) || !(sigma2 > 0.0))
    throw ArgumentError("sigma1 and sigma2 must be positive");
  if (!(q1 >= 0.0) || q1 >= 1.0) throw ArgumentError("q1 must lie in [0, 1)");
  if (!(q2 >= 0.0) || q2 > 1.0) throw ArgumentError("q2 must lie in [0, 1]");
  if (scenario == Scenario::NonExpFamily && (!(mu1 > 0.0) || !(mu2 > 0.0)))
    throw ArgumentError("scenario 2 uniform components need positive means");
  fever_prob_malaria();  // throws when the targets are infeasible
}

double ScenarioConfig::fever_prob_other() const {
  return target_p * (1.0 - target_maff);
}

double ScenarioConfig::fever_prob_malaria() const {
  const double b = fever_prob_other();
  const double a = target_p * target_maff / (1.0 - b);
  if (!(a >= 0.0) || a > 1.0)
    throw ArgumentError("target_p and target_maff give an infeasible a");
  return a;
}

double sample_true_density(const ScenarioConfig &config, int component,
                           Rng &rng) {
  if (component == 1) {
    if (config.scenario == Scenario::ExpFamilyLike) {
      if (rng.bernoulli(config.q)) return 0.0;
      return rng.truncated_normal_pos(config.mu1, config.sigma1);
    }
    if (rng.bernoulli(config.q1)) return 0.0;
    if (rng.bernoulli(config.q2))
      return rng.truncated_normal_pos(config.mu1, config.sigma1);
    return rng.uniform(0.0, 2.0 * config.mu1);
  }
  if (component == 2) {
    if (config.scenario == Scenario::ExpFamilyLike)
      return rng.truncated_normal_pos(config.mu2, config.sigma2);
    if (rng.bernoulli(config.q2))
      return rng.truncated_normal_pos(config.mu2, config.sigma2);
    return rng.uniform(0.0, 2.0 * config.mu2);
  }
  throw ArgumentError("component must be 1 or 2");
}

namespace {
double sample_observed(const MeasurementKernel &kernel, double d_cur,
                       Rng &rng) {
  switch (kernel.family) {
    case KernelFamily::Exact:
      return d_cur;
    case KernelFamily::Poisson:
      return 40.0 * static_cast<double>(rng.poisson(d_cur / 40.0));
    case KernelFamily::NegBin:
      return 40.0 * static_cast<double>(
                        rng.neg_binomial(d_cur / 40.0, kernel.dispersion));
    case KernelFamily::WbcMixNegBin: {
      std::vector<double> probs(kernel.wbc.size());
      for (std::size_t w = 0; w < probs.size(); ++w)
        probs[w] = kernel.wbc[w].prob;
      const double wbc = kernel.wbc[rng.categorical(probs)].wbc;
      // The count's mean depends on the true WBC, but the slide is still
      // reported as 40 x count.
      return 40.0 * static_cast<double>(
                        rng.neg_binomial(d_cur * 200.0 / wbc,
                                         kernel.dispersion));
    }
  }
  throw ArgumentError("unknown kernel family");
}
}  // namespace

SimulatedSurvey generate_dataset(const ScenarioConfig &config) {
  config.validate();
  const double a = config.fever_prob_malaria();
  const double b = config.fever_prob_other();

  SimulatedSurvey sim;
  sim.truth.a = a;
  sim.truth.b = b;
  sim.truth.true_p = a + b - a * b;
  sim.truth.true_lambda_star = a / sim.truth.true_p;
  sim.truth.true_maff = a * (1.0 - b) / sim.truth.true_p;
  sim.truth.y_mi.resize(config.n);
  sim.truth.y_nmi.resize(config.n);
  sim.truth.d_no_nmi.resize(config.n);
  sim.truth.d_cur.resize(config.n);
  sim.dataset.records.resize(config.n);

  parallel_for(config.n, config.threads, [&](std::size_t i) {
    Rng rng(config.seed, i);
    const bool y_mi = rng.bernoulli(a);
    const bool y_nmi = rng.bernoulli(b);
    const double d_no_nmi = sample_true_density(config, y_mi ? 2 : 1, rng);
    // Fever killing touches only children whose fever is purely
    // non-malarial.
    const bool killed = y_nmi && !y_mi;
    const double d_cur = killed ? config.beta * d_no_nmi : d_no_nmi;
    sim.truth.y_mi[i] = y_mi ? 1 : 0;
    sim.truth.y_nmi[i] = y_nmi ? 1 : 0;
    sim.truth.d_no_nmi[i] = d_no_nmi;
    sim.truth.d_cur[i] = d_cur;
    sim.dataset.records[i].fever = y_mi || y_nmi;
    sim.dataset.records[i].density =
        sample_observed(config.kernel, d_cur, rng);
  });
  return sim;
}

}  // namespace maff
