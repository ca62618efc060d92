#ifndef MAFF_SIMULATE_HPP
#define MAFF_SIMULATE_HPP

#include <cstdint>
#include <vector>

#include "maff/kernels.hpp"
#include "maff/rng.hpp"
#include "maff/survey.hpp"

namespace maff {

// True no-fever parasite density families for the synthetic studies.
//   ExpFamilyLike  g1 = q I(0) + (1-q) TN(mu1, s1);  g2 = TN(mu2, s2)
//   NonExpFamily   g1 = q1 I(0) + (1-q1)[q2 TN(mu1, s1) + (1-q2) U(0, 2 mu1)]
//                  g2 = q2 TN(mu2, s2) + (1-q2) U(0, 2 mu2)
// where TN is a normal truncated to (0, inf).
enum class Scenario { ExpFamilyLike, NonExpFamily };

struct ScenarioConfig {
  Scenario scenario = Scenario::ExpFamilyLike;
  std::size_t n = 1000;
  double q = 0.2;            // zero mass of g1 (scenario 1)
  double beta = 1.0;         // true fever-killing survival factor
  MeasurementKernel kernel = MeasurementKernel::poisson();
  double target_p = 0.1;     // fever prevalence to hit
  double target_maff = 0.5;  // attributable fraction to hit
  // Density shapes (per microlitre).  mu1 may be negative: the positive
  // part of g1 is then a decay-shaped truncated normal, matching the
  // low-density parasitaemia of asymptomatic carriers.
  double mu1 = -2000.0;
  double sigma1 = 1500.0;
  double mu2 = 20000.0;
  double sigma2 = 10000.0;
  double q1 = 0.125;         // zero mass of g1 (scenario 2)
  double q2 = 0.7;           // truncated-normal share (scenario 2)
  std::uint64_t seed = 1;
  unsigned threads = 1;

  void validate() const;
  // Solve a and b from (target_p, target_maff) under independent fevers:
  // b = p (1 - maff), a = p maff / (1 - b).
  double fever_prob_malaria() const;   // a
  double fever_prob_other() const;     // b
};

// Everything the generator knows that an estimator must not see.
struct GroundTruth {
  double a = 0.0;
  double b = 0.0;
  double true_p = 0.0;
  double true_lambda_star = 0.0;  // a / p
  double true_maff = 0.0;         // a (1 - b) / p
  std::vector<char> y_mi;
  std::vector<char> y_nmi;
  std::vector<double> d_no_nmi;   // density had the child had no other fever
  std::vector<double> d_cur;      // density at survey time (after killing)
};

struct SimulatedSurvey {
  SurveyDataset dataset;
  GroundTruth truth;
};

// One draw from the configured g1 (component=1) or g2 (component=2).
double sample_true_density(const ScenarioConfig &config, int component,
                           Rng &rng);

// Full generative pass: fever indicators, latent densities, fever killing
// for non-malarial fevers only, then the measurement kernel.  Record i is
// generated from its own RNG stream, so results are identical for any
// thread count.
SimulatedSurvey generate_dataset(const ScenarioConfig &config);

}  // namespace maff

#endif
