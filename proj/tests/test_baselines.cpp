#include <doctest.h>

#include <cmath>
#include <vector>

#include "maff/baselines.hpp"
#include "maff/errors.hpp"
#include "maff/rng.hpp"
#include "maff/survey.hpp"

namespace {

maff::SummaryTable reference_table() {
  maff::SummaryTable t;
  t.afebrile_zero = 160;
  t.afebrile_positive = 1698;
  t.febrile_zero = 16;
  t.febrile_positive = 121;
  return t;
}

}  // namespace

TEST_SUITE("baselines") {
  TEST_CASE("risk-ratio plug-in on the reference table") {
    const auto est = maff::maff_rr_table(reference_table());
    // Independent arithmetic: p_f (R - 1)/R with
    // R = P(fever|positive)/P(fever|zero) = (121/1819)/(16/176).
    const double r = (121.0 / 1819.0) / (16.0 / 176.0);
    const double expect = (121.0 / 137.0) * (r - 1.0) / r;
    CHECK(est.estimate == doctest::Approx(expect).epsilon(1e-12));
    // Exact rational: R = 1331/1819, so the estimate is
    // (121/137)(1 - 1819/1331) = -59048/182347.
    CHECK(est.estimate ==
          doctest::Approx(-59048.0 / 182347.0).epsilon(1e-12));
    CHECK(est.out_of_range);
  }

  TEST_CASE("odds-type plug-in on the reference table") {
    const auto est = maff::maff_or_table(reference_table());
    const double p_f = 121.0 / 137.0;
    const double p_a = 1698.0 / 1858.0;
    CHECK(est.estimate ==
          doctest::Approx((p_f - p_a) / (1.0 - p_a)).epsilon(1e-12));
    CHECK(est.estimate == doctest::Approx(-0.3562055).epsilon(1e-6));
    CHECK(est.out_of_range);
  }

  TEST_CASE("plug-ins are exact on a table they were built for") {
    // Independent population with known margins: a = 0.06, b = 0.04,
    // P(D>0) = 0.5; table entries are the exact expected proportions.
    const double a = 0.06, b = 0.04, pos = 0.5;
    const double p = a + b - a * b;
    const double n = 1e7;
    maff::SummaryTable t;
    t.febrile_positive = static_cast<std::size_t>(
        std::llround(n * (a + (pos - a) * b)));
    t.febrile_zero = static_cast<std::size_t>(
        std::llround(n * (1.0 - pos) * b));
    t.afebrile_positive = static_cast<std::size_t>(
        std::llround(n * (pos - a) * (1.0 - b)));
    t.afebrile_zero = static_cast<std::size_t>(
        std::llround(n * (1.0 - pos) * (1.0 - b)));
    const double maff = a * (1.0 - b) / p;
    CHECK(maff::maff_rr_table(t).estimate ==
          doctest::Approx(maff).epsilon(1e-6));
    const double lambda_star = a / p;
    CHECK(maff::maff_or_table(t).estimate ==
          doctest::Approx(lambda_star).epsilon(1e-6));
  }

  TEST_CASE("proposition identities hold for random populations") {
    maff::Rng rng(2024, 0);
    for (int i = 0; i < 1000; ++i) {
      maff::PopulationSpec pop;
      pop.a = rng.uniform(0.001, 0.999);
      pop.b = rng.uniform(0.001, 0.999);
      const auto report = maff::verify_propositions(pop);
      CHECK(report.resid_rr_is_maff < 1e-12);
      CHECK(report.resid_or_is_lambda < 1e-12);
      CHECK(report.resid_rr_or_link < 1e-12);
      CHECK(report.resid_adjust_roundtrip < 1e-12);
    }
  }

  TEST_CASE("proposition preconditions") {
    maff::PopulationSpec pop;
    pop.a = 0.0;
    pop.b = 0.0;
    CHECK_THROWS_AS(maff::verify_propositions(pop), maff::ArgumentError);
    pop.a = 0.3;
    pop.b = 1.0;
    CHECK_THROWS_AS(maff::verify_propositions(pop), maff::ArgumentError);
    pop.b = 0.2;
    pop.pos_prob = 0.1;  // below a
    CHECK_THROWS_AS(maff::verify_propositions(pop), maff::ArgumentError);
    pop.independent = false;
    CHECK_THROWS_AS(maff::verify_propositions(pop), maff::ArgumentError);
  }

  TEST_CASE("sampled tables converge to the population plims") {
    maff::PopulationSpec pop;
    pop.a = 0.08;
    pop.b = 0.05;
    pop.pos_prob = 0.6;
    const auto report = maff::verify_propositions(pop);
    const auto table = maff::sample_population_table(pop, 2000000, 99);
    const auto rr = maff::maff_rr_table(table);
    const auto orr = maff::maff_or_table(table);
    CHECK(std::abs(rr.estimate - report.rr_plim) < 0.01);
    CHECK(std::abs(orr.estimate - report.or_plim) < 0.01);
    // Determinism of the sampler.
    const auto again = maff::sample_population_table(pop, 2000000, 99);
    CHECK(again.febrile_positive == table.febrile_positive);
    CHECK(again.afebrile_zero == table.afebrile_zero);
  }

  TEST_CASE("logistic regression recovers generating coefficients") {
    // logit P(fever | D) = a + b log(1 + D) with a = -2, b = 0.35.
    maff::Rng rng(7, 0);
    maff::SurveyDataset data;
    for (int i = 0; i < 20000; ++i) {
      const double d = rng.u01() < 0.3 ? 0.0 : rng.uniform(0.0, 20000.0);
      const double eta = -2.0 + 0.35 * std::log1p(d);
      const bool fever = rng.u01() < 1.0 / (1.0 + std::exp(-eta));
      data.records.push_back({fever, d});
    }
    const auto fit = maff::maff_logistic(data);
    CHECK(fit.converged);
    CHECK(fit.intercept == doctest::Approx(-2.0).epsilon(0.08));
    CHECK(fit.slope == doctest::Approx(0.35).epsilon(0.08));
    CHECK(fit.risk_ratio > 1.0);
    CHECK(fit.estimate > 0.0);
    CHECK_FALSE(fit.out_of_range);
  }

  TEST_CASE("power-logistic profiles the exponent") {
    // logit P(fever | D) = -2.5 + 0.04 D^0.5.
    maff::Rng rng(13, 0);
    maff::SurveyDataset data;
    for (int i = 0; i < 20000; ++i) {
      const double d = rng.u01() < 0.3 ? 0.0 : rng.uniform(0.0, 30000.0);
      const double eta = -2.5 + 0.04 * std::pow(d, 0.5);
      const bool fever = rng.u01() < 1.0 / (1.0 + std::exp(-eta));
      data.records.push_back({fever, d});
    }
    const auto fit = maff::maff_power_logistic(data);
    CHECK(fit.converged);
    CHECK(std::abs(std::log(fit.exponent / 0.5)) < 0.2);
    CHECK(fit.risk_ratio > 1.0);
    CHECK(fit.estimate > 0.0);
  }

  TEST_CASE("degenerate tables raise estimation errors") {
    maff::SummaryTable t;
    t.afebrile_zero = 50;
    t.febrile_zero = 5;
    CHECK_THROWS_AS(maff::maff_rr_table(t), maff::EstimationError);
    t = {};
    t.afebrile_positive = 50;
    t.febrile_positive = 5;
    CHECK_THROWS_AS(maff::maff_rr_table(t), maff::EstimationError);
    CHECK_THROWS_AS(maff::maff_or_table(t), maff::EstimationError);
  }
}
