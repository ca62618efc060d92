#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "maff/errors.hpp"
#include "maff/kernels.hpp"

TEST_SUITE("kernels") {
  TEST_CASE("poisson pinned values") {
    const auto k = maff::MeasurementKernel::poisson();
    // density 40/ul <-> slide mean 1: P(count=1) = P(count=0) = e^-1.
    CHECK(maff::kernel_prob(k, 40.0, 40.0) ==
          doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
    CHECK(maff::kernel_prob(k, 0.0, 40.0) ==
          doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
    CHECK(maff::kernel_prob(k, 80.0, 40.0) ==
          doctest::Approx(0.5 * std::exp(-1.0)).epsilon(1e-14));
    // Latent zero density: all mass on the zero count.
    CHECK(maff::kernel_prob(k, 0.0, 0.0) == doctest::Approx(1.0));
    CHECK(maff::kernel_prob(k, 40.0, 0.0) == doctest::Approx(0.0));
  }

  TEST_CASE("negative binomial pinned values") {
    const auto k = maff::MeasurementKernel::negbin(6.0);
    // Zero count at slide mean 1: (r/(r+1))^r = (6/7)^6.
    CHECK(maff::kernel_prob(k, 0.0, 40.0) ==
          doctest::Approx(std::pow(6.0 / 7.0, 6.0)).epsilon(1e-14));
    // One count: r * (r/(r+mu))^r * mu/(r+mu).
    CHECK(maff::kernel_prob(k, 40.0, 40.0) ==
          doctest::Approx(6.0 * std::pow(6.0 / 7.0, 6.0) / 7.0)
              .epsilon(1e-13));
  }

  TEST_CASE("negative binomial approaches poisson as r grows") {
    const auto nb = maff::MeasurementKernel::negbin(1e6);
    const auto po = maff::MeasurementKernel::poisson();
    for (double d : {40.0, 400.0, 1200.0, 2000.0}) {  // means 1..50
      double tv = 0.0;
      for (int c = 0; c <= 400; ++c) {
        const double x = 40.0 * c;
        tv += 0.5 * std::abs(maff::kernel_prob(nb, x, d) -
                             maff::kernel_prob(po, x, d));
      }
      CHECK(tv <= 1e-3);
    }
  }

  TEST_CASE("wbc mixture with a point mass at 8000 equals plain negbin") {
    const auto plain = maff::MeasurementKernel::negbin(6.0);
    const auto point = maff::MeasurementKernel::wbc_negbin(
        6.0, {{8000.0, 1.0}});
    for (double d : {0.0, 40.0, 320.0, 4000.0})
      for (double x : {0.0, 40.0, 80.0, 400.0})
        CHECK(maff::kernel_prob(point, x, d) ==
              doctest::Approx(maff::kernel_prob(plain, x, d))
                  .epsilon(1e-14));
  }

  TEST_CASE("default wbc distribution is a proper mixture") {
    const auto atoms = maff::default_wbc_distribution();
    REQUIRE(atoms.size() == 9);
    double total = 0.0;
    for (const auto &a : atoms) {
      CHECK(a.prob > 0.0);
      CHECK(a.wbc >= 4000.0);
      CHECK(a.wbc <= 12000.0);
      total += a.prob;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("exact kernel is an identity check") {
    const auto k = maff::MeasurementKernel::exact();
    CHECK(maff::kernel_prob(k, 123.5, 123.5) == 1.0);
    CHECK(maff::kernel_prob(k, 123.5, 123.0) == 0.0);
  }

  TEST_CASE("non-lattice observations are flagged as rounded") {
    const auto k = maff::MeasurementKernel::poisson();
    bool rounded = false;
    maff::kernel_prob(k, 37.0, 40.0, &rounded);
    CHECK(rounded);
    rounded = false;
    maff::kernel_prob(k, 80.0, 40.0, &rounded);
    CHECK_FALSE(rounded);
    // 37/ul rounds to count 1, same as 40/ul.
    CHECK(maff::kernel_prob(k, 37.0, 40.0) ==
          doctest::Approx(maff::kernel_prob(k, 40.0, 40.0)));
  }

  TEST_CASE("kernel matrix rows agree with pointwise evaluation") {
    const auto k = maff::MeasurementKernel::negbin(6.0);
    const std::vector<double> obs = {0.0, 40.0, 37.0, 160.0};
    const std::vector<double> support = {0.0, 50.0, 100.0, 150.0, 200.0};
    std::size_t rounded = 0;
    const maff::Matrix m = maff::kernel_matrix(k, obs, support, &rounded);
    CHECK(rounded == 1);
    const maff::Matrix lm = maff::kernel_log_matrix(k, obs, support);
    for (std::size_t i = 0; i < obs.size(); ++i)
      for (std::size_t j = 0; j < support.size(); ++j) {
        CHECK(m(i, j) ==
              doctest::Approx(maff::kernel_prob(k, obs[i], support[j]))
                  .epsilon(1e-14));
        if (m(i, j) > 0.0)
          CHECK(std::exp(lm(i, j)) ==
                doctest::Approx(m(i, j)).epsilon(1e-12));
      }
  }

  TEST_CASE("kernel validation") {
    CHECK_THROWS_AS(maff::MeasurementKernel::negbin(0.0).validate(),
                    maff::ValidationError);
    CHECK_THROWS_AS(maff::MeasurementKernel::negbin(-3.0).validate(),
                    maff::ValidationError);
    CHECK_THROWS_AS(
        maff::MeasurementKernel::wbc_negbin(6.0, {{8000.0, -0.5}}).validate(),
        maff::ValidationError);
    maff::MeasurementKernel half = maff::MeasurementKernel::wbc_negbin(
        6.0, {{8000.0, 0.5}});
    CHECK_THROWS_AS(half.validate(), maff::ValidationError);
  }

  TEST_CASE("dispersion recovery from noiseless false-negative fractions") {
    // With expected negatives slides * (r/(r + mean/40))^r the profile
    // likelihood peaks at the generating r.
    const double r_true = 6.0;
    std::vector<maff::FalseNegativeRecord> records;
    for (int level = 1; level <= 15; ++level) {
      maff::FalseNegativeRecord rec;
      rec.mean_density = 40.0 * level * 1.5;
      rec.slides = 25.0;
      const double mu = rec.mean_density / 40.0;
      rec.negatives = 25.0 * std::pow(r_true / (r_true + mu), r_true);
      records.push_back(rec);
    }
    const maff::DispersionFit fit = maff::estimate_dispersion(records);
    CHECK(fit.r_hat == doctest::Approx(6.0).epsilon(1e-3));
  }

  TEST_CASE("dispersion is non-identifiable for degenerate data") {
    std::vector<maff::FalseNegativeRecord> all_neg, all_pos;
    for (int level = 1; level <= 5; ++level) {
      maff::FalseNegativeRecord rec;
      rec.mean_density = 40.0 * level;
      rec.slides = 10.0;
      rec.negatives = 10.0;
      all_neg.push_back(rec);
      rec.negatives = 0.0;
      all_pos.push_back(rec);
    }
    CHECK_THROWS_AS(maff::estimate_dispersion(all_neg),
                    maff::NonIdentifiableError);
    CHECK_THROWS_AS(maff::estimate_dispersion(all_pos),
                    maff::NonIdentifiableError);
    CHECK_THROWS_AS(maff::estimate_dispersion({}), maff::ArgumentError);
  }

  TEST_CASE("false-negative csv parsing") {
    std::istringstream in(
        "mean_density,negatives,slides\n4000,3,25\n8000,1,25\n");
    const auto records = maff::parse_false_negative_csv(in);
    REQUIRE(records.size() == 2);
    CHECK(records[0].mean_density == 4000.0);
    CHECK(records[0].negatives == 3.0);
    CHECK(records[1].slides == 25.0);
    // Out-of-range counts parse but are rejected by the estimator.
    std::istringstream bad("mean_density,negatives,slides\n4000,30,25\n");
    const auto parsed = maff::parse_false_negative_csv(bad);
    CHECK_THROWS_AS(maff::estimate_dispersion(parsed),
                    maff::ValidationError);
    std::istringstream garbled("mean_density,negatives,slides\n4000,x,25\n");
    CHECK_THROWS_AS(maff::parse_false_negative_csv(garbled),
                    maff::ParseError);
  }

  TEST_CASE("wbc csv parsing") {
    std::istringstream in("wbc,prob\n6000,0.25\n8000,0.75\n");
    const auto atoms = maff::parse_wbc_csv(in);
    REQUIRE(atoms.size() == 2);
    CHECK(atoms[0].wbc == 6000.0);
    CHECK(atoms[1].prob == 0.75);
    std::istringstream garbled("wbc,prob\n6000,0.5,9\n");
    CHECK_THROWS_AS(maff::parse_wbc_csv(garbled), maff::ParseError);
  }
}
