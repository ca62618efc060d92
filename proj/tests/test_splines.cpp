#include <doctest.h>

#include <cmath>
#include <vector>

#include "maff/errors.hpp"
#include "maff/matrix.hpp"
#include "maff/rng.hpp"
#include "maff/splines.hpp"

namespace {

// Independent reference: natural cubic spline basis through the truncated
// power construction, written separately from the library (long double
// arithmetic, explicit loops) so the two can disagree.
std::vector<std::vector<double>> reference_basis(
    const std::vector<double> &points, const std::vector<double> &knots) {
  const std::size_t total = knots.size();
  auto cube = [](long double v) { return v > 0.0L ? v * v * v : 0.0L; };
  std::vector<std::vector<double>> rows;
  for (double xi : points) {
    const long double x = xi;
    const long double last = knots[total - 1];
    std::vector<long double> d(total - 1);
    for (std::size_t j = 0; j + 1 < total; ++j)
      d[j] = (cube(x - (long double)knots[j]) - cube(x - last)) /
             (last - (long double)knots[j]);
    std::vector<double> row;
    row.push_back(static_cast<double>(x));
    for (std::size_t j = 0; j + 2 < total; ++j)
      row.push_back(static_cast<double>(d[j] - d[total - 2]));
    rows.push_back(row);
  }
  return rows;
}

std::vector<double> equispaced(double lo, double hi, std::size_t k) {
  std::vector<double> out(k);
  for (std::size_t i = 0; i < k; ++i)
    out[i] = lo + (hi - lo) * static_cast<double>(i) /
                      static_cast<double>(k - 1);
  return out;
}

}  // namespace

TEST_SUITE("splines") {
  TEST_CASE("type-7 quantiles") {
    CHECK(maff::quantile({1, 2, 3, 4}, 0.5) == doctest::Approx(2.5));
    CHECK(maff::quantile({10, 20, 30}, 0.25) == doctest::Approx(15.0));
    CHECK(maff::quantile({5}, 0.99) == doctest::Approx(5.0));
    CHECK(maff::quantile({0, 100}, 0.0) == doctest::Approx(0.0));
    CHECK(maff::quantile({0, 100}, 1.0) == doctest::Approx(100.0));
    CHECK_THROWS_AS(maff::quantile({}, 0.5), maff::ArgumentError);
  }

  TEST_CASE("matches an independent construction entrywise") {
    const std::vector<double> points = equispaced(0.0, 100.0, 21);
    const auto basis = maff::natural_spline_basis_raw(points, 4);
    REQUIRE(basis.knots == std::vector<double>{0, 25, 50, 75, 100});
    const auto expected = reference_basis(points, basis.knots);
    REQUIRE(basis.values.rows() == 21);
    REQUIRE(basis.values.cols() == 4);
    for (std::size_t i = 0; i < 21; ++i)
      for (std::size_t j = 0; j < 4; ++j)
        CHECK(basis.values(i, j) ==
              doctest::Approx(expected[i][j]).epsilon(1e-8));
  }

  TEST_CASE("df=1 reduces to the affine column") {
    const auto basis = maff::natural_spline_basis_raw({0, 1, 2, 3}, 1);
    REQUIRE(basis.values.cols() == 1);
    for (std::size_t i = 0; i < 4; ++i)
      CHECK(basis.values(i, 0) == doctest::Approx(double(i)));
  }

  TEST_CASE("columns are linear beyond the boundary knots") {
    const std::vector<double> points = equispaced(0.0, 50.0, 26);
    maff::NaturalSplineBasis basis(points, 5);
    const double hi = points.back();
    const double lo = points.front();
    for (double base : {hi + 3.0, lo - 9.0}) {
      const auto r0 = basis.evaluate(base);
      const auto r1 = basis.evaluate(base + 2.0);
      const auto r2 = basis.evaluate(base + 4.0);
      for (std::size_t j = 0; j < r0.size(); ++j) {
        const double second_diff = r2[j] - 2.0 * r1[j] + r0[j];
        CHECK(std::abs(second_diff) < 1e-8);
      }
    }
  }

  TEST_CASE("standardize: forced three-point column") {
    maff::Matrix m(3, 1);
    m(0, 0) = 1;
    m(1, 0) = 2;
    m(2, 0) = 3;
    maff::standardize_columns(m);
    const double r = 1.0 / std::sqrt(2.0);
    CHECK(m(0, 0) == doctest::Approx(-r).epsilon(1e-14));
    CHECK(m(1, 0) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(m(2, 0) == doctest::Approx(r).epsilon(1e-14));
  }

  TEST_CASE("standardize: random matrix gains mean zero and unit SS") {
    maff::Rng rng(42, 0);
    maff::Matrix m(10, 3);
    for (std::size_t i = 0; i < 10; ++i)
      for (std::size_t j = 0; j < 3; ++j) m(i, j) = rng.uniform(-5.0, 5.0);
    maff::standardize_columns(m);
    for (std::size_t j = 0; j < 3; ++j) {
      double mean = 0.0, ss = 0.0;
      for (std::size_t i = 0; i < 10; ++i) {
        mean += m(i, j);
        ss += m(i, j) * m(i, j);
      }
      CHECK(std::abs(mean / 10.0) < 1e-12);
      CHECK(std::abs(ss - 1.0) < 1e-12);
    }
    maff::Matrix twice = m;
    maff::standardize_columns(twice);
    for (std::size_t i = 0; i < 10; ++i)
      for (std::size_t j = 0; j < 3; ++j)
        CHECK(twice(i, j) == doctest::Approx(m(i, j)).epsilon(1e-14));
  }

  TEST_CASE("standardize: constant column is rejected") {
    maff::Matrix m(4, 1);
    for (std::size_t i = 0; i < 4; ++i) m(i, 0) = 7.5;
    CHECK_THROWS_AS(maff::standardize_columns(m), maff::ValidationError);
  }

  TEST_CASE("standardized basis has full column rank") {
    const std::vector<double> points = equispaced(0.0, 4000.0, 31);
    auto basis = maff::natural_spline_basis(points, 5);
    const maff::ThinQr qr = maff::thin_qr(basis.values);
    for (std::size_t j = 0; j < 5; ++j) CHECK(qr.r(j, j) > 1e-10);
  }

  TEST_CASE("construction is deterministic") {
    const std::vector<double> points = equispaced(0.0, 1000.0, 41);
    const auto a = maff::natural_spline_basis(points, 6);
    const auto b = maff::natural_spline_basis(points, 6);
    for (std::size_t i = 0; i < a.values.rows(); ++i)
      for (std::size_t j = 0; j < a.values.cols(); ++j)
        CHECK(a.values(i, j) == b.values(i, j));
  }

  TEST_CASE("input validation") {
    CHECK_THROWS_AS(maff::natural_spline_basis_raw({0, 1, 2}, 0),
                    maff::ArgumentError);
    CHECK_THROWS_AS(maff::natural_spline_basis_raw({0, 1, 2}, 3),
                    maff::ArgumentError);
    CHECK_THROWS_AS(maff::natural_spline_basis_raw({0, 1, 1, 2}, 2),
                    maff::ValidationError);
  }

  TEST_CASE("triangular helpers invert consistently") {
    maff::Rng rng(7, 0);
    maff::Matrix m(12, 4);
    for (std::size_t i = 0; i < 12; ++i)
      for (std::size_t j = 0; j < 4; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
    const maff::ThinQr qr = maff::thin_qr(m);
    // u has orthonormal columns and u r reproduces m.
    for (std::size_t a = 0; a < 4; ++a)
      for (std::size_t b = 0; b < 4; ++b) {
        double d = 0.0;
        for (std::size_t i = 0; i < 12; ++i) d += qr.u(i, a) * qr.u(i, b);
        CHECK(std::abs(d - (a == b ? 1.0 : 0.0)) < 1e-12);
      }
    for (std::size_t i = 0; i < 12; ++i)
      for (std::size_t j = 0; j < 4; ++j) {
        double v = 0.0;
        for (std::size_t c = 0; c < 4; ++c) v += qr.u(i, c) * qr.r(c, j);
        CHECK(v == doctest::Approx(m(i, j)).epsilon(1e-12));
      }
    const std::vector<double> x = {0.3, -1.2, 2.5, 0.7};
    const auto y = maff::upper_apply(qr.r, x);
    const auto back = maff::upper_solve(qr.r, y);
    for (std::size_t i = 0; i < 4; ++i)
      CHECK(back[i] == doctest::Approx(x[i]).epsilon(1e-12));
    const auto yt = maff::upper_transpose_apply(qr.r, x);
    const auto backt = maff::upper_transpose_solve(qr.r, yt);
    for (std::size_t i = 0; i < 4; ++i)
      CHECK(backt[i] == doctest::Approx(x[i]).epsilon(1e-12));
  }
}
