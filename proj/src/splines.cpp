#include "maff/splines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "maff/errors.hpp"

namespace maff {

double quantile(const std::vector<double> &sorted_values, double prob) {
  if (sorted_values.empty()) throw ArgumentError("quantile of empty vector");
  const std::size_t n = sorted_values.size();
  const double h = (static_cast<double>(n) - 1.0) * prob;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, n - 1);
  const double w = h - static_cast<double>(lo);
  return (1.0 - w) * sorted_values[lo] + w * sorted_values[hi];
}

static std::vector<double> knots_from_points(const std::vector<double> &points,
                                             std::size_t df) {
  if (df < 1) throw ArgumentError("spline df must be >= 1");
  if (points.size() < df + 1)
    throw ArgumentError("need at least df + 1 points to place spline knots");
  for (std::size_t i = 1; i < points.size(); ++i)
    if (!(points[i] > points[i - 1]))
      throw ValidationError("spline points must be strictly increasing");

  std::vector<double> knots;
  knots.reserve(df + 1);
  knots.push_back(points.front());
  for (std::size_t j = 1; j < df; ++j)
    knots.push_back(quantile(points, static_cast<double>(j) /
                                         static_cast<double>(df)));
  knots.push_back(points.back());
  for (std::size_t i = 1; i < knots.size(); ++i)
    if (!(knots[i] > knots[i - 1]))
      throw ValidationError("spline knots collapsed; too few distinct points");
  return knots;
}

NaturalSplineBasis::NaturalSplineBasis(const std::vector<double> &points,
                                       std::size_t df)
    : knots_(knots_from_points(points, df)) {}

NaturalSplineBasis::NaturalSplineBasis(std::vector<double> knots)
    : knots_(std::move(knots)) {
  if (knots_.size() < 2) throw ArgumentError("need at least two spline knots");
  for (std::size_t i = 1; i < knots_.size(); ++i)
    if (!(knots_[i] > knots_[i - 1]))
      throw ValidationError("spline knots must be strictly increasing");
}

namespace {
inline double cube_plus(double v) { return v > 0.0 ? v * v * v : 0.0; }
}  // namespace

std::vector<double> NaturalSplineBasis::evaluate(double x) const {
  const std::size_t m = knots_.size();      // total knots
  std::vector<double> row(m - 1, 0.0);
  row[0] = x;
  if (m == 2) return row;                   // df = 1: affine column only
  const double last = knots_[m - 1];
  auto d = [&](std::size_t j) {
    return (cube_plus(x - knots_[j]) - cube_plus(x - last)) /
           (last - knots_[j]);
  };
  const double d_penultimate = d(m - 2);
  for (std::size_t j = 0; j + 2 < m; ++j) row[j + 1] = d(j) - d_penultimate;
  return row;
}

Matrix NaturalSplineBasis::matrix(const std::vector<double> &points) const {
  Matrix out(points.size(), df());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const std::vector<double> row = evaluate(points[i]);
    for (std::size_t j = 0; j < row.size(); ++j) out(i, j) = row[j];
  }
  return out;
}

void standardize_columns(Matrix &m) {
  const std::size_t rows = m.rows();
  if (rows == 0) throw ArgumentError("cannot standardize an empty matrix");
  for (std::size_t j = 0; j < m.cols(); ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < rows; ++i) mean += m(i, j);
    mean /= static_cast<double>(rows);
    double ss = 0.0;
    double peak = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
      m(i, j) -= mean;
      ss += m(i, j) * m(i, j);
      peak = std::max(peak, std::abs(m(i, j)) + std::abs(mean));
    }
    const double floor =
        std::numeric_limits<double>::epsilon() * peak * peak *
        static_cast<double>(rows);
    if (ss <= floor || ss == 0.0)
      throw ValidationError("basis column " + std::to_string(j) +
                            " is constant; cannot standardize");
    const double scale = 1.0 / std::sqrt(ss);
    for (std::size_t i = 0; i < rows; ++i) m(i, j) *= scale;
  }
}

BasisMatrix natural_spline_basis_raw(const std::vector<double> &points,
                                     std::size_t df) {
  NaturalSplineBasis basis(points, df);
  BasisMatrix out;
  out.values = basis.matrix(points);
  out.knots = basis.knots();
  out.df = df;
  out.standardized = false;
  return out;
}

BasisMatrix natural_spline_basis(const std::vector<double> &points,
                                 std::size_t df) {
  BasisMatrix out = natural_spline_basis_raw(points, df);
  standardize_columns(out.values);
  out.standardized = true;
  return out;
}

}  // namespace maff
