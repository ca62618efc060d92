#include "maff/gmodel.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "maff/errors.hpp"

namespace maff {

std::vector<double> Grid::scaled() const {
  std::vector<double> out(values.size());
  for (std::size_t j = 0; j < values.size(); ++j) out[j] = beta * values[j];
  return out;
}

void Grid::validate() const {
  if (values.size() < 2) throw ValidationError("grid needs at least 2 points");
  if (values.front() != 0.0)
    throw ValidationError("grid must start at exactly 0");
  if (!(beta > 0.0) || beta > 1.0)
    throw ValidationError("beta must lie in (0, 1]");
  const double step = values[1] - values[0];
  if (!(step > 0.0)) throw ValidationError("grid must be strictly increasing");
  for (std::size_t j = 1; j < values.size(); ++j) {
    const double d = values[j] - values[j - 1];
    if (!(d > 0.0)) throw ValidationError("grid must be strictly increasing");
    if (std::abs(d - step) > 1e-9 * step)
      throw ValidationError("grid must be equispaced");
  }
}

Grid Grid::equispaced(double max_value, std::size_t k, double beta) {
  if (!(max_value > 0.0)) throw ArgumentError("grid max must be positive");
  if (k < 2) throw ArgumentError("grid needs at least 2 points");
  Grid g;
  g.beta = beta;
  g.values.resize(k);
  for (std::size_t j = 0; j < k; ++j)
    g.values[j] = max_value * static_cast<double>(j) /
                  static_cast<double>(k - 1);
  g.validate();
  return g;
}

double DiscreteDensity::sum() const {
  double s = 0.0;
  for (double m : mass) s += m;
  return s;
}

void DiscreteDensity::validate(double tol) const {
  if (mass.empty()) throw ValidationError("empty density");
  for (double m : mass)
    if (!(m >= 0.0)) throw ValidationError("density has a negative mass");
  if (std::abs(sum() - 1.0) > tol)
    throw ValidationError("density masses do not sum to 1");
}

double DiscreteDensity::mean(const std::vector<double> &support) const {
  if (support.size() != mass.size())
    throw ArgumentError("support/mass length mismatch");
  double s = 0.0;
  for (std::size_t j = 0; j < mass.size(); ++j) s += mass[j] * support[j];
  return s;
}

DiscreteDensity density(const Matrix &q, const std::vector<double> &alpha,
                        const std::vector<double> &offset) {
  if (alpha.size() != q.cols())
    throw ArgumentError("alpha length " + std::to_string(alpha.size()) +
                        " does not match basis df " + std::to_string(q.cols()));
  if (!offset.empty() && offset.size() != q.rows())
    throw ArgumentError("offset length does not match basis rows");
  const std::size_t k = q.rows();
  if (k == 0) throw ArgumentError("empty basis");

  DiscreteDensity g;
  g.mass.resize(k);
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < k; ++j) {
    double e = offset.empty() ? 0.0 : offset[j];
    const double *row = q.row(j);
    for (std::size_t c = 0; c < q.cols(); ++c) e += row[c] * alpha[c];
    g.mass[j] = e;
    if (e > peak) peak = e;
  }
  // log-sum-exp with the max subtracted keeps the normalizer finite.
  double total = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    g.mass[j] = std::exp(g.mass[j] - peak);
    total += g.mass[j];
  }
  const double inv = 1.0 / total;
  for (std::size_t j = 0; j < k; ++j) g.mass[j] *= inv;
  return g;
}

Matrix log_density_gradient(const Matrix &q, const std::vector<double> &alpha,
                            const std::vector<double> &offset) {
  const DiscreteDensity g = density(q, alpha, offset);
  const std::size_t k = q.rows();
  const std::size_t m = q.cols();
  std::vector<double> mean(m, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    const double *row = q.row(j);
    for (std::size_t c = 0; c < m; ++c) mean[c] += g.mass[j] * row[c];
  }
  Matrix out(k, m);
  for (std::size_t j = 0; j < k; ++j) {
    const double *row = q.row(j);
    for (std::size_t c = 0; c < m; ++c) out(j, c) = row[c] - mean[c];
  }
  return out;
}

DiscreteDensity positive_support_density(const Matrix &q_positive,
                                         const std::vector<double> &alpha) {
  const DiscreteDensity inner = density(q_positive, alpha);
  DiscreteDensity g;
  g.mass.resize(inner.mass.size() + 1);
  g.mass[0] = 0.0;
  for (std::size_t j = 0; j < inner.mass.size(); ++j)
    g.mass[j + 1] = inner.mass[j];
  return g;
}

}  // namespace maff
