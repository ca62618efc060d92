#ifndef MAFF_SPLINES_HPP
#define MAFF_SPLINES_HPP

#include <cstddef>
#include <vector>

#include "maff/matrix.hpp"

namespace maff {

// Natural cubic spline basis evaluated at a set of points, plus the knot
// layout it was built from.  Columns of `values` are standardized to mean
// zero and unit sum of squares unless construct_raw was used.
struct BasisMatrix {
  Matrix values;               // points x df
  std::vector<double> knots;   // boundary + interior, ascending
  std::size_t df = 0;
  bool standardized = false;
};

// Natural cubic spline basis functions with the intercept excluded:
//   N_1(x) = x,  N_{j+1}(x) = d_j(x) - d_{M-1}(x),
//   d_j(x) = ((x - k_j)_+^3 - (x - k_M)_+^3) / (k_M - k_j)
// for knots k_1 < ... < k_M.  Every column is linear outside the boundary
// knots.  df = M - 1 columns.
class NaturalSplineBasis {
 public:
  // Knots from the points themselves: boundary knots at min/max, interior
  // knots at the (1/df, ..., (df-1)/df) quantiles.
  NaturalSplineBasis(const std::vector<double> &points, std::size_t df);

  // Caller-chosen knots (ascending, >= 2 of them); df = knots - 1.
  explicit NaturalSplineBasis(std::vector<double> knots);

  std::size_t df() const { return knots_.size() - 1; }
  const std::vector<double> &knots() const { return knots_; }

  // One row of the basis; x may lie outside the boundary knots, where the
  // basis continues linearly.
  std::vector<double> evaluate(double x) const;

  // Full basis matrix at the given points (unstandardized).
  Matrix matrix(const std::vector<double> &points) const;

 private:
  std::vector<double> knots_;
};

// Builds the standardized basis at `points` (knots derived from them).
// points must be strictly increasing with at least df + 1 values.
BasisMatrix natural_spline_basis(const std::vector<double> &points,
                                 std::size_t df);

// As above but without standardizing the columns.
BasisMatrix natural_spline_basis_raw(const std::vector<double> &points,
                                     std::size_t df);

// Centers each column to mean zero and rescales it to unit sum of squares.
// Throws ValidationError on a (numerically) constant column.  Idempotent.
void standardize_columns(Matrix &m);

// Type-7 sample quantile of ascending values.
double quantile(const std::vector<double> &sorted_values, double prob);

}  // namespace maff

#endif
