#include "maff/optim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "maff/errors.hpp"

namespace maff {

namespace {

double dot(const std::vector<double> &a, const std::vector<double> &b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void clamp_to_box(std::vector<double> &x, const BoxBounds &bounds) {
  if (bounds.lower.empty() && bounds.upper.empty()) return;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!bounds.lower.empty()) x[i] = std::max(x[i], bounds.lower[i]);
    if (!bounds.upper.empty()) x[i] = std::min(x[i], bounds.upper[i]);
  }
}

// sup norm of x - proj(x - g): zero exactly at a box-constrained optimum.
double projected_gradient_norm(const std::vector<double> &x,
                               const std::vector<double> &g,
                               const BoxBounds &bounds) {
  double norm = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double step = x[i] - g[i];
    if (!bounds.lower.empty()) step = std::max(step, bounds.lower[i]);
    if (!bounds.upper.empty()) step = std::min(step, bounds.upper[i]);
    norm = std::max(norm, std::abs(x[i] - step));
  }
  return norm;
}

}  // namespace

OptimResult minimize_box_lbfgs(const Objective &f, std::vector<double> x0,
                               const BoxBounds &bounds,
                               const OptimOptions &options) {
  const std::size_t n = x0.size();
  if (n == 0) throw ArgumentError("empty parameter vector");
  if (!bounds.lower.empty() && bounds.lower.size() != n)
    throw ArgumentError("lower bound length mismatch");
  if (!bounds.upper.empty() && bounds.upper.size() != n)
    throw ArgumentError("upper bound length mismatch");

  OptimResult result;
  result.x = std::move(x0);
  clamp_to_box(result.x, bounds);

  std::vector<double> grad(n);
  double value = f(result.x, grad);
  result.evaluations = 1;
  result.value_history.push_back(value);
  if (!std::isfinite(value))
    throw EstimationError("objective is not finite at the starting point");

  struct Pair {
    std::vector<double> s, y;
    double rho;
  };
  std::deque<Pair> memory;

  std::vector<double> masked(n), direction(n), x_new(n), grad_new(n);
  std::vector<double> x_fb(n), grad_fb(n);
  const double bound_eps = 1e-12;
  int stalled = 0;

  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    result.iterations = iter;
    result.projected_grad_norm =
        projected_gradient_norm(result.x, grad, bounds);
    if (result.projected_grad_norm <= options.grad_tol) {
      result.converged = true;
      break;
    }

    // Gradient with outward components at active bounds zeroed, so the
    // quasi-Newton direction stays inside the box where it matters.
    masked = grad;
    for (std::size_t i = 0; i < n; ++i) {
      const bool at_lower = !bounds.lower.empty() &&
                            result.x[i] <= bounds.lower[i] + bound_eps &&
                            grad[i] > 0.0;
      const bool at_upper = !bounds.upper.empty() &&
                            result.x[i] >= bounds.upper[i] - bound_eps &&
                            grad[i] < 0.0;
      if (at_lower || at_upper) masked[i] = 0.0;
    }

    // Two-loop recursion for the L-BFGS direction.
    direction = masked;
    std::vector<double> a(memory.size());
    for (std::size_t i = memory.size(); i-- > 0;) {
      a[i] = memory[i].rho * dot(memory[i].s, direction);
      for (std::size_t c = 0; c < n; ++c)
        direction[c] -= a[i] * memory[i].y[c];
    }
    if (!memory.empty()) {
      const Pair &last = memory.back();
      const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
      for (double &c : direction) c *= gamma;
    }
    for (std::size_t i = 0; i < memory.size(); ++i) {
      const double b = memory[i].rho * dot(memory[i].y, direction);
      for (std::size_t c = 0; c < n; ++c)
        direction[c] += (a[i] - b) * memory[i].s[c];
    }
    for (double &c : direction) c = -c;
    for (std::size_t i = 0; i < n; ++i)
      if (masked[i] == 0.0 && grad[i] != 0.0) direction[i] = 0.0;

    if (dot(direction, masked) >= 0.0) {  // not a descent direction: reset
      memory.clear();
      for (std::size_t i = 0; i < n; ++i) direction[i] = -masked[i];
    }

    // Backtracking Armijo search along the projected path.  A freshly
    // reset memory gives the raw gradient as direction, whose natural
    // step is 1/|g| rather than the quasi-Newton unit step.
    const double c1 = 1e-4;
    double step = 1.0;
    if (memory.empty()) {
      double dir_norm = 0.0;
      for (double c : direction) dir_norm = std::max(dir_norm, std::abs(c));
      if (dir_norm > 1.0) step = 1.0 / dir_norm;
    }
    // Near the optimum the objective flattens below double resolution while
    // the gradient is still accurately computable, so a trial point that
    // leaves the value numerically unchanged but shrinks the projected
    // gradient is kept as a fallback when the Armijo test cannot fire.
    const double flat_tol =
        4.0 * std::numeric_limits<double>::epsilon() *
        std::max(1.0, std::abs(value));
    bool accepted = false;
    bool have_fallback = false;
    double value_fb = value;
    double pg_fb = result.projected_grad_norm * (1.0 - 1e-6);
    double value_new = value;
    for (int halving = 0; halving < 60; ++halving) {
      for (std::size_t i = 0; i < n; ++i)
        x_new[i] = result.x[i] + step * direction[i];
      clamp_to_box(x_new, bounds);
      double moved = 0.0;
      double predicted = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = x_new[i] - result.x[i];
        moved = std::max(moved, std::abs(d));
        predicted += grad[i] * d;
      }
      if (moved == 0.0) break;
      value_new = f(x_new, grad_new);
      ++result.evaluations;
      if (std::isfinite(value_new) && value_new < value + c1 * predicted) {
        accepted = true;
        break;
      }
      if (std::isfinite(value_new) && value_new <= value + flat_tol) {
        const double pg_try = projected_gradient_norm(x_new, grad_new, bounds);
        if (pg_try < pg_fb) {
          x_fb = x_new;
          grad_fb = grad_new;
          value_fb = value_new;
          pg_fb = pg_try;
          have_fallback = true;
        }
      }
      step *= 0.5;
    }
    if (!accepted && have_fallback) {
      x_new = x_fb;
      grad_new = grad_fb;
      value_new = value_fb;
      accepted = true;
    }
    if (!accepted) {
      // No progress possible at double precision; report where we stand.
      result.projected_grad_norm =
          projected_gradient_norm(result.x, grad, bounds);
      result.converged = result.projected_grad_norm <= options.grad_tol;
      break;
    }
    // A step that changes neither the value nor the stationarity measure is
    // numerical noise; a few in a row means the search cannot proceed.
    const double pg_new = projected_gradient_norm(x_new, grad_new, bounds);
    if (value - value_new <= flat_tol &&
        pg_new >= result.projected_grad_norm * (1.0 - 1e-4)) {
      if (++stalled >= 8) {
        result.x = x_new;
        grad = grad_new;
        result.value = value_new;
        result.projected_grad_norm = pg_new;
        result.converged = pg_new <= options.grad_tol;
        value = value_new;
        result.value_history.push_back(value);
        break;
      }
    } else {
      stalled = 0;
    }

    Pair pair;
    pair.s.resize(n);
    pair.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      pair.s[i] = x_new[i] - result.x[i];
      pair.y[i] = grad_new[i] - grad[i];
    }
    const double sy = dot(pair.s, pair.y);
    if (sy > 1e-10 * std::sqrt(dot(pair.s, pair.s) * dot(pair.y, pair.y))) {
      pair.rho = 1.0 / sy;
      memory.push_back(std::move(pair));
      if (memory.size() > options.memory) memory.pop_front();
    }

    result.x = x_new;
    grad = grad_new;
    value = value_new;
    result.value_history.push_back(value);
  }

  result.value = value;
  if (!result.converged)
    result.projected_grad_norm =
        projected_gradient_norm(result.x, grad, bounds);
  return result;
}

}  // namespace maff
