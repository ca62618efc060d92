#ifndef MAFF_OPTIM_HPP
#define MAFF_OPTIM_HPP

#include <cstddef>
#include <functional>
#include <vector>

namespace maff {

struct BoxBounds {
  std::vector<double> lower;  // -inf for a free coordinate
  std::vector<double> upper;  // +inf for a free coordinate
};

struct OptimResult {
  std::vector<double> x;
  double value = 0.0;             // minimized objective at x
  double projected_grad_norm = 0.0;  // sup norm
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  bool converged = false;
  std::vector<double> value_history;  // accepted objective values, descending
};

struct OptimOptions {
  std::size_t max_iterations = 2000;
  double grad_tol = 1e-6;   // on the sup norm of the projected gradient
  std::size_t memory = 10;  // quasi-Newton correction pairs
};

// Objective callback: fills grad (same length as x) and returns f(x).
using Objective =
    std::function<double(const std::vector<double> &, std::vector<double> &)>;

// Minimizes f over a box with a limited-memory BFGS direction, projected
// backtracking line search, and convergence on the projected gradient.
OptimResult minimize_box_lbfgs(const Objective &f, std::vector<double> x0,
                               const BoxBounds &bounds,
                               const OptimOptions &options = {});

}  // namespace maff

#endif
