#include "maff/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "maff/errors.hpp"
#include "maff/optim.hpp"
#include "maff/splines.hpp"

namespace maff {

namespace {
constexpr double kProbMargin = 1e-6;  // box bound for p and lambda*
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Rescales each row of a log-probability matrix by its maximum: entries
// become exp(log f - max), offsets keep the true scale for the log
// likelihood.  A row whose maximum is -inf has no latent point that can
// produce the observation.
void scale_rows(Matrix &logf, std::vector<double> &offsets,
                const std::vector<double> &observations, const char *group) {
  offsets.resize(logf.rows());
  for (std::size_t i = 0; i < logf.rows(); ++i) {
    double peak = kNegInf;
    const double *row = logf.row(i);
    for (std::size_t j = 0; j < logf.cols(); ++j)
      peak = std::max(peak, row[j]);
    if (peak == kNegInf)
      throw InfeasibleSupportError(
          std::string(group) + " observation with density " +
          format_double(observations[i]) +
          " has zero probability at every latent grid point");
    offsets[i] = peak;
    double *mrow = logf.row(i);
    for (std::size_t j = 0; j < logf.cols(); ++j)
      mrow[j] = std::exp(mrow[j] - peak);
  }
}
}  // namespace

void FitConfig::validate() const {
  kernel.validate();
  if (!(beta > 0.0) || beta > 1.0)
    throw ArgumentError("beta must lie in (0, 1]");
  if (!(c0 >= 0.0)) throw ArgumentError("c0 must be nonnegative");
  if (m1 < 1 || m2 < 1) throw ArgumentError("spline df must be >= 1");
  if (!(penalty_eps > 0.0)) throw ArgumentError("penalty_eps must be > 0");
  if (!(grad_tol > 0.0)) throw ArgumentError("grad_tol must be > 0");
}

LikelihoodModel::LikelihoodModel(const SurveyDataset &dataset, const Grid &grid,
                                 const MeasurementKernel &kernel,
                                 std::size_t m1, std::size_t m2, double delta1)
    : grid_(grid), m1_(m1), m2_(m2) {
  dataset.validate();
  grid_.validate();
  kernel.validate();
  if (!(delta1 >= 0.0)) throw ArgumentError("delta1 must be nonnegative");
  if (dataset.febrile_count() == 0 || dataset.afebrile_count() == 0)
    throw ValidationError("need both febrile and afebrile records to fit");

  const std::vector<double> scaled = grid_.scaled();
  q1_ = natural_spline_basis(grid_.values, m1_).values;

  // g2 lives on the positive scaled grid points: build the basis on the
  // full scaled lattice, drop the d = 0 row, and re-standardize.
  Matrix full = natural_spline_basis_raw(scaled, m2_).values;
  q2_ = Matrix(full.rows() - 1, full.cols());
  for (std::size_t i = 1; i < full.rows(); ++i)
    for (std::size_t j = 0; j < full.cols(); ++j)
      q2_(i - 1, j) = full(i, j);
  standardize_columns(q2_);

  ThinQr qr1 = thin_qr(q1_);
  u1_ = std::move(qr1.u);
  r1_ = std::move(qr1.r);
  ThinQr qr2 = thin_qr(q2_);
  u2_ = std::move(qr2.u);
  r2_ = std::move(qr2.r);
  for (std::size_t j = 0; j < m1_; ++j)
    if (r1_(j, j) <= 1e-10)
      throw EstimationError("g1 spline basis is numerically rank deficient");
  for (std::size_t j = 0; j < m2_; ++j)
    if (r2_(j, j) <= 1e-10)
      throw EstimationError("g2 spline basis is numerically rank deficient");

  const std::vector<double> afebrile = dataset.afebrile_densities();
  const std::vector<double> febrile = dataset.febrile_densities();
  f_afebrile_ = kernel_log_matrix(kernel, afebrile, grid_.values, &rounded_);
  f_febrile_ = kernel_log_matrix(kernel, febrile, scaled, &rounded_);
  scale_rows(f_afebrile_, off_afebrile_, afebrile, "afebrile");
  scale_rows(f_febrile_, off_febrile_, febrile, "febrile");

  if (delta1 > 0.0) {
    tilt_.resize(grid_.size());
    for (std::size_t j = 0; j < grid_.size(); ++j)
      tilt_[j] = delta1 * grid_.values[j];
  }
}

std::vector<double> LikelihoodModel::pack(const FitParams &params) const {
  if (params.alpha1.size() != m1_ || params.alpha2.size() != m2_)
    throw ArgumentError("alpha length does not match spline df");
  std::vector<double> x;
  x.reserve(n_params());
  x.push_back(params.p);
  x.push_back(params.lambda_star);
  x.insert(x.end(), params.alpha1.begin(), params.alpha1.end());
  x.insert(x.end(), params.alpha2.begin(), params.alpha2.end());
  return x;
}

FitParams LikelihoodModel::unpack(const std::vector<double> &x) const {
  if (x.size() != n_params()) throw ArgumentError("parameter length mismatch");
  FitParams params;
  params.p = x[0];
  params.lambda_star = x[1];
  params.alpha1.assign(x.begin() + 2, x.begin() + 2 + m1_);
  params.alpha2.assign(x.begin() + 2 + m1_, x.end());
  return params;
}

DiscreteDensity LikelihoodModel::fitted_g1(const FitParams &params) const {
  return density(q1_, params.alpha1);
}

DiscreteDensity LikelihoodModel::fitted_g1_tilted(
    const FitParams &params) const {
  return density(q1_, params.alpha1, tilt_);
}

DiscreteDensity LikelihoodModel::fitted_g2(const FitParams &params) const {
  return positive_support_density(q2_, params.alpha2);
}

std::vector<double> LikelihoodModel::to_orth(
    const std::vector<double> &x) const {
  if (x.size() != n_params()) throw ArgumentError("parameter length mismatch");
  const std::vector<double> alpha1(x.begin() + 2, x.begin() + 2 + m1_);
  const std::vector<double> alpha2(x.begin() + 2 + m1_, x.end());
  const std::vector<double> t1 = upper_apply(r1_, alpha1);
  const std::vector<double> t2 = upper_apply(r2_, alpha2);
  std::vector<double> xt;
  xt.reserve(x.size());
  xt.push_back(x[0]);
  xt.push_back(x[1]);
  xt.insert(xt.end(), t1.begin(), t1.end());
  xt.insert(xt.end(), t2.begin(), t2.end());
  return xt;
}

std::vector<double> LikelihoodModel::from_orth(
    const std::vector<double> &x_orth) const {
  if (x_orth.size() != n_params())
    throw ArgumentError("parameter length mismatch");
  const std::vector<double> t1(x_orth.begin() + 2, x_orth.begin() + 2 + m1_);
  const std::vector<double> t2(x_orth.begin() + 2 + m1_, x_orth.end());
  const std::vector<double> a1 = upper_solve(r1_, t1);
  const std::vector<double> a2 = upper_solve(r2_, t2);
  std::vector<double> x;
  x.reserve(x_orth.size());
  x.push_back(x_orth[0]);
  x.push_back(x_orth[1]);
  x.insert(x.end(), a1.begin(), a1.end());
  x.insert(x.end(), a2.begin(), a2.end());
  return x;
}

double LikelihoodModel::penalized(const std::vector<double> &x,
                                  std::vector<double> *grad, double c0,
                                  double eps) const {
  const double value = penalized_orth(to_orth(x), grad, c0, eps);
  if (grad) {
    // theta = R alpha, so d/d alpha = R^T d/d theta.
    const std::vector<double> gt1(grad->begin() + 2,
                                  grad->begin() + 2 + m1_);
    const std::vector<double> gt2(grad->begin() + 2 + m1_, grad->end());
    const std::vector<double> ga1 = upper_transpose_apply(r1_, gt1);
    const std::vector<double> ga2 = upper_transpose_apply(r2_, gt2);
    std::copy(ga1.begin(), ga1.end(), grad->begin() + 2);
    std::copy(ga2.begin(), ga2.end(), grad->begin() + 2 + m1_);
  }
  return value;
}

double LikelihoodModel::penalized_orth(const std::vector<double> &x,
                                       std::vector<double> *grad, double c0,
                                       double eps) const {
  const std::size_t k = grid_.size();
  const double p = x[0];
  const double lam = x[1];
  if (!(p > 0.0) || !(p < 1.0) || !(lam > 0.0) || !(lam < 1.0))
    throw ArgumentError("p and lambda* must lie strictly inside (0, 1)");
  const std::vector<double> theta1(x.begin() + 2, x.begin() + 2 + m1_);
  const std::vector<double> theta2(x.begin() + 2 + m1_, x.end());

  const DiscreteDensity g1 = density(u1_, theta1);
  const DiscreteDensity gt =
      tilt_.empty() ? g1 : density(u1_, theta1, tilt_);
  const DiscreteDensity g2 = positive_support_density(u2_, theta2);

  // Mass-weighted basis means (exponential-family expectations).
  std::vector<double> q1_mean(m1_, 0.0), qt_mean(m1_, 0.0), q2_mean(m2_, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    const double *row = u1_.row(j);
    for (std::size_t c = 0; c < m1_; ++c) {
      q1_mean[c] += g1.mass[j] * row[c];
      qt_mean[c] += gt.mass[j] * row[c];
    }
  }
  for (std::size_t j = 1; j < k; ++j) {
    const double *row = u2_.row(j - 1);
    for (std::size_t c = 0; c < m2_; ++c) q2_mean[c] += g2.mass[j] * row[c];
  }

  const std::size_t n_a = f_afebrile_.rows();
  const std::size_t n_f = f_febrile_.rows();
  double ll = static_cast<double>(n_a) * std::log1p(-p) +
              static_cast<double>(n_f) * std::log(p);
  for (double off : off_afebrile_) ll += off;
  for (double off : off_febrile_) ll += off;

  std::vector<double> d_alpha1(m1_, 0.0), d_alpha2(m2_, 0.0);
  double d_lambda = 0.0;
  double sum_va = 0.0;  // sum over febrile rows of A_i / den_i
  double sum_vb = 0.0;

  // Afebrile rows: log sum_j f(x_i; d_j) g1(d_j).
  std::vector<double> v(m1_);
  for (std::size_t i = 0; i < n_a; ++i) {
    const double *row = f_afebrile_.row(i);
    double s = 0.0;
    std::fill(v.begin(), v.end(), 0.0);
    for (std::size_t j = 0; j < k; ++j) {
      const double w = row[j] * g1.mass[j];
      if (w == 0.0) continue;
      s += w;
      const double *qrow = u1_.row(j);
      for (std::size_t c = 0; c < m1_; ++c) v[c] += w * qrow[c];
    }
    ll += std::log(s);
    if (grad) {
      const double inv = 1.0 / s;
      for (std::size_t c = 0; c < m1_; ++c) d_alpha1[c] += v[c] * inv;
    }
  }
  if (grad)
    for (std::size_t c = 0; c < m1_; ++c)
      d_alpha1[c] -= static_cast<double>(n_a) * q1_mean[c];

  // Febrile rows: log[(1 - lambda*) A_i + lambda* B_i] on the scaled grid,
  // with A from the (possibly tilted) g1 and B from g2.
  std::vector<double> va(m1_), vb(m2_);
  std::vector<double> d_alpha1_f(m1_, 0.0), d_alpha2_f(m2_, 0.0);
  for (std::size_t i = 0; i < n_f; ++i) {
    const double *row = f_febrile_.row(i);
    double a_sum = 0.0, b_sum = 0.0;
    std::fill(va.begin(), va.end(), 0.0);
    std::fill(vb.begin(), vb.end(), 0.0);
    for (std::size_t j = 0; j < k; ++j) {
      const double f = row[j];
      if (f == 0.0) continue;
      const double wa = f * gt.mass[j];
      if (wa != 0.0) {
        a_sum += wa;
        const double *qrow = u1_.row(j);
        for (std::size_t c = 0; c < m1_; ++c) va[c] += wa * qrow[c];
      }
      if (j > 0) {
        const double wb = f * g2.mass[j];
        if (wb != 0.0) {
          b_sum += wb;
          const double *qrow = u2_.row(j - 1);
          for (std::size_t c = 0; c < m2_; ++c) vb[c] += wb * qrow[c];
        }
      }
    }
    const double den = (1.0 - lam) * a_sum + lam * b_sum;
    ll += std::log(den);
    if (grad) {
      const double inv = 1.0 / den;
      d_lambda += (b_sum - a_sum) * inv;
      sum_va += a_sum * inv;
      sum_vb += b_sum * inv;
      for (std::size_t c = 0; c < m1_; ++c) d_alpha1_f[c] += va[c] * inv;
      for (std::size_t c = 0; c < m2_; ++c) d_alpha2_f[c] += vb[c] * inv;
    }
  }

  // Penalty c0 * sqrt(|alpha1|^2 + |alpha2|^2 + eps) evaluated on the
  // original coefficients alpha = R^-1 theta.
  const std::vector<double> a1 = upper_solve(r1_, theta1);
  const std::vector<double> a2 = upper_solve(r2_, theta2);
  double alpha_ss = eps;
  for (double a : a1) alpha_ss += a * a;
  for (double a : a2) alpha_ss += a * a;
  const double penalty_root = std::sqrt(alpha_ss);
  const double objective = ll - c0 * penalty_root;

  if (grad) {
    // d penalty_root / d theta = R^-T alpha / penalty_root.
    const std::vector<double> pen1 = upper_transpose_solve(r1_, a1);
    const std::vector<double> pen2 = upper_transpose_solve(r2_, a2);
    grad->assign(n_params(), 0.0);
    (*grad)[0] = static_cast<double>(n_f) / p -
                 static_cast<double>(n_a) / (1.0 - p);
    (*grad)[1] = d_lambda;
    for (std::size_t c = 0; c < m1_; ++c)
      (*grad)[2 + c] = d_alpha1[c] +
                       (1.0 - lam) * (d_alpha1_f[c] - sum_va * qt_mean[c]) -
                       c0 * pen1[c] / penalty_root;
    for (std::size_t c = 0; c < m2_; ++c)
      (*grad)[2 + m1_ + c] = lam * (d_alpha2_f[c] - sum_vb * q2_mean[c]) -
                             c0 * pen2[c] / penalty_root;
  }
  return objective;
}

double LikelihoodModel::loglik(const FitParams &params) const {
  return penalized(pack(params), nullptr, 0.0, 1.0);
}

double mixture_loglik(const SurveyDataset &dataset, const Grid &grid,
                      const MeasurementKernel &kernel,
                      const FitParams &params) {
  LikelihoodModel model(dataset, grid, kernel, params.alpha1.size(),
                        params.alpha2.size());
  return model.loglik(params);
}

double penalized_objective(const SurveyDataset &dataset, const Grid &grid,
                           const MeasurementKernel &kernel,
                           const FitParams &params, double c0, double eps) {
  LikelihoodModel model(dataset, grid, kernel, params.alpha1.size(),
                        params.alpha2.size());
  return model.penalized(model.pack(params), nullptr, c0, eps);
}

std::vector<double> objective_gradient(const SurveyDataset &dataset,
                                       const Grid &grid,
                                       const MeasurementKernel &kernel,
                                       const FitParams &params, double c0,
                                       double eps) {
  LikelihoodModel model(dataset, grid, kernel, params.alpha1.size(),
                        params.alpha2.size());
  std::vector<double> grad;
  model.penalized(model.pack(params), &grad, c0, eps);
  return grad;
}

Grid default_grid(const SurveyDataset &dataset, const FitConfig &config) {
  config.validate();
  dataset.validate();
  // One observed count (40/ul) floors the range so all-zero data still
  // produce a usable lattice.
  const double base = 1.2 * std::max(dataset.max_density(), 40.0);
  const double range = config.grid_max > 0.0 ? config.grid_max
                                             : base / config.beta;
  std::size_t k = config.grid_points;
  if (k == 0) {
    // Keep the lattice spacing at roughly base/100 however far the range
    // was stretched, so resolution does not degrade as beta shrinks.
    k = 1 + static_cast<std::size_t>(
                std::ceil(100.0 * range / base - 1e-9));
    k = std::min<std::size_t>(k, 4001);
  }
  k = std::max<std::size_t>(k, std::max(config.m1, config.m2 + 1) + 1);
  return Grid::equispaced(range, k, config.beta);
}

double adjust_or_to_maff(double lambda_star, double p) {
  if (!(lambda_star >= 0.0) || lambda_star > 1.0)
    throw ArgumentError("lambda* must lie in [0, 1]");
  if (!(p >= 0.0) || p > 1.0) throw ArgumentError("p must lie in [0, 1]");
  if (p * lambda_star >= 1.0)
    throw ArgumentError("p * lambda* must be < 1");
  return (lambda_star - p * lambda_star) / (1.0 - p * lambda_star);
}

FitResult fit_tilted(const SurveyDataset &dataset, const FitConfig &config,
                     double delta1) {
  config.validate();
  const Grid grid = default_grid(dataset, config);
  LikelihoodModel model(dataset, grid, config.kernel, config.m1, config.m2,
                        delta1);

  // Optimize over the orthonormalized coefficients; alpha = 0 maps to
  // theta = 0, so starting points need no conversion.
  const Objective negated = [&](const std::vector<double> &x,
                                std::vector<double> &grad) {
    const double value =
        model.penalized_orth(x, &grad, config.c0, config.penalty_eps);
    for (double &g : grad) g = -g;
    return -value;
  };

  BoxBounds bounds;
  const double inf = std::numeric_limits<double>::infinity();
  bounds.lower.assign(model.n_params(), -inf);
  bounds.upper.assign(model.n_params(), inf);
  bounds.lower[1] = kProbMargin;
  bounds.upper[1] = 1.0 - kProbMargin;

  // p separates from the rest of the objective (it only enters through
  // n_a log(1-p) + n_f log p), so its optimum is the empirical prevalence
  // for every (lambda*, alpha); pinning the box there removes the one
  // badly conditioned coordinate from the quasi-Newton iteration.
  const double p_hat = std::clamp(
      static_cast<double>(dataset.febrile_count()) /
          static_cast<double>(dataset.size()),
      kProbMargin, 1.0 - kProbMargin);
  bounds.lower[0] = bounds.upper[0] = p_hat;

  OptimOptions opt;
  opt.max_iterations = config.max_iterations;
  opt.grad_tol = config.grad_tol;
  // The parameter vector is short (2 + m1 + m2), so a generous correction
  // history makes the quasi-Newton model effectively full-rank.
  opt.memory = 2 * (2 + config.m1 + config.m2);

  FitParams start;
  start.p = p_hat;
  start.alpha1.assign(config.m1, 0.0);
  start.alpha2.assign(config.m2, 0.0);

  std::vector<double> lambda_starts = {0.5};
  if (config.multistart) lambda_starts = {0.1, 0.3, 0.5, 0.7, 0.9};

  OptimResult best;
  bool have_best = false;
  for (double lambda0 : lambda_starts) {
    start.lambda_star = lambda0;
    OptimResult run = minimize_box_lbfgs(negated, model.pack(start), bounds,
                                         opt);
    if (!have_best || run.value < best.value) {
      best = std::move(run);
      have_best = true;
    }
  }

  FitResult result;
  const FitParams at_opt = model.unpack(model.from_orth(best.x));
  result.p_hat = at_opt.p;
  result.lambda_star_hat = at_opt.lambda_star;
  result.maff_hat = adjust_or_to_maff(at_opt.lambda_star, at_opt.p);
  result.alpha1 = at_opt.alpha1;
  result.alpha2 = at_opt.alpha2;
  result.objective = -best.value;
  result.loglik = model.loglik(at_opt);
  result.grad_norm = best.projected_grad_norm;
  result.converged = best.converged;
  result.iterations = best.iterations;
  result.evaluations = best.evaluations;
  result.grid = grid;
  result.g1 = model.fitted_g1(at_opt);
  result.g2 = model.fitted_g2(at_opt);
  result.rounded_observations = model.rounded_observations();
  result.out_of_range = result.maff_hat < 0.0 || result.maff_hat > 1.0;
  return result;
}

FitResult fit(const SurveyDataset &dataset, const FitConfig &config) {
  return fit_tilted(dataset, config, 0.0);
}

}  // namespace maff
