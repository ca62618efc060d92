#ifndef MAFF_LIKELIHOOD_HPP
#define MAFF_LIKELIHOOD_HPP

#include <cstddef>
#include <vector>

#include "maff/gmodel.hpp"
#include "maff/kernels.hpp"
#include "maff/matrix.hpp"
#include "maff/survey.hpp"

namespace maff {

// Model parameters: fever prevalence p, febrile malaria-attributable
// mixing weight lambda*, and the exponential-family coefficients of the
// no-fever density g1 and the febrile malarial density g2.
struct FitParams {
  double p = 0.1;
  double lambda_star = 0.5;
  std::vector<double> alpha1;
  std::vector<double> alpha2;
};

struct FitConfig {
  MeasurementKernel kernel = MeasurementKernel::poisson();
  double beta = 1.0;        // assumed fever-killing survival factor (0, 1]
  double c0 = 1.0;          // penalty strength; 0 gives the regular MLE
  std::size_t m1 = 4;       // spline df for g1
  std::size_t m2 = 3;       // spline df for g2
  std::size_t grid_points = 0;  // 0 = auto
  double grid_max = 0.0;        // 0 = auto
  double penalty_eps = 1e-8;
  double grad_tol = 1e-6;
  std::size_t max_iterations = 2000;
  bool multistart = true;   // try lambda* starts {0.1, 0.3, 0.5, 0.7, 0.9}

  void validate() const;
};

struct FitResult {
  double p_hat = 0.0;
  double lambda_star_hat = 0.0;
  double maff_hat = 0.0;
  std::vector<double> alpha1;
  std::vector<double> alpha2;
  double objective = 0.0;   // penalized log likelihood at the optimum
  double loglik = 0.0;      // unpenalized log likelihood
  double grad_norm = 0.0;   // optimizer's projected-gradient sup norm
  bool converged = false;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  Grid grid;
  DiscreteDensity g1;       // fitted masses on grid.values
  DiscreteDensity g2;       // fitted masses on grid.scaled()
  std::size_t rounded_observations = 0;
  bool out_of_range = false;  // maff_hat outside [0, 1]
};

// Two-group mixture likelihood on a shared latent lattice.  Precomputes
// the kernel matrices (afebrile rows against the grid, febrile rows
// against the beta-scaled grid) and the spline bases; evaluation is then
// a dense pass over rows.  delta1 > 0 exponentially tilts the *febrile*
// copy of g1 by exp(delta1 * d_j), leaving the afebrile copy alone.
class LikelihoodModel {
 public:
  LikelihoodModel(const SurveyDataset &dataset, const Grid &grid,
                  const MeasurementKernel &kernel, std::size_t m1,
                  std::size_t m2, double delta1 = 0.0);

  std::size_t n_params() const { return 2 + m1_ + m2_; }
  std::size_t m1() const { return m1_; }
  std::size_t m2() const { return m2_; }
  const Grid &grid() const { return grid_; }
  const Matrix &q1() const { return q1_; }
  const Matrix &q2_positive() const { return q2_; }
  std::size_t rounded_observations() const { return rounded_; }

  std::vector<double> pack(const FitParams &params) const;
  FitParams unpack(const std::vector<double> &x) const;

  // Unpenalized mixture log likelihood.
  double loglik(const FitParams &params) const;

  // Penalized objective (to maximize); fills the gradient when grad is
  // non-null.  Layout: [p, lambda*, alpha1..., alpha2...].
  double penalized(const std::vector<double> &x, std::vector<double> *grad,
                   double c0, double eps) const;

  // The same objective over the orthonormalized coefficients theta = R
  // alpha (thin QR of each basis block).  Exactly equivalent -- including
  // the penalty, which is computed on alpha = R^-1 theta -- but far
  // better conditioned, since spline basis columns are nearly collinear.
  // The optimizer works in these coordinates.
  double penalized_orth(const std::vector<double> &x_orth,
                        std::vector<double> *grad, double c0,
                        double eps) const;
  std::vector<double> to_orth(const std::vector<double> &x) const;
  std::vector<double> from_orth(const std::vector<double> &x_orth) const;

  DiscreteDensity fitted_g1(const FitParams &params) const;
  DiscreteDensity fitted_g1_tilted(const FitParams &params) const;
  DiscreteDensity fitted_g2(const FitParams &params) const;

 private:
  Grid grid_;
  std::size_t m1_, m2_;
  Matrix q1_;        // k x m1, standardized
  Matrix q2_;        // (k-1) x m2, standardized, rows for d_2..d_k
  Matrix u1_, r1_;   // thin QR of q1 (u orthonormal, r upper triangular)
  Matrix u2_, r2_;
  Matrix f_afebrile_;  // scaled kernel rows: exp(log f - row max)
  Matrix f_febrile_;
  std::vector<double> off_afebrile_;  // row maxima (log scale)
  std::vector<double> off_febrile_;
  std::vector<double> tilt_;          // delta1 * d_j, empty when delta1 == 0
  std::size_t rounded_ = 0;
};

// Free-function forms of the three evaluation operations.
double mixture_loglik(const SurveyDataset &dataset, const Grid &grid,
                      const MeasurementKernel &kernel, const FitParams &params);
double penalized_objective(const SurveyDataset &dataset, const Grid &grid,
                           const MeasurementKernel &kernel,
                           const FitParams &params, double c0,
                           double eps = 1e-8);
std::vector<double> objective_gradient(const SurveyDataset &dataset,
                                       const Grid &grid,
                                       const MeasurementKernel &kernel,
                                       const FitParams &params, double c0,
                                       double eps = 1e-8);

// Grid the fit will use for this dataset and configuration: about 101
// lattice points per data range (1.2 x the largest observed density),
// extended by 1/beta so the beta-scaled febrile support still covers the
// data when fever killing is assumed.
Grid default_grid(const SurveyDataset &dataset, const FitConfig &config);

// Penalized maximum likelihood fit; delta1 tilts the febrile g1 component
// (used by the sensitivity analysis; the default 0 is the plain model).
FitResult fit_tilted(const SurveyDataset &dataset, const FitConfig &config,
                     double delta1);
FitResult fit(const SurveyDataset &dataset, const FitConfig &config = {});

// Maps the odds-ratio-type estimand lambda* to the malaria-attributable
// fever fraction: lambda = (lambda* - p lambda*) / (1 - p lambda*).
double adjust_or_to_maff(double lambda_star, double p);

}  // namespace maff

#endif
