#include "maff/sensitivity.hpp"

#include <cmath>

#include "maff/errors.hpp"
#include "maff/parallel.hpp"

namespace maff {

DiscreteDensity tilt_density(const Matrix &q, const std::vector<double> &alpha,
                             double delta1,
                             const std::vector<double> &support) {
  if (support.size() != q.rows())
    throw ArgumentError("support length does not match basis rows");
  if (!(delta1 >= 0.0)) throw ArgumentError("delta1 must be nonnegative");
  std::vector<double> offset(support.size());
  for (std::size_t j = 0; j < support.size(); ++j)
    offset[j] = delta1 * support[j];
  return density(q, alpha, offset);
}

double generalized_maff(double lambda_star, double p, double tau,
                        bool *feasible, bool *capped) {
  if (!(lambda_star >= 0.0) || lambda_star > 1.0)
    throw ArgumentError("lambda* must lie in [0, 1]");
  if (!(p >= 0.0) || p >= 1.0) throw ArgumentError("p must lie in [0, 1)");
  if (!(tau >= 1.0)) throw ArgumentError("tau must be >= 1");
  const double pi0 = (1.0 - p) / (1.0 - p * lambda_star);
  const bool ok = tau * pi0 <= 1.0 + 1e-12;
  if (feasible) *feasible = ok;
  const double raw = lambda_star * tau * pi0;
  if (capped) *capped = raw > 1.0;
  return raw > 1.0 ? 1.0 : raw;
}

SensitivityResult sensitivity_fit(const SurveyDataset &dataset,
                                  const FitConfig &config,
                                  const SensitivityParams &params) {
  if (!(params.delta1 >= 0.0))
    throw ArgumentError("delta1 must be nonnegative");
  if (!(params.tau >= 1.0)) throw ArgumentError("tau must be >= 1");
  SensitivityResult out;
  out.delta1 = params.delta1;
  out.tau = params.tau;
  out.fit = fit_tilted(dataset, config, params.delta1);
  out.maff = generalized_maff(out.fit.lambda_star_hat, out.fit.p_hat,
                              params.tau, &out.feasible, &out.capped);
  return out;
}

SensitivityGrid sensitivity_grid(const SurveyDataset &dataset,
                                 const FitConfig &config, double delta1_max,
                                 double tau_max, std::size_t n_delta,
                                 std::size_t n_tau, unsigned threads) {
  if (!(delta1_max >= 0.0)) throw ArgumentError("delta1_max must be >= 0");
  if (!(tau_max >= 1.0)) throw ArgumentError("tau_max must be >= 1");
  if (n_delta < 1 || n_tau < 1) throw ArgumentError("grid must be nonempty");

  SensitivityGrid grid;
  grid.delta1_values.resize(n_delta);
  for (std::size_t i = 0; i < n_delta; ++i)
    grid.delta1_values[i] =
        n_delta == 1 ? 0.0
                     : delta1_max * static_cast<double>(i) /
                           static_cast<double>(n_delta - 1);
  grid.tau_values.resize(n_tau);
  for (std::size_t i = 0; i < n_tau; ++i)
    grid.tau_values[i] =
        n_tau == 1 ? 1.0
                   : 1.0 + (tau_max - 1.0) * static_cast<double>(i) /
                         static_cast<double>(n_tau - 1);

  grid.cells.resize(n_delta * n_tau);
  // tau enters only the closed-form adjustment, so one fit per delta1 row
  // serves every tau cell in that row.
  parallel_for(n_delta, threads, [&](std::size_t i) {
    SensitivityParams params;
    params.delta1 = grid.delta1_values[i];
    params.tau = 1.0;
    SensitivityResult row = sensitivity_fit(dataset, config, params);
    for (std::size_t j = 0; j < n_tau; ++j) {
      SensitivityResult cell = row;
      cell.tau = grid.tau_values[j];
      cell.maff =
          generalized_maff(cell.fit.lambda_star_hat, cell.fit.p_hat, cell.tau,
                           &cell.feasible, &cell.capped);
      grid.cells[i * n_tau + j] = cell;
    }
  });
  return grid;
}

}  // namespace maff
