#include "maff/kernels.hpp"

#include <cmath>
#include <limits>

#include "csv_common.hpp"
#include "maff/errors.hpp"

namespace maff {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kCountPerDensity = 1.0 / 40.0;  // counts per 200 WBC at 8000/ul

double log_poisson_pmf(double count, double mean) {
  if (mean <= 0.0) return count == 0.0 ? 0.0 : kNegInf;
  return count * std::log(mean) - mean - std::lgamma(count + 1.0);
}

double log_negbin_pmf(double count, double mean, double r) {
  if (mean <= 0.0) return count == 0.0 ? 0.0 : kNegInf;
  // NB(r, p) with p = r / (r + mean); written with log1p for stability.
  return std::lgamma(count + r) - std::lgamma(r) - std::lgamma(count + 1.0) -
         r * std::log1p(mean / r) + count * (std::log(mean) - std::log(r + mean));
}

double observed_count(double x_obs, bool *rounded) {
  const double exact = x_obs * kCountPerDensity;
  const double c = std::nearbyint(exact);
  if (rounded && std::abs(exact - c) > 1e-9 * std::max(1.0, exact))
    *rounded = true;
  return c;
}

}  // namespace

MeasurementKernel MeasurementKernel::exact() {
  MeasurementKernel k;
  k.family = KernelFamily::Exact;
  return k;
}

MeasurementKernel MeasurementKernel::poisson() {
  MeasurementKernel k;
  k.family = KernelFamily::Poisson;
  return k;
}

MeasurementKernel MeasurementKernel::negbin(double r) {
  MeasurementKernel k;
  k.family = KernelFamily::NegBin;
  k.dispersion = r;
  return k;
}

MeasurementKernel MeasurementKernel::wbc_negbin(double r,
                                                std::vector<WbcAtom> dist) {
  MeasurementKernel k;
  k.family = KernelFamily::WbcMixNegBin;
  k.dispersion = r;
  k.wbc = dist.empty() ? default_wbc_distribution() : std::move(dist);
  return k;
}

void MeasurementKernel::validate() const {
  if (family == KernelFamily::NegBin || family == KernelFamily::WbcMixNegBin)
    if (!(dispersion > 0.0))
      throw ValidationError("kernel dispersion must be positive");
  if (family == KernelFamily::WbcMixNegBin) {
    if (wbc.empty()) throw ValidationError("WBC distribution is empty");
    double total = 0.0;
    for (const auto &atom : wbc) {
      if (!(atom.wbc > 0.0))
        throw ValidationError("WBC mass points must be positive");
      if (!(atom.prob >= 0.0))
        throw ValidationError("WBC probabilities must be nonnegative");
      total += atom.prob;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw ValidationError("WBC probabilities must sum to 1");
  }
}

std::string MeasurementKernel::name() const {
  switch (family) {
    case KernelFamily::Exact: return "exact";
    case KernelFamily::Poisson: return "poisson";
    case KernelFamily::NegBin: return "negbin";
    case KernelFamily::WbcMixNegBin: return "wbc-negbin";
  }
  return "unknown";
}

std::vector<WbcAtom> default_wbc_distribution() {
  return {{4000.0, 0.12}, {5000.0, 0.16}, {6000.0, 0.20},
          {7000.0, 0.16}, {8000.0, 0.16}, {9000.0, 0.10},
          {10000.0, 0.04}, {11000.0, 0.04}, {12000.0, 0.02}};
}

double kernel_log_prob(const MeasurementKernel &kernel, double x_obs, double d,
                       bool *rounded) {
  if (!(x_obs >= 0.0) || !(d >= 0.0))
    throw ArgumentError("kernel arguments must be nonnegative");
  switch (kernel.family) {
    case KernelFamily::Exact:
      return x_obs == d ? 0.0 : kNegInf;
    case KernelFamily::Poisson:
      return log_poisson_pmf(observed_count(x_obs, rounded),
                             d * kCountPerDensity);
    case KernelFamily::NegBin:
      return log_negbin_pmf(observed_count(x_obs, rounded),
                            d * kCountPerDensity, kernel.dispersion);
    case KernelFamily::WbcMixNegBin: {
      const double c = observed_count(x_obs, rounded);
      // Mix over the true WBC count: the slide reports 40 x count, but the
      // count's mean is d * 200 / W when the patient's WBC is W per ul.
      double peak = kNegInf;
      std::vector<double> terms(kernel.wbc.size());
      for (std::size_t w = 0; w < kernel.wbc.size(); ++w) {
        terms[w] = log_negbin_pmf(c, d * 200.0 / kernel.wbc[w].wbc,
                                  kernel.dispersion);
        if (kernel.wbc[w].prob > 0.0 && terms[w] > peak) peak = terms[w];
      }
      if (peak == kNegInf) return kNegInf;
      double total = 0.0;
      for (std::size_t w = 0; w < kernel.wbc.size(); ++w)
        total += kernel.wbc[w].prob * std::exp(terms[w] - peak);
      return peak + std::log(total);
    }
  }
  throw ArgumentError("unknown kernel family");
}

double kernel_prob(const MeasurementKernel &kernel, double x_obs, double d,
                   bool *rounded) {
  return std::exp(kernel_log_prob(kernel, x_obs, d, rounded));
}

Matrix kernel_log_matrix(const MeasurementKernel &kernel,
                         const std::vector<double> &observations,
                         const std::vector<double> &support,
                         std::size_t *rounded_count) {
  kernel.validate();
  Matrix out(observations.size(), support.size());
  for (std::size_t i = 0; i < observations.size(); ++i) {
    bool rounded = false;
    for (std::size_t j = 0; j < support.size(); ++j)
      out(i, j) = kernel_log_prob(kernel, observations[i], support[j],
                                  j == 0 ? &rounded : nullptr);
    if (rounded && rounded_count) ++*rounded_count;
  }
  return out;
}

Matrix kernel_matrix(const MeasurementKernel &kernel,
                     const std::vector<double> &observations,
                     const std::vector<double> &support,
                     std::size_t *rounded_count) {
  Matrix out = kernel_log_matrix(kernel, observations, support, rounded_count);
  for (double &v : out.data()) v = std::exp(v);
  return out;
}

DispersionFit estimate_dispersion(
    const std::vector<FalseNegativeRecord> &records) {
  if (records.empty())
    throw ArgumentError("no false-negative records supplied");
  double total_neg = 0.0;
  double total_slides = 0.0;
  for (const auto &rec : records) {
    if (!(rec.mean_density > 0.0))
      throw ValidationError("false-negative record needs a positive density");
    if (!(rec.slides > 0.0))
      throw ValidationError("false-negative record needs slides > 0");
    if (!(rec.negatives >= 0.0) || rec.negatives > rec.slides)
      throw ValidationError("negatives must lie in [0, slides]");
    total_neg += rec.negatives;
    total_slides += rec.slides;
  }
  if (total_neg == 0.0 || total_neg == total_slides)
    throw NonIdentifiableError(
        "false-negative data are all-positive or all-negative; "
        "dispersion is not identified");

  auto loglik = [&](double r) {
    double ll = 0.0;
    for (const auto &rec : records) {
      const double mu = rec.mean_density / 40.0;
      const double log_pi = -r * std::log1p(mu / r);  // log P(count = 0)
      const double log_1m = std::log(-std::expm1(log_pi));
      ll += rec.negatives * log_pi + (rec.slides - rec.negatives) * log_1m;
    }
    return ll;
  };

  // Golden-section search over the documented bracket.
  double a = 0.1;
  double b = 1e4;
  const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - ratio * (b - a);
  double x2 = a + ratio * (b - a);
  double f1 = loglik(x1);
  double f2 = loglik(x2);
  while (b - a > 1e-10 * (1.0 + a)) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + ratio * (b - a);
      f2 = loglik(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - ratio * (b - a);
      f1 = loglik(x1);
    }
  }
  DispersionFit fit;
  fit.r_hat = 0.5 * (a + b);
  fit.loglik = loglik(fit.r_hat);
  return fit;
}

std::vector<FalseNegativeRecord> parse_false_negative_csv(std::istream &in) {
  const auto rows = csv::read_rows(in, "mean_density,negatives,slides");
  std::vector<FalseNegativeRecord> out;
  out.reserve(rows.size());
  for (const auto &row : rows) {
    if (row.fields.size() != 3)
      throw ParseError("expected 3 fields", row.line);
    FalseNegativeRecord rec;
    rec.mean_density = csv::parse_number(row.fields[0], row.line, "density");
    rec.negatives = csv::parse_number(row.fields[1], row.line, "negatives");
    rec.slides = csv::parse_number(row.fields[2], row.line, "slides");
    out.push_back(rec);
  }
  if (out.empty()) throw ParseError("no false-negative records in file");
  return out;
}

std::vector<WbcAtom> parse_wbc_csv(std::istream &in) {
  const auto rows = csv::read_rows(in, "wbc,prob");
  std::vector<WbcAtom> out;
  out.reserve(rows.size());
  for (const auto &row : rows) {
    if (row.fields.size() != 2)
      throw ParseError("expected 2 fields", row.line);
    WbcAtom atom;
    atom.wbc = csv::parse_number(row.fields[0], row.line, "wbc");
    atom.prob = csv::parse_number(row.fields[1], row.line, "prob");
    out.push_back(atom);
  }
  if (out.empty()) throw ParseError("no WBC atoms in file");
  return out;
}

}  // namespace maff
