#include "maff/resampling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <mutex>

#include "maff/errors.hpp"
#include "maff/parallel.hpp"
#include "maff/rng.hpp"

namespace maff {

SurveyDataset canonical_order(const SurveyDataset &dataset) {
  SurveyDataset base = dataset;
  std::sort(base.records.begin(), base.records.end(),
            [](const SurveyRecord &a, const SurveyRecord &b) {
              if (a.fever != b.fever) return a.fever < b.fever;
              return a.density < b.density;
            });
  return base;
}

SurveyDataset resample_records(const SurveyDataset &base, Rng &rng) {
  const std::size_t n = base.records.size();
  SurveyDataset sample;
  sample.records.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    sample.records[i] = base.records[rng.uniform_index(n)];
  return sample;
}

BootstrapResult bootstrap_se(const SurveyDataset &dataset,
                             const Estimator &estimator, std::size_t B,
                             std::uint64_t seed, unsigned threads) {
  if (!estimator) throw ArgumentError("bootstrap_se: estimator is empty");
  if (B < 2) throw ArgumentError("bootstrap_se: need at least 2 replicates");
  dataset.validate();

  const SurveyDataset base = canonical_order(dataset);

  BootstrapResult result;
  result.estimate = estimator(base);

  std::vector<double> values(B, 0.0);
  std::vector<char> ok(B, 0);
  parallel_for(B, threads, [&](std::size_t rep) {
    Rng rng(seed, rep);
    const SurveyDataset sample = resample_records(base, rng);
    try {
      const double v = estimator(sample);
      if (std::isfinite(v)) {
        values[rep] = v;
        ok[rep] = 1;
      }
    } catch (const Error &) {
      // failed replicate: dropped from the SE, counted below
    }
  });

  for (std::size_t rep = 0; rep < B; ++rep) {
    if (ok[rep])
      result.replicate_estimates.push_back(values[rep]);
    else
      ++result.failures;
  }
  result.replicates = B;

  const std::size_t good = result.replicate_estimates.size();
  if (good >= 2) {
    double mean = 0.0;
    for (double v : result.replicate_estimates) mean += v;
    mean /= static_cast<double>(good);
    double ss = 0.0;
    for (double v : result.replicate_estimates) {
      const double d = v - mean;
      ss += d * d;
    }
    result.se = std::sqrt(ss / static_cast<double>(good - 1));
  }

  if (result.failures * 5 > B) {
    char msg[160];
    std::snprintf(msg, sizeof(msg),
                  "bootstrap_se: %zu of %zu replicates failed (>20%%); "
                  "standard error is unreliable",
                  result.failures, B);
    throw BootstrapUnreliableError(msg, std::move(result));
  }
  return result;
}

}  // namespace maff
