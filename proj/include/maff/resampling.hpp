#ifndef MAFF_RESAMPLING_HPP
#define MAFF_RESAMPLING_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "maff/errors.hpp"
#include "maff/rng.hpp"
#include "maff/survey.hpp"

namespace maff {

using Estimator = std::function<double(const SurveyDataset &)>;

struct BootstrapResult {
  double estimate = 0.0;   // estimator on the original data
  double se = 0.0;         // sd over successful replicates
  std::size_t replicates = 0;
  std::size_t failures = 0;
  std::vector<double> replicate_estimates;  // successes, replicate order
};

// Thrown when more than 20% of replicates fail; carries what was computed.
struct BootstrapUnreliableError : Error {
  BootstrapUnreliableError(const std::string &msg, BootstrapResult partial_)
      : Error(msg), partial(std::move(partial_)) {}
  BootstrapResult partial;
};

// Records sorted by (fever, density): the fixed order bootstrap index
// draws address, making resamples independent of input file order.
SurveyDataset canonical_order(const SurveyDataset &dataset);

// One resample of base.size() records drawn i.i.d. with replacement.
SurveyDataset resample_records(const SurveyDataset &base, Rng &rng);

// Unstratified i.i.d. bootstrap.  Records are put in canonical order
// before index draws and each replicate draws from its own
// (seed, replicate) stream, so the result depends only on the dataset,
// the estimator, B, and the seed -- not on input order or thread count.
BootstrapResult bootstrap_se(const SurveyDataset &dataset,
                             const Estimator &estimator, std::size_t B,
                             std::uint64_t seed, unsigned threads = 1);

}  // namespace maff

#endif
