#ifndef MAFF_RNG_HPP
#define MAFF_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace maff {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t &state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

// xoshiro256++ seeded from a (seed, stream) pair.  Each record / replicate /
// grid cell gets its own stream, so parallel generation is identical to
// serial generation no matter how work is scheduled.
class Rng {
 public:
  using result_type = std::uint64_t;

  Rng(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t sm = seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
    for (auto &word : s_) word = detail::splitmix64(sm);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type(0); }

  result_type operator()() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on (0, 1): never returns 0 so logs stay finite.
  double u01() {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return u01() < p; }

  double normal(double mu, double sigma) {
    const double u1 = u01();
    const double u2 = u01();
    return mu + sigma * std::sqrt(-2.0 * std::log(u1)) *
                    std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // N(mu, sigma) conditioned on being positive.  Plain rejection when the
  // acceptance rate is decent; exponential-proposal tail sampling otherwise.
  double truncated_normal_pos(double mu, double sigma) {
    const double a = -mu / sigma;  // standardized truncation point
    if (a < 1.0) {
      for (;;) {
        const double z = normal(mu, sigma);
        if (z > 0.0) return z;
      }
    }
    // Tail sampler (shifted-exponential proposal) for deep truncation.
    const double lambda = 0.5 * (a + std::sqrt(a * a + 4.0));
    for (;;) {
      const double x = a - std::log(u01()) / lambda;
      const double diff = x - lambda;
      if (u01() <= std::exp(-0.5 * diff * diff)) return mu + sigma * x;
    }
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

  long long poisson(double mean) {
    if (mean <= 0.0) return 0;
    std::poisson_distribution<long long> dist(mean);
    return dist(*this);
  }

  // Negative binomial with mean `mean` and dispersion r, as a
  // gamma-mixed Poisson.
  long long neg_binomial(double mean, double r) {
    if (mean <= 0.0) return 0;
    std::gamma_distribution<double> gamma(r, mean / r);
    return poisson(gamma(*this));
  }

  // Index draw from an unnormalized weight vector.
  std::size_t categorical(const std::vector<double> &weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = u01() * total;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
      u -= weights[i];
      if (u <= 0.0) return i;
    }
    return weights.empty() ? 0 : weights.size() - 1;
  }

  std::size_t uniform_index(std::size_t n) {
    return static_cast<std::size_t>(u01() * static_cast<double>(n)) % n;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t s_[4];
};

}  // namespace maff

#endif
