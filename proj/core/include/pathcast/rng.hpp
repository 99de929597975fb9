#pragma once

#include <cstdint>

#include "pathcast/common.hpp"

namespace pathcast {

// Deterministic RNG with explicitly implemented distributions.
// std::uniform_*_distribution and std::normal_distribution are
// implementation-defined, so results would differ across standard
// libraries; everything here is pinned to the xoshiro256++ stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform in [0, n), unbiased via rejection.
  std::uint64_t uniform_int(std::uint64_t n);

  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);

  // Standard normal via Box-Muller (no cached spare).
  double normal();
  double normal(double mu, double sigma);

  // 10^x with x ~ N(log10_mu, log10_sigma); always > 0.
  double log10_normal(double log10_mu, double log10_sigma);

  bool bernoulli(double p);

  // Independent stream derived from this generator's seed and a label.
  Rng fork(std::uint64_t stream) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t s_[4];
};

// Distinct uniform sample of k pool entries (Floyd), returned in pool
// order; the whole pool when k covers it.
std::vector<std::uint32_t> sample_without_replacement(const std::vector<std::uint32_t>& pool,
                                                      std::size_t k, Rng& rng);

}  // namespace pathcast
