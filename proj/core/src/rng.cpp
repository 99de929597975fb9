#include "pathcast/rng.hpp"

#include <cmath>
#include <set>

namespace pathcast {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed) {
  std::uint64_t x = seed;
  for (auto& w : s_) w = splitmix64(x);
}

std::uint64_t Rng::next_u64() {
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

std::uint64_t Rng::uniform_int(std::uint64_t n) {
  if (n == 0) throw NumericError("uniform_int: n must be positive");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v = next_u64();
  while (v >= limit) v = next_u64();
  return v % n;
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
  // Box-Muller; u clamped away from 0 so log stays finite.
  double u = uniform();
  if (u <= 0.0) u = 0x1.0p-53;
  const double v = uniform();
  const double r = std::sqrt(-2.0 * std::log(u));
  return r * std::cos(2.0 * 3.14159265358979323846 * v);
}

double Rng::normal(double mu, double sigma) { return mu + sigma * normal(); }

double Rng::log10_normal(double log10_mu, double log10_sigma) {
  return std::pow(10.0, normal(log10_mu, log10_sigma));
}

bool Rng::bernoulli(double p) { return uniform() < p; }

Rng Rng::fork(std::uint64_t stream) const { return Rng(mix64(seed_, stream)); }

std::vector<std::uint32_t> sample_without_replacement(const std::vector<std::uint32_t>& pool,
                                                      std::size_t k, Rng& rng) {
  if (k >= pool.size()) return pool;
  std::set<std::size_t> chosen;
  for (std::size_t i = pool.size() - k; i < pool.size(); ++i) {
    const std::size_t j = static_cast<std::size_t>(rng.uniform_int(i + 1));
    if (!chosen.insert(j).second) chosen.insert(i);
  }
  std::vector<std::uint32_t> out;
  out.reserve(k);
  for (const auto idx : chosen) out.push_back(pool[idx]);
  return out;
}

}  // namespace pathcast
