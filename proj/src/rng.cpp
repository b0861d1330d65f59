#include "coopd/rng.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace coopd {

std::uint64_t SplitMix64::below(std::uint64_t bound) noexcept {
  // Reject the low (2^64 mod bound) values so every residue is equally likely.
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = next();
    if (r >= threshold) return r % bound;
  }
}

double SplitMix64::normal() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return SplitMix64::mix(seed + (stream + 1) * SplitMix64::kGamma);
}

std::vector<std::int64_t> sample_without_replacement(SplitMix64& gen,
                                                     std::int64_t n,
                                                     std::int64_t k) {
  if (n < 0 || k < 0 || k > n) {
    throw std::invalid_argument("sample_without_replacement: need 0 <= k <= n");
  }
  std::vector<std::int64_t> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), std::int64_t{0});
  for (std::int64_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::int64_t>(
                           gen.below(static_cast<std::uint64_t>(n - i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
  }
  pool.resize(static_cast<std::size_t>(k));
  return pool;
}

IndexStream::IndexStream(std::uint64_t seed, std::int64_t num_blocks)
    : gen_(seed), bound_(static_cast<std::uint64_t>(num_blocks)) {
  if (num_blocks < 1) {
    throw std::invalid_argument("IndexStream: need at least one block");
  }
}

}  // namespace coopd
