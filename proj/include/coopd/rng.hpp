#pragma once

#include <cstdint>
#include <vector>

namespace coopd {

/// Counter-based 64-bit generator (SplitMix64).
///
/// The n-th output (n = 1, 2, ...) is a pure function of (seed, n):
///
///     state_n = seed + n * 0x9E3779B97F4A7C15          (mod 2^64)
///     z = state_n
///     z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///     z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///     out_n = z ^ (z >> 31)
///
/// This makes every random stream in the library reproducible bit-for-bit
/// across compilers, standard libraries and languages. The std::
/// distributions are deliberately not used because their output is
/// implementation-defined.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  explicit SplitMix64(std::uint64_t seed = 0) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  result_type operator()() noexcept { return next(); }

  std::uint64_t next() noexcept {
    state_ += kGamma;
    return mix(state_);
  }

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform();
  }

  /// Uniform integer on [0, bound) by rejection; no modulo bias.
  std::uint64_t below(std::uint64_t bound) noexcept;

  /// Standard normal via Box-Muller; the second variate of each pair is
  /// cached, so the stream consumes two words per two normals.
  double normal() noexcept;

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Seed for an independent sub-stream: mix(seed + (stream + 1) * golden).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

/// k distinct indices from [0, n) in draw order (partial Fisher-Yates).
std::vector<std::int64_t> sample_without_replacement(SplitMix64& gen,
                                                     std::int64_t n,
                                                     std::int64_t k);

/// Uniform block indices for the coordinate methods (0-based).
class IndexStream {
 public:
  IndexStream(std::uint64_t seed, std::int64_t num_blocks);

  std::int64_t next() noexcept {
    return static_cast<std::int64_t>(gen_.below(bound_));
  }
  std::int64_t num_blocks() const noexcept {
    return static_cast<std::int64_t>(bound_);
  }

 private:
  SplitMix64 gen_;
  std::uint64_t bound_;
};

}  // namespace coopd
