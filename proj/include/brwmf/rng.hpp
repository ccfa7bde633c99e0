#pragma once

#include <cstdint>

namespace brwmf {

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Key of the independent stream `index` under `master_seed`.
std::uint64_t derive_stream_key(std::uint64_t master_seed, std::uint64_t index) noexcept;

/// Counter-based random stream: output i is mix64(key + (i + 1) * golden).
///
/// A stream is fully described by (key, counter), so replica r of an
/// experiment is reproducible no matter which thread runs it or when.
/// Variate generation (uniform, normal, Poisson) is implemented here rather
/// than with <random> distributions so results are identical across standard
/// library vendors.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_index);

  static RngStream from_key(std::uint64_t key);

  /// Independent child stream; does not advance this stream.
  RngStream substream(std::uint64_t tag) const;

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform on (0, 1).
  double uniform_open() noexcept;
  double normal() noexcept;
  std::uint64_t poisson(double lambda);

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  RngStream() = default;

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace brwmf
