#pragma once

#include <cstdint>

namespace twoinf {

// Seeded counter-based stream. Output k is SplitMix64's finalizer applied to
// seed + k * 0x9E3779B97F4A7C15, so a given seed produces the same 64-bit
// sequence on every platform. Rademacher signs are taken bit by bit from these
// words and are therefore bit-reproducible everywhere; uniform doubles use the
// top 53 bits. Normal draws go through Box-Muller and so depend on the
// platform's log/cos/sin.
//
// A stream is not thread-safe; give each worker its own.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) noexcept : seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t position() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept;

  /// Uniform on [0, 1).
  double uniform() noexcept;

  /// Standard normal.
  double normal() noexcept;

  /// Independent stream for a different purpose (domain separation).
  RngStream derive(std::uint64_t tag) const noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Domain tags XOR'ed into user seeds so matrix generation and estimator
// sampling never share a stream.
inline constexpr std::uint64_t kGapMatrixTag = 0x6761702d6d617472ULL;   // "gap-matr"
inline constexpr std::uint64_t kTallMatrixTag = 0x74616c6c2d6d6174ULL;  // "tall-mat"
inline constexpr std::uint64_t kQrCompletionTag = 0x71722d636f6d706cULL; // "qr-compl"

}  // namespace twoinf
