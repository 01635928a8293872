#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace adamf {

/// xoshiro256** seeded through splitmix64, with hand-written uniform, normal
/// and integer draws so the stream is identical on every platform (the
/// <random> distributions are implementation-defined).
class SeededRng {
 public:
  static constexpr std::string_view kAlgorithm = "xoshiro256**/splitmix64";

  explicit SeededRng(std::uint64_t seed = 0);

  std::uint64_t seed() const { return seed_; }

  /// Independent stream for a named purpose ("init", "negatives", "noise",
  /// "masks", ...). Depends only on the seed and the label, never on how far
  /// this generator has advanced.
  SeededRng substream(std::string_view purpose) const;

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi);
  /// Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal();
  /// Uniform integer in [0, n). Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t n);

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> state_{};
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace adamf
