#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace propbench {

/// Seedable generator with a stable stream across compilers and releases.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Standard distributions are implementation-defined, so every
/// transform below is written out explicitly. Any change to these transforms
/// must bump kVersion.
class Rng {
 public:
  static constexpr std::string_view kName = "mt19937_64";
  static constexpr int kVersion = 1;

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n) by rejection; n must be > 0.
  std::uint64_t below(std::uint64_t n);
  /// Standard normal via the Box-Muller transform (one cached spare).
  double normal();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Per-item seed derived from a global seed and a string key (e.g. image id).
std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view key);

/// Human-readable generator tag recorded in result provenance.
std::string rng_tag();

}  // namespace propbench
