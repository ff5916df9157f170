#pragma once

#include <cstdint>
#include <limits>

namespace mbias {

/// Splittable SplitMix64 generator ("mbias-splitmix64-v1").
///
/// Stream derivation: the child for stream id `s` of a generator keyed `k`
/// is keyed `mix64(k ^ mix64(s + 0x9e3779b97f4a7c15))`. Each draw advances
/// the state by the golden gamma and returns `mix64(state)`, the reference
/// SplitMix64 output function. Uniform doubles take the top 53 bits.
/// Satisfies UniformRandomBitGenerator, so std distributions accept it.
class Rng {
 public:
  using result_type = std::uint64_t;

  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
  static constexpr const char* kName = "mbias-splitmix64-v1";

  explicit Rng(std::uint64_t seed) noexcept : key_(seed), state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    state_ += kGamma;
    return mix64(state_);
  }

  /// Independent substream; depends only on this generator's key, not on
  /// how many values it has produced.
  Rng split(std::uint64_t stream) const noexcept {
    return Rng(mix64(key_ ^ mix64(stream + kGamma)));
  }

  /// Uniform on [0, 1).
  double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n), multiply-shift reduction.
  std::uint64_t below(std::uint64_t n) noexcept {
    __extension__ using u128 = unsigned __int128;
    return static_cast<std::uint64_t>((static_cast<u128>((*this)()) * n) >> 64);
  }

  /// Standard normal draw (Marsaglia polar method).
  double normal() noexcept;

  static constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t key_;
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace mbias
