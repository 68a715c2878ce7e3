#ifndef CQGRAV_RNG_HPP
#define CQGRAV_RNG_HPP

#include <cmath>
#include <cstdint>

namespace cqgrav {

inline std::uint64_t splitmix64(std::uint64_t& s) {
  std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derive a stream seed from a base seed and an index (per-trajectory streams).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t s = base ^ (0x2545f4914f6cdd1dULL * (index + 1));
  splitmix64(s);
  return splitmix64(s);
}

/// xoshiro-free, allocation-free generator with an explicit Box-Muller normal.
/// std::normal_distribution is implementation-defined; this one is bit-stable.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {
    // warm up
    splitmix64(state_);
    splitmix64(state_);
  }

  std::uint64_t next_u64() { return splitmix64(state_); }

  /// Uniform in (0,1).
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace cqgrav

#endif
