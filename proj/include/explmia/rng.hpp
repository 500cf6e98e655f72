#ifndef EXPLMIA_RNG_HPP
#define EXPLMIA_RNG_HPP

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace explmia {

// Counter-free splitmix64 stream. Streams are derived by hashing a seed with
// a list of stream ids, so any task (model index, step, example) can own an
// independent generator regardless of scheduling order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static Rng derive(std::uint64_t seed, std::initializer_list<std::uint64_t> stream) {
    std::uint64_t s = mix(seed);
    for (std::uint64_t id : stream) s = mix(s ^ mix(id));
    return Rng(s);
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in [lo, hi).
  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  // Box-Muller without a cached spare, so draw order is position-independent.
  double next_normal() {
    double u1;
    do {
      u1 = next_double();
    } while (u1 <= 0.0);
    double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double next_normal(double mean, double stddev) {
    return mean + stddev * next_normal();
  }

 private:
  std::uint64_t state_;
};

}  // namespace explmia

#endif  // EXPLMIA_RNG_HPP
