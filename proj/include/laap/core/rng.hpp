#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace laap {

// SplitMix64 generator. Chosen over <random> engines because its output is
// identical on every platform and its state is a single serializable word.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Inclusive range [lo, hi].
  int uniform_int(int lo, int hi) {
    std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next_u64() % span);
  }

  // Box-Muller without caching; consumes two uniforms per draw so the
  // stream position is a pure function of the draw count.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(1.0 - u1));
    return r * std::cos(6.283185307179586476925286766559 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = next_u64() % i;
      std::swap(v[i - 1], v[j]);
    }
  }

  std::uint64_t state() const { return state_; }
  void set_state(std::uint64_t s) { state_ = s; }

  // Derives an independent stream key from (seed, tag) pairs, e.g. one
  // stream per generated instance.
  static std::uint64_t key(std::uint64_t seed, std::uint64_t tag) {
    Rng r(seed ^ (tag * 0x9e3779b97f4a7c15ULL + 0x6a09e667f3bcc909ULL));
    return r.next_u64();
  }

 private:
  std::uint64_t state_;
};

}  // namespace laap
