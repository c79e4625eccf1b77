#ifndef WAVESCORE_RNG_HPP
#define WAVESCORE_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

#include "wavescore/tensor.hpp"

namespace wavescore {

/// Seeded generator with a pinned normal-variate algorithm (Box-Muller), so
/// that streams are reproducible across standard-library implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  double uniform() {  // [0, 1)
    return std::generate_canonical<double, 53>(gen_);
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 == 0.0) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  template <typename T>
  void fill_normal(TensorT<T>& t, double stddev = 1.0) {
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<T>(stddev * normal());
  }

  /// Derive an independent stream (e.g. one per scale of a cascade).
  Rng fork(uint64_t salt) {
    return Rng(next_u64() ^ (0x9e3779b97f4a7c15ull * (salt + 1)));
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace wavescore

#endif  // WAVESCORE_RNG_HPP
