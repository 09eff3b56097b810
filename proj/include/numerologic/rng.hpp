#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace numerologic {

// All sampling goes through this wrapper instead of <random> distributions:
// std::mt19937_64 output is pinned by the standard, the distributions are not,
// and generated datasets must be byte-identical everywhere.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // Uniform over [0, n), unbiased via rejection.
  uint64_t uniform_u64(uint64_t n) {
    if (n == 0) return 0;
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % n;
  }

  // Uniform over [lo, hi] inclusive.
  int64_t uniform_i64(int64_t lo, int64_t hi) {
    return lo + static_cast<int64_t>(uniform_u64(static_cast<uint64_t>(hi - lo) + 1));
  }

  // Uniform over [a, b) with 53-bit mantissa resolution.
  double uniform_real(double a, double b) {
    double u = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    return a + u * (b - a);
  }

  // Box-Muller; draws two uniforms per call, no spare caching.
  float normal(float mean, float stddev) {
    double u1 = uniform_real(0.0, 1.0);
    double u2 = uniform_real(0.0, 1.0);
    while (u1 <= 0.0) u1 = uniform_real(0.0, 1.0);
    double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    return mean + stddev * static_cast<float>(z);
  }

  // Fisher-Yates, fixed visitation order.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_u64(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent substream seed for (master, stream) pairs.
inline uint64_t derive_seed(uint64_t master, uint64_t stream) {
  return splitmix64(master ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

}  // namespace numerologic
