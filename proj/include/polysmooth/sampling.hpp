#pragma once

#include "polysmooth/common.hpp"

#include <cstdint>

namespace polysmooth {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// xoshiro256** with splittable seeding: stream(seed, id) gives an independent,
// reproducible sequence per (seed, id) pair, so per-sample work can be
// distributed without changing results.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) {
    std::uint64_t st = seed;
    for (auto& w : s_) w = splitmix64(st);
  }

  static Rng stream(std::uint64_t seed, std::uint64_t id) {
    std::uint64_t st = seed ^ (0xd1b54a32d192ed03ULL * (id + 1));
    return Rng(splitmix64(st));
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  std::uint64_t index(std::uint64_t n) { return next() % n; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * kPi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * kPi * u2);
  }

  Vec normal_vector(Eigen::Index n) {
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  Vec unit_vector(Eigen::Index n) {
    Vec v = normal_vector(n);
    double nv = v.norm();
    while (nv < 1e-12) {
      v = normal_vector(n);
      nv = v.norm();
    }
    return v / nv;
  }

  // Uniform on the unit simplex of dimension k-1.
  Vec simplex_weights(Eigen::Index k) {
    Vec w(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      double u = uniform();
      while (u <= 0.0) u = uniform();
      w[i] = -std::log(u);
    }
    return w / w.sum();
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace polysmooth
