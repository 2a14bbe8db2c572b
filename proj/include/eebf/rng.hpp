#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include <Eigen/Dense>

#include "eebf/common.hpp"

namespace eebf {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derive an independent substream seed from a base seed and a path of tags,
// e.g. {drop_id, realization_id}. Order-sensitive, collision-resistant enough
// for simulation bookkeeping.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = splitmix64(base);
  for (std::uint64_t t : path) s = splitmix64(s ^ splitmix64(t + 0x632be59bd9b4e019ULL));
  return s;
}

// mt19937_64 with a hand-rolled Box-Muller transform. std::normal_distribution
// is implementation-defined, so the gaussian stream is pinned here to keep
// results byte-identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // uniform in (0, 1]; never returns 0 so log() below is safe
  double uniform() { return (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53; }

  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // CN(0,1): unit total variance, i.i.d. real/imag parts
  Cplx cgaussian() { return {gaussian() * M_SQRT1_2, gaussian() * M_SQRT1_2}; }

  Eigen::VectorXcd cgaussian_vector(int n) {
    Eigen::VectorXcd z(n);
    for (int i = 0; i < n; ++i) z(i) = cgaussian();
    return z;
  }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace eebf
