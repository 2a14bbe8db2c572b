#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace eebf {

using Cplx = std::complex<double>;

inline constexpr double kLn2 = 0.69314718055994530942;

// dBm / dB conversions. These are meant to be called exactly once, at the
// configuration boundary; everything downstream works in linear watts.
inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watt_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

// Flat index of user (cell j, in-cell index k), row-major over cells.
inline int user_index(int j, int k, int users_per_cell) { return j * users_per_cell + k; }

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// FNV-1a over raw bytes. Doubles are hashed by bit pattern, so bitwise-equal
// parameter sets hash identically across runs and thread counts.
struct Fnv1a {
  std::uint64_t state = 1469598103934665603ULL;

  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      state ^= p[i];
      state *= 1099511628211ULL;
    }
  }
  void add(double v) { bytes(&v, sizeof v); }
  void add(std::uint64_t v) { bytes(&v, sizeof v); }
  void add(std::int64_t v) { bytes(&v, sizeof v); }
  void add(int v) { add(static_cast<std::int64_t>(v)); }
};

}  // namespace eebf
