#pragma once
// Basic scalar/complex types and small numeric helpers shared by the library.

#include <complex>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace forge {

using cplx = std::complex<double>;

inline constexpr double pi = 3.141592653589793238462643383279502884;
inline constexpr double two_pi = 2.0 * pi;
inline constexpr double half_pi = 0.5 * pi;

// |t|_+ := max(|t|, 1).  Used throughout the growth/decay estimates.
inline double abs_plus(double t) { return std::max(std::abs(t), 1.0); }
inline double abs_plus(const cplx& z) { return std::max(std::abs(z), 1.0); }

// log_+(t) := max(log|t|, 0).
inline double log_plus(double t) {
  double a = std::abs(t);
  return a > 1.0 ? std::log(a) : 0.0;
}

inline double sq(double x) { return x * x; }

inline bool finite(const cplx& z) {
  return std::isfinite(z.real()) && std::isfinite(z.imag());
}

// Numeric-failure signal: quadrature/chart routines throw this when a
// requested tolerance or iteration budget cannot be met.
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Uniformly spaced samples, endpoints included.
inline std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = a + (b - a) * double(i) / double(n - 1);
  return v;
}

// Geometrically spaced samples, endpoints included; requires a, b > 0.
inline std::vector<double> geomspace(double a, double b, int n) {
  std::vector<double> v(n);
  double la = std::log(a), lb = std::log(b);
  for (int i = 0; i < n; ++i)
    v[i] = std::exp(la + (lb - la) * double(i) / double(n - 1));
  return v;
}

// Deterministic RNG used by every randomized routine; the seed is always
// recorded in report headers so runs can be reproduced bit-for-bit.
struct Rng {
  std::mt19937_64 gen;
  explicit Rng(std::uint64_t seed) : gen(seed) {}
  double uniform(double a, double b) {
    std::uniform_real_distribution<double> d(a, b);
    return d(gen);
  }
  int uniform_int(int a, int b) {  // inclusive
    std::uniform_int_distribution<int> d(a, b);
    return d(gen);
  }
};

// FNV-1a over raw bytes; used to key chart caches by geometry.
inline std::uint64_t fnv1a(const void* data, std::size_t n,
                           std::uint64_t h = 1469598103934665603ull) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t fnv1a_doubles(const std::vector<double>& v,
                                   std::uint64_t h = 1469598103934665603ull) {
  return v.empty() ? h : fnv1a(v.data(), v.size() * sizeof(double), h);
}

}  // namespace forge
