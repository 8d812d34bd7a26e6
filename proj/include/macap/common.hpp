#pragma once
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace macap {

using cplx = std::complex<double>;

inline constexpr double kLn2 = 0.6931471805599453094;

// Error taxonomy used across modules; the CLI maps these to exit categories.
struct numeric_error : std::runtime_error {
  explicit numeric_error(const std::string& m) : std::runtime_error(m) {}
};
struct convergence_error : std::runtime_error {
  explicit convergence_error(const std::string& m) : std::runtime_error(m) {}
};
struct parse_error : std::runtime_error {
  explicit parse_error(const std::string& m) : std::runtime_error(m) {}
};
struct estimation_error : std::runtime_error {
  explicit estimation_error(const std::string& m) : std::runtime_error(m) {}
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

// Shortest round-trip decimal form; used by every CSV/report writer so that
// identical runs emit byte-identical files.
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // prefer a shorter form when it round-trips
  for (int prec = 1; prec < 17; ++prec) {
    char s[40];
    std::snprintf(s, sizeof(s), "%.*g", prec, v);
    if (std::strtod(s, nullptr) == v) return s;
  }
  return buf;
}

// FNV-1a over bytes; scenario fingerprints.
inline std::uint64_t fnv1a(const void* data, std::size_t n,
                           std::uint64_t h = 1469598103934665603ull) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}
inline std::uint64_t fnv1a(const std::string& s,
                           std::uint64_t h = 1469598103934665603ull) {
  return fnv1a(s.data(), s.size(), h);
}

}  // namespace macap
