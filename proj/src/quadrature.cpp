#include "macap/quadrature.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "macap/common.hpp"

namespace macap {
namespace {

// Nodes/weights of the physicists' Gauss-Hermite rule by Newton iteration on
// the recurrence, largest root first (classic gauher scheme).
HermiteRule build(int n) {
  if (n < 1 || n > 512) throw std::invalid_argument("gauss_hermite: bad node count");
  const double eps = 1e-14;
  const double pim4 = 0.7511255444649425;  // pi^(-1/4)
  std::vector<double> x(n), w(n);
  double z = 0.0;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    if (i == 0)
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
    else if (i == 1)
      z -= 1.14 * std::pow(n, 0.426) / z;
    else if (i == 2)
      z = 1.86 * z - 0.86 * x[n - 1];
    else if (i == 3)
      z = 1.91 * z - 0.91 * x[n - 2];
    else
      z = 2.0 * z - x[n - i + 1];
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = pim4, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(double(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= eps) break;
    }
    x[n - 1 - i] = z;
    x[i] = -z;
    w[n - 1 - i] = 2.0 / (pp * pp);
    w[i] = w[n - 1 - i];
  }
  // normalize so the weights form an exact probability measure
  double s = 0.0;
  for (double v : w) s += v;
  for (double& v : w) v /= s;
  return {std::move(x), std::move(w)};
}

}  // namespace

const HermiteRule& gauss_hermite(int n) {
  static std::map<int, HermiteRule> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, build(n)).first;
  return it->second;
}

}  // namespace macap
