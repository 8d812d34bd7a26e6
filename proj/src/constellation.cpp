#include "macap/constellation.hpp"

#include <cmath>

namespace macap {

Constellation make_psk(int order) {
  if (order < 2) throw std::invalid_argument("make_psk: order must be >= 2");
  Constellation c;
  c.label = (order == 2) ? "bpsk" : (std::to_string(order) + "-psk");
  c.points.reserve(order);
  for (int k = 0; k < order; ++k) {
    double a = 2.0 * M_PI * k / order;
    c.points.push_back({cplx(std::cos(a), std::sin(a)), 1.0 / order});
  }
  // pin the exact BPSK pair {+1,-1}
  if (order == 2) {
    c.points[0].value = cplx(1.0, 0.0);
    c.points[1].value = cplx(-1.0, 0.0);
  }
  return c;
}

Constellation make_qam(int order) {
  int m = (int)std::lround(std::sqrt((double)order));
  if (order < 4 || m * m != order)
    throw std::invalid_argument("make_qam: order must be a perfect square >= 4");
  Constellation c;
  c.label = std::to_string(order) + "-qam";
  c.points.reserve(order);
  // square grid at odd integers, rescaled to unit average energy
  double energy = 2.0 * (m * m - 1) / 3.0;
  double s = 1.0 / std::sqrt(energy);
  for (int i = 0; i < m; ++i)
    for (int q = 0; q < m; ++q)
      c.points.push_back(
          {cplx((2 * i - m + 1) * s, (2 * q - m + 1) * s), 1.0 / order});
  return c;
}

ValidationReport validate(const Constellation& c) {
  if (c.points.size() < 2) return {false, "constellation has fewer than 2 points"};
  double psum = 0.0, energy = 0.0;
  for (const auto& p : c.points) {
    if (p.prior < 0.0) return {false, "negative prior " + fmt_double(p.prior)};
    psum += p.prior;
    energy += p.prior * std::norm(p.value);
  }
  if (std::abs(psum - 1.0) > 1e-12)
    return {false, "priors sum to " + fmt_double(psum)};
  if (std::abs(energy - 1.0) > 1e-12)
    return {false, "average energy " + fmt_double(energy)};
  return {};
}

InputModel InputModel::from(Constellation c) {
  auto rep = validate(c);
  if (!rep.ok) throw std::invalid_argument("InputModel: " + rep.message);
  InputModel m;
  m.kind = Kind::Finite;
  m.finite = std::move(c);
  return m;
}

}  // namespace macap
