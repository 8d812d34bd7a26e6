#include "macap/decoding.hpp"

#include <algorithm>
#include <cmath>

#include "macap/common.hpp"
#include "macap/mmse_mi.hpp"

namespace macap {
namespace {

constexpr double kPi = 3.14159265358979323846;

double phase_avg_joint_nats(double g1, double g2, const InputModel& in1,
                            const InputModel& in2, IntegrationSpec quad,
                            int n_phases) {
  // Gaussian participants make the joint MI phase-invariant.
  if (n_phases < 1) throw std::invalid_argument("n_phases must be >= 1");
  if (in1.is_gaussian() || in2.is_gaussian()) n_phases = 1;
  double acc = 0.0;
  for (int k = 0; k < n_phases; ++k) {
    const double phi = 2.0 * kPi * k / n_phases;
    const cplx g2p = g2 * cplx{std::cos(phi), std::sin(phi)};
    acc += joint_stats(in1, cplx{g1, 0.0}, in2, g2p, quad).mi_nats;
  }
  return acc / n_phases;
}

}  // namespace

double boundary_residual(double z1, double z2, double alpha1, double alpha2,
                         const SystemParams& params, const InputModel& in1,
                         const InputModel& in2, IntegrationSpec quad,
                         int n_phases) {
  if (z1 < 0.0 || z2 < 0.0) throw std::invalid_argument("negative gain power");
  const double g1 = std::sqrt(std::max(0.0, alpha1) * params.pbar * z1);
  const double g2 = std::sqrt(std::max(0.0, alpha2) * params.pbar * z2);
  const double joint =
      phase_avg_joint_nats(g1, g2, in1, in2, quad, n_phases);
  const double m1 = single_stats(in1, cplx{g1, 0.0}, quad).mi_nats;
  const double m2 = single_stats(in2, cplx{g2, 0.0}, quad).mi_nats;
  return (joint - m1 - m2) / kLn2;
}

BoundaryResult solve_boundary(double z1, double alpha1, double alpha2,
                              const SystemParams& params,
                              const InputModel& in1, const InputModel& in2,
                              double z2_max, IntegrationSpec quad,
                              const BoundaryOptions& opts) {
  BoundaryResult out;
  const double s1 = std::max(0.0, alpha1) * params.pbar * z1;
  if (z1 <= 0.0 || s1 <= kAlphaFloor) {
    // single-user channel: the order is irrelevant, boundary at the origin
    out.found = true;
    return out;
  }
  if (alpha2 <= kAlphaFloor) return out;  // silent x2: residual identically 0
  if (in2.is_gaussian()) return out;  // strict data-processing gap: no return
  if (!(z2_max > 0.0)) throw std::invalid_argument("z2_max must be positive");

  const double tol = opts.tol_bits;
  auto g = [&](double z2) {
    return boundary_residual(z1, z2, alpha1, alpha2, params, in1, in2, quad,
                             opts.n_phases) +
           tol;
  };

  // The dip is unimodal in practice (interference onset, then constellation
  // saturation); a still-negative residual at the ceiling means no return.
  const double g_top = g(z2_max);
  if (g_top < 0.0) return out;

  const int n = std::max(8, opts.z2_scan);
  const double z_lo = z2_max * 1e-6;
  const double step = std::log(z2_max / z_lo) / (n - 1);
  double prev_z = 0.0, prev_g = tol;  // z2 = 0: residual exactly 0
  double lo = -1.0, hi = -1.0, glo = 0.0, ghi = 0.0;
  int crossings = 0;
  for (int i = 0; i < n; ++i) {
    const double z = (i == n - 1) ? z2_max : z_lo * std::exp(step * i);
    const double gz = (i == n - 1) ? g_top : g(z);
    if (prev_g < 0.0 && gz >= 0.0) {
      ++crossings;
      lo = prev_z;
      glo = prev_g;
      hi = z;
      ghi = gz;
    }
    prev_z = z;
    prev_g = gz;
  }
  if (crossings == 0) return out;  // never dipped below -tol: no sign change
  if (crossings > 1)
    out.warning = "multiple boundary candidates; largest returned";

  for (int it = 0; it < 80 && hi - lo > 1e-9 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if (std::fabs(gm) <= 0.1 * tol) {
      lo = hi = mid;
      glo = ghi = gm;
      break;
    }
    if (gm < 0.0) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
      ghi = gm;
    }
  }
  out.found = true;
  out.z2_star = hi;
  out.residual = ghi - tol;
  return out;
}

DecodingPartition partition_ergodic(const FadingEnsemble& ensemble) {
  DecodingPartition part;
  part.order.reserve(ensemble.samples.size());
  for (const auto& s : ensemble.samples) {
    const double z1 = std::norm(s.h1), z2 = std::norm(s.h2);
    part.order.push_back(z2 > z1 ? RegionTag::Z : RegionTag::Zc);
  }
  return part;
}

namespace {

double percentile(std::vector<double> v, double p) {
  if (v.empty()) throw std::invalid_argument("empty percentile input");
  std::sort(v.begin(), v.end());
  const double idx = p * (v.size() - 1);
  const std::size_t i = static_cast<std::size_t>(idx);
  if (i + 1 >= v.size()) return v.back();
  const double frac = idx - static_cast<double>(i);
  return v[i] * (1.0 - frac) + v[i + 1] * frac;
}

// Piecewise-constant boundary lookup: nearest curve point in log z1.
const BoundaryPoint& nearest_point(const std::vector<BoundaryPoint>& curve,
                                   double z1) {
  const double lz = std::log(std::max(z1, 1e-300));
  std::size_t best = 0;
  double bd = 1e300;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const double d = std::fabs(std::log(std::max(curve[i].z1, 1e-300)) - lz);
    if (d < bd) {
      bd = d;
      best = i;
    }
  }
  return curve[best];
}

std::uint64_t tags_hash(const std::vector<RegionTag>& tags) {
  return fnv1a(tags.data(), tags.size() * sizeof(RegionTag));
}

}  // namespace

FixedPointResult partition_fixed_point(
    const FadingEnsemble& ensemble, const Weights& w, const QosSpec& qos,
    const SystemParams& params, const InputModel& in1, const InputModel& in2,
    IntegrationSpec quad, SolverTols tols, BoundaryOptions opts,
    WarmStart* warm) {
  if (ensemble.samples.empty()) throw std::invalid_argument("empty ensemble");
  FixedPointResult best;
  FixedPointResult cur;
  cur.partition = partition_ergodic(ensemble);

  const bool theta_equal = qos.theta1 == qos.theta2;
  if (!theta_equal) {
    // Theorem 2 needs theta1 = theta2; fall back to the ergodic heuristic.
    Algorithm1Result run =
        run_algorithm1(ensemble, cur.partition.order, w, qos, params, in1,
                       in2, quad, tols, warm);
    cur.policy = std::move(run.policy);
    cur.state = run.state;
    cur.rates = std::move(run.rates);
    cur.objective = weighted_objective(ensemble, cur.rates, w, qos, params);
    cur.rounds = 1;
    cur.ergodic_fallback = true;
    cur.warnings = std::move(run.warnings);
    cur.trace = std::move(run.trace);
    cur.joint_evals = run.joint_evals;
    cur.warnings.push_back(
        "theta1 != theta2: boundary rule inapplicable, ergodic heuristic "
        "used");
    return cur;
  }

  std::vector<double> z1s, z2s;
  z1s.reserve(ensemble.samples.size());
  z2s.reserve(ensemble.samples.size());
  for (const auto& s : ensemble.samples) {
    z1s.push_back(std::norm(s.h1));
    z2s.push_back(std::norm(s.h2));
  }
  const double z2_ceiling =
      opts.z2_max > 0.0 ? opts.z2_max : percentile(z2s, 0.999);
  const double z1_lo = std::max(percentile(z1s, 0.005), 1e-12);
  const double z1_hi = std::max(percentile(z1s, 0.995), z1_lo * 1.0001);
  const int ng = std::max(2, opts.z1_grid);

  std::vector<std::uint64_t> seen{tags_hash(cur.partition.order)};
  bool have_best = false;

  for (int round = 1; round <= opts.max_rounds; ++round) {
    Algorithm1Result run =
        run_algorithm1(ensemble, cur.partition.order, w, qos, params, in1,
                       in2, quad, tols, warm);
    cur.policy = std::move(run.policy);
    cur.state = run.state;
    cur.rates = std::move(run.rates);
    cur.objective = weighted_objective(ensemble, cur.rates, w, qos, params);
    cur.rounds = round;
    cur.warnings = std::move(run.warnings);
    cur.trace = std::move(run.trace);
    cur.joint_evals += run.joint_evals;

    // boundary at the mean allocated powers of this round's policy
    double ab1 = 0.0, ab2 = 0.0;
    for (std::size_t i = 0; i < ensemble.samples.size(); ++i) {
      ab1 += ensemble.samples[i].weight * cur.policy.alpha1[i];
      ab2 += ensemble.samples[i].weight * cur.policy.alpha2[i];
    }
    cur.partition.boundary.clear();
    bool any_root = false;
    for (int k = 0; k < ng; ++k) {
      const double z1 =
          z1_lo * std::pow(z1_hi / z1_lo, static_cast<double>(k) / (ng - 1));
      BoundaryResult br = solve_boundary(z1, ab1, ab2, params, in1, in2,
                                         z2_ceiling, quad, opts);
      BoundaryPoint bp;
      bp.z1 = z1;
      bp.z2_star = br.z2_star;
      bp.residual = br.residual;
      bp.found = br.found;
      if (br.found) any_root = true;
      if (!br.warning.empty()) cur.warnings.push_back(br.warning);
      cur.partition.boundary.push_back(bp);
    }

    std::vector<RegionTag> next(ensemble.samples.size());
    if (!any_root) {
      next = partition_ergodic(ensemble).order;  // documented fallback
      cur.ergodic_fallback = true;
    } else {
      cur.ergodic_fallback = false;
      for (std::size_t i = 0; i < ensemble.samples.size(); ++i) {
        const BoundaryPoint& bp =
            nearest_point(cur.partition.boundary, z1s[i]);
        if (bp.found)
          next[i] = z2s[i] > bp.z2_star ? RegionTag::Z : RegionTag::Zc;
        else
          next[i] = z2s[i] > z1s[i] ? RegionTag::Z : RegionTag::Zc;
      }
    }

    if (!have_best || cur.objective > best.objective) {
      best = cur;
      have_best = true;
    }
    if (next == cur.partition.order) return cur;  // fixed point reached

    const std::uint64_t h = tags_hash(next);
    if (std::find(seen.begin(), seen.end(), h) != seen.end()) {
      best.oscillated = true;
      best.warnings.push_back("partition oscillated; best round returned");
      return best;
    }
    seen.push_back(h);
    cur.partition.order = std::move(next);
  }
  best.oscillated = true;
  best.warnings.push_back("alternation cap hit; best round returned");
  return best;
}

}  // namespace macap
