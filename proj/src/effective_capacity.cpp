#include "macap/effective_capacity.hpp"

#include <algorithm>
#include <cmath>

#include "macap/common.hpp"
#include "macap/decoding.hpp"
#include "macap/quadrature.hpp"

namespace macap {

double ergodic_limit(const std::vector<double>& rates,
                     const std::vector<double>& weights) {
  if (rates.size() != weights.size())
    throw std::invalid_argument("ergodic_limit: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < rates.size(); ++i) acc += weights[i] * rates[i];
  return acc;
}

double effective_capacity(const std::vector<double>& rates,
                          const std::vector<double>& weights, double theta,
                          const SystemParams& params) {
  if (rates.size() != weights.size())
    throw std::invalid_argument("effective_capacity: size mismatch");
  if (theta <= 0.0) return ergodic_limit(rates, weights);
  double tn = theta * params.n();
  // ln sum w_i exp(-tn r_i) with max-subtraction
  double mx = -HUGE_VAL;
  for (double r : rates) {
    if (!std::isfinite(r)) throw numeric_error("effective_capacity: non-finite rate");
    mx = std::max(mx, -tn * r);
  }
  double s = 0.0;
  for (std::size_t i = 0; i < rates.size(); ++i)
    s += weights[i] * std::exp(-tn * rates[i] - mx);
  double v = -(std::log(s) + mx) / tn;
  return v < 0.0 && v > -1e-12 ? 0.0 : v;
}

RegionTrace trace_region(const FadingEnsemble& ensemble, const QosSpec& qos,
                         const SystemParams& params, const InputModel& in1,
                         const InputModel& in2, int n_lambda,
                         const SolverTols& tols, const BoundaryOptions& opts,
                         const IntegrationSpec& quad) {
  if (n_lambda < 2) throw std::invalid_argument("n_lambda must be >= 2");
  std::vector<double> wt;
  wt.reserve(ensemble.samples.size());
  for (const auto& s : ensemble.samples) wt.push_back(s.weight);

  RegionTrace tr;
  tr.points.reserve(static_cast<std::size_t>(n_lambda));
  WarmStart warm;  // psi/epsilon/alpha continuity across the sweep
  for (int i = 0; i < n_lambda; ++i) {
    const double l1 = static_cast<double>(i) / (n_lambda - 1);
    const Weights w{l1, 1.0 - l1};
    CapacityPoint pt;
    pt.lambda1 = w.lambda1;
    pt.lambda2 = w.lambda2;
    try {
      FixedPointResult fp = partition_fixed_point(
          ensemble, w, qos, params, in1, in2, quad, tols, opts, &warm);
      pt.c1 = effective_capacity(fp.rates.r1, wt, qos.theta1, params);
      pt.c2 = effective_capacity(fp.rates.r2, wt, qos.theta2, params);
      pt.objective = w.lambda1 * pt.c1 + w.lambda2 * pt.c2;
      pt.converged = true;
      std::string note;
      if (fp.ergodic_fallback) note = "ergodic-tags";
      if (fp.oscillated) note += note.empty() ? "oscillated" : ";oscillated";
      for (const auto& msg : fp.warnings)
        if (msg.find("budget slack") != std::string::npos) {
          note += note.empty() ? "budget-slack" : ";budget-slack";
          break;
        }
      pt.note = note;
    } catch (const convergence_error& err) {
      pt.converged = false;
      pt.note = err.what();
      warm.valid = false;  // do not seed the next point from a failed solve
    }
    tr.points.push_back(std::move(pt));
  }
  return tr;
}

double convexity_defect(const RegionTrace& trace) {
  // distance of each point below the chord of its neighbours, in the c2 axis
  const auto& p = trace.points;
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < p.size(); ++i) {
    if (!p[i - 1].converged || !p[i].converged || !p[i + 1].converged) continue;
    double x0 = p[i - 1].c1, y0 = p[i - 1].c2;
    double x1 = p[i + 1].c1, y1 = p[i + 1].c2;
    double xm = p[i].c1, ym = p[i].c2;
    double dx = x1 - x0;
    if (std::abs(dx) < 1e-15) continue;
    double tfrac = (xm - x0) / dx;
    if (tfrac < 0.0 || tfrac > 1.0) continue;
    double chord = y0 + tfrac * (y1 - y0);
    worst = std::max(worst, chord - ym);
  }
  return worst;
}

}  // namespace macap
