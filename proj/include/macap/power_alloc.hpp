#pragma once
#include <string>
#include <utility>
#include <vector>

#include "macap/effective_capacity.hpp"
#include "macap/mmse_mi.hpp"

namespace macap {

// Z: decoding order (2,1) — transmitter 2 decoded first, so r1 = I(x1;y1)
// and r2 = I(x2;y). Zc mirrors.
enum class RegionTag : unsigned char { Z = 0, Zc = 1 };

struct Weights {
  double lambda1 = 0.5;
  double lambda2 = 0.5;
};

struct PowerPolicy {
  std::vector<double> alpha1, alpha2;
};

struct LagrangeState {
  double epsilon = 0.0;
  double psi1 = 1.0, psi2 = 1.0;  // E{exp(-theta_j*TB*r_j)}
};

struct RateTable {
  std::vector<double> r1, r2;  // bits/s/Hz per sample
};

struct SolverTols {
  double alpha_tol = 1e-11;  // inner bracket-width stop
  double res_rel = 1e-7;     // per-sample residual target, relative to epsilon
  double budget_tol = 1e-3;  // |E{a1+a2} - 1|
  double psi_tol = 1e-5;     // gate into the final narrow-band phase; must sit
                             // above the wobble the tight budget band leaves
  double psi_exact = 1e-6;   // outer stop: psi self-consistency of the
                             // returned point, judged on narrow-band solves
  int inner_cap = 200;
  int mid_cap = 100;
  int outer_cap = 50;
  int pilot = 100;  // subsample size for the psi/epsilon warm start (0 = off)
};

// Reusable state across weight-grid points: per-sample allocations, the
// converged psi pair and an epsilon bracket.
struct WarmStart {
  std::vector<double> a1, a2;
  LagrangeState state;
  double eps_lo = 0.0, eps_hi = 0.0;
  bool valid = false;
};

// One row of the convergence log: which loop, its iteration count, and the
// residual that loop drives to zero.
struct TraceRow {
  const char* loop;  // "middle" or "outer"
  int iteration;
  double residual;
};

struct Algorithm1Result {
  PowerPolicy policy;
  LagrangeState state;
  RateTable rates;
  int outer_iters = 0;
  long joint_evals = 0;
  bool budget_slack = false;  // epsilon -> 0 branch taken
  std::vector<std::string> warnings;
  std::vector<TraceRow> trace;
};

// Proposition-1 residuals (res1, res2) in bits/alpha units at one sample.
// Cross terms below the alpha floor are evaluated at the floor (right limit).
std::pair<double, double> kkt_residual_Z(
    const ChannelSample& s, double alpha1, double alpha2,
    const LagrangeState& state, const Weights& w, const QosSpec& qos,
    const SystemParams& params, const InputModel& in1, const InputModel& in2,
    IntegrationSpec quad = {});
std::pair<double, double> kkt_residual_Zc(
    const ChannelSample& s, double alpha1, double alpha2,
    const LagrangeState& state, const Weights& w, const QosSpec& qos,
    const SystemParams& params, const InputModel& in1, const InputModel& in2,
    IntegrationSpec quad = {});

// Alternating per-variable root finds on the monotone residuals; negative
// candidates clamp to zero. Returns (alpha1, alpha2).
std::pair<double, double> solve_alpha_pair(
    const ChannelSample& s, RegionTag tag, const LagrangeState& state,
    const Weights& w, const QosSpec& qos, const SystemParams& params,
    const InputModel& in1, const InputModel& in2, double tol,
    IntegrationSpec quad = {});

// Full nested solver: inner per-sample alpha pairs, middle epsilon search on
// the power budget, outer damped psi fixed point.
Algorithm1Result run_algorithm1(const FadingEnsemble& ensemble,
                                const std::vector<RegionTag>& partition,
                                const Weights& w, const QosSpec& qos,
                                const SystemParams& params,
                                const InputModel& in1, const InputModel& in2,
                                IntegrationSpec quad = {}, SolverTols tols = {},
                                WarmStart* warm = nullptr);

// lambda1*C1 + lambda2*C2 for a rate table on the ensemble's weights.
double weighted_objective(const FadingEnsemble& ensemble, const RateTable& rates,
                          const Weights& w, const QosSpec& qos,
                          const SystemParams& params);

}  // namespace macap
