#pragma once
#include <string>
#include <vector>

#include "macap/power_alloc.hpp"

namespace macap {

struct BoundaryPoint {
  double z1 = 0.0;
  double z2_star = 0.0;
  double residual = 0.0;  // re-evaluated at z2_star
  bool found = false;
};

struct DecodingPartition {
  std::vector<RegionTag> order;        // per-sample tag
  std::vector<BoundaryPoint> boundary;  // sampled curve where available
};

struct BoundaryOptions {
  double tol_bits = 5e-5;  // residual offset defining the returned root
  int n_phases = 8;        // relative phases averaged in the residual
  int z2_scan = 24;        // log-spaced scan points per z1 slice
  int z1_grid = 12;        // curve resolution used for retagging
  double z2_max = 0.0;     // 0 = derive from the ensemble (99.9th pct)
  int max_rounds = 10;     // partition/policy alternation cap
};

struct BoundaryResult {
  bool found = false;
  double z2_star = 0.0;
  double residual = 0.0;
  std::string warning;  // multiplicity note when several upcrossings exist
};

// Phase-averaged I(x;y) - I(x1;y1) - I(x2;y2) in bits at gains
// sqrt(alpha_j * pbar * z_j); <= 0, returning to 0 only where the
// interfered constellation saturates.
double boundary_residual(double z1, double z2, double alpha1, double alpha2,
                         const SystemParams& params, const InputModel& in1,
                         const InputModel& in2, IntegrationSpec quad = {},
                         int n_phases = 8);

// Largest upcrossing of -tol_bits on (0, z2_max]; none for Gaussian x2
// (strict data-processing inequality). z1 = 0 returns the degenerate root 0.
BoundaryResult solve_boundary(double z1, double alpha1, double alpha2,
                              const SystemParams& params,
                              const InputModel& in1, const InputModel& in2,
                              double z2_max, IntegrationSpec quad = {},
                              const BoundaryOptions& opts = {});

// Strongest-channel-first rule: z2 > z1 -> order (2,1) (region Z); ties to
// (1,2).
DecodingPartition partition_ergodic(const FadingEnsemble& ensemble);

struct FixedPointResult {
  DecodingPartition partition;
  PowerPolicy policy;
  LagrangeState state;
  RateTable rates;
  double objective = 0.0;  // lambda1*C1 + lambda2*C2 of the returned round
  int rounds = 0;
  bool ergodic_fallback = false;  // no boundary root anywhere (or theta1 != theta2)
  bool oscillated = false;
  std::vector<std::string> warnings;
  std::vector<TraceRow> trace;  // convergence log of the returned round
  long joint_evals = 0;         // total across rounds
};

// Alternates run_algorithm1 with a boundary re-solve at the mean allocated
// powers until the partition stabilizes (cap opts.max_rounds); oscillation
// returns the best-objective round with a warning.
FixedPointResult partition_fixed_point(
    const FadingEnsemble& ensemble, const Weights& w, const QosSpec& qos,
    const SystemParams& params, const InputModel& in1, const InputModel& in2,
    IntegrationSpec quad = {}, SolverTols tols = {}, BoundaryOptions opts = {},
    WarmStart* warm = nullptr);

}  // namespace macap
