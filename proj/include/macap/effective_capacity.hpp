#pragma once
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "macap/channel.hpp"
#include "macap/constellation.hpp"

namespace macap {

// QoS exponents in 1/bits; theta = 0 means the ergodic (no-QoS) limit.
struct QosSpec {
  double theta1 = 0.01;
  double theta2 = 0.01;
};

struct CapacityPoint {
  double lambda1 = 0.0, lambda2 = 0.0;
  double c1 = 0.0, c2 = 0.0;
  double objective = 0.0;
  bool converged = true;
  std::string note;
};

struct RegionTrace {
  std::vector<CapacityPoint> points;  // ordered by lambda1
  std::uint64_t fingerprint = 0;      // scenario hash stamped by the runner
};

// -(1/(theta*T*B)) ln E{ exp(-theta*T*B*r) }, rates and result in bits/s/Hz.
// theta <= 0 dispatches to the ergodic limit.
double effective_capacity(const std::vector<double>& rates,
                          const std::vector<double>& weights, double theta,
                          const SystemParams& params);

double ergodic_limit(const std::vector<double>& rates,
                     const std::vector<double>& weights);

// Largest distance below the upper-right frontier over the trace's own points
// (0 for a convex frontier); diagnostic for the region-convexity property.
double convexity_defect(const RegionTrace& trace);

struct SolverTols;       // power_alloc
struct BoundaryOptions;  // decoding
struct IntegrationSpec;  // quadrature

// Sweep the weight grid lambda1 in [0,1] (n_lambda points), running the
// partition/policy fixed point at each weight; endpoints reduce to
// single-user problems. Warm starts carry across the sweep. Failed points
// are marked, not interpolated.
RegionTrace trace_region(const FadingEnsemble& ensemble, const QosSpec& qos,
                         const SystemParams& params, const InputModel& in1,
                         const InputModel& in2, int n_lambda,
                         const SolverTols& tols, const BoundaryOptions& opts,
                         const IntegrationSpec& quad);

}  // namespace macap
