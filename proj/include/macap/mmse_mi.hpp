#pragma once
#include <cstdint>
#include <string>

#include "macap/channel.hpp"
#include "macap/constellation.hpp"
#include "macap/quadrature.hpp"

namespace macap {

// Effective complex amplitude multiplying x: gain = sqrt(alpha*pbar)*h.
struct ScaledInput {
  InputModel input;
  cplx gain;
};

struct MiResult {
  double nats = 0.0;
  double bits = 0.0;
  double se_nats = 0.0;  // standard error; nonzero only for the MC oracle
};

// Everything Theorem 1 needs for one transmitter at one operating point.
// Derivatives are d/dalpha_j in nats; rates convert to bits at the caller.
struct DerivativeReport {
  double d_own = 0.0;        // dI(x_j;y)/dalpha_j
  double d_own_clean = 0.0;  // dI(x_j;y_j)/dalpha_j = pbar*z_j*mmse_clean
  double mmse_joint = 0.0;   // MMSE(x_j;y)
  double mmse_clean = 0.0;   // MMSE(x_j;y_j)
  double cross_term = 0.0;   // pbar*sqrt(am/aj)*Re(h_j h_m^* E{x_j x_m^* - xhat_j xhat_m^*})
  double d_cross = 0.0;      // dr_m/dalpha_j = d_own - d_own_clean
  bool alpha_floor_applied = false;
};

// Below this allocation a transmitter is treated as silent: the cross term's
// sqrt(alpha_m/alpha_j) factor is evaluated at the floor instead (right limit).
inline constexpr double kAlphaFloor = 1e-8;

// One-pass bundles shared by the KKT solver: a single quadrature sweep yields
// the joint MI together with both MMSEs and the estimator cross-correlation.
struct SingleStats {
  double mi_nats = 0.0;
  double mmse = 1.0;
};
struct JointStats {
  double mi_nats = 0.0;
  double mmse1 = 1.0;
  double mmse2 = 1.0;
  cplx cross;  // E{xhat_1 conj(xhat_2)}
};

SingleStats single_stats(const InputModel& in, cplx gain, IntegrationSpec quad = {});
JointStats joint_stats(const InputModel& in1, cplx g1, const InputModel& in2,
                       cplx g2, IntegrationSpec quad = {});

MiResult mi_single(const ScaledInput& s, IntegrationSpec quad = {});
MiResult mi_joint(const ScaledInput& s1, const ScaledInput& s2,
                  IntegrationSpec quad = {});
// I(x_j;y) with the other input unknown: mi_joint - mi_single(other).
MiResult mi_interference(int j, const ScaledInput& s1, const ScaledInput& s2,
                         IntegrationSpec quad = {});

cplx conditional_mean(int j, const ScaledInput& s1, const ScaledInput& s2, cplx y);
double mmse(int j, const ScaledInput& s1, const ScaledInput& s2,
            IntegrationSpec quad = {});

DerivativeReport derivative_report(int j, const InputModel& in1,
                                   const InputModel& in2, cplx h1, cplx h2,
                                   double alpha1, double alpha2,
                                   const SystemParams& params,
                                   IntegrationSpec quad = {});

// Independent verification oracle for Eq.-(3)-style joint MI; tests only.
MiResult mc_oracle_mi(const ScaledInput& s1, const ScaledInput& s2,
                      long n_samples, std::uint64_t seed);

// Debug aid: per-node values of the joint-MI outer integrand at one operating
// point (finite alphabets only). Columns: node_a, node_b, t_re, t_im, weight,
// integrand; mi_nats = -1 - sum(weight * integrand).
void dump_integrand_csv(const ScaledInput& s1, const ScaledInput& s2,
                        const std::string& path,
                        const std::string& header_comment,
                        IntegrationSpec quad = {});

}  // namespace macap
