#include "macap/power_alloc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "macap/common.hpp"

namespace macap {
namespace {

struct EvalPoint {
  double res1 = 0.0, res2 = 0.0;  // Proposition-1 residuals, bits/alpha
  double r1 = 0.0, r2 = 0.0;      // rates, bits/s/Hz
};

// Residual acceptance scale: relative to epsilon once the budget price is
// material, with an absolute floor so near-zero prices (slack probes) don't
// demand sub-double-precision residuals.
constexpr double kResFloor = 1e-4;

// Per-run evaluation engine. Maps a region tag onto the (clean, first-decoded)
// role pair and serves residuals/rates with at most one joint pass per point.
class KktSolver {
 public:
  KktSolver(const InputModel& in1, const InputModel& in2, const Weights& w,
            const QosSpec& qos, const SystemParams& params,
            IntegrationSpec quad, const SolverTols& tols)
      : w_(w), qos_(qos), params_(params), quad_(quad), quad_fine_(quad),
        tols_(tols) {
    in_[0] = &in1;
    in_[1] = &in2;
    if (!(w.lambda1 >= 0.0) || !(w.lambda2 >= 0.0) ||
        std::fabs(w.lambda1 + w.lambda2 - 1.0) > 1e-9)
      throw std::invalid_argument("weights must be nonnegative and sum to 1");
    if (!(qos.theta1 >= 0.0) || !(qos.theta2 >= 0.0))
      throw std::invalid_argument("qos exponents must be nonnegative");
  }

  void set_state(const LagrangeState& st) { st_ = st; }
  const LagrangeState& state() const { return st_; }
  long joint_evals() const { return joint_evals_; }

  // Bracketing probes of the budget search only need alphas accurate to a
  // fraction of budget_tol; the accepted point is re-solved at scale 1.
  // Probes also drop to a coarser node grid (node-study-safe offsets).
  void set_ftol_scale(double s) {
    ftol_scale_ = s;
    IntegrationSpec q = quad_fine_;
    if (s > 1.0 && q.nodes >= 10)
      q.nodes = std::max(6, q.nodes - (q.nodes <= 12 ? 5 : 6));
    if (q.nodes != quad_.nodes) {
      quad_ = q;
      joint_valid_ = false;
      single_valid_[0] = single_valid_[1] = false;
    }
  }

  void set_sample(const ChannelSample& s, RegionTag tag) {
    // role c = decoded last (clean channel), role f = decoded first
    c_ = (tag == RegionTag::Z) ? 0 : 1;
    f_ = 1 - c_;
    h_[0] = s.h1;
    h_[1] = s.h2;
    z_[0] = std::norm(s.h1);
    z_[1] = std::norm(s.h2);
    joint_valid_ = false;
    single_valid_[0] = single_valid_[1] = false;
  }

  EvalPoint eval(double a1, double a2, bool need_res_c, bool need_res_f) {
    const double a[2] = {a1, a2};
    const double ac = a[c_], af = a[f_];
    const bool act_c = ac >= kAlphaFloor, act_f = af >= kAlphaFloor;
    const double n = params_.n();
    const double pb = params_.pbar;

    const SingleStats ssc = single(c_, ac);
    EvalPoint ev;
    const double rc = ssc.mi_nats / kLn2;
    double rf = 0.0;
    SingleStats ssf{};
    if (act_f) {
      if (act_c) {
        const JointStats& js = joint_floored(a, -1);
        rf = std::max(0.0, (js.mi_nats - ssc.mi_nats) / kLn2);
      } else {
        ssf = single(f_, af);  // clean user silent: no interference on f
        rf = ssf.mi_nats / kLn2;
      }
    }

    const double dc = lam(c_) / psi(c_) * std::exp(-theta(c_) * n * rc);
    const double df = lam(f_) / psi(f_) * std::exp(-theta(f_) * n * rf);

    if (need_res_f) {
      double d_own_f;  // dI(x_f;y)/da_f, nats
      if (act_c) {
        const double aff = std::max(af, kAlphaFloor);
        const JointStats& js = joint_floored(a, f_);
        d_own_f = pb * z_[f_] * js_mmse(js, f_) + cross_term(js, f_, aff, ac);
      } else {
        // other user silent: the cross term vanishes in the limit
        const SingleStats sf =
            act_f ? ssf : single(f_, std::max(af, kAlphaFloor));
        d_own_f = pb * z_[f_] * sf.mmse;
      }
      ev_res(ev, f_) = df * d_own_f / kLn2 - st_.epsilon;
    }
    if (need_res_c) {
      double res = dc * pb * z_[c_] * ssc.mmse / kLn2 - st_.epsilon;
      if (act_f) {
        // interference derivative dr_f/da_c = (d_own_c - d_clean_c)/ln2
        const double acf = std::max(ac, kAlphaFloor);
        const JointStats& js = joint_floored(a, c_);
        const SingleStats sc = act_c ? ssc : single(c_, acf);
        const double d_own_c =
            pb * z_[c_] * js_mmse(js, c_) + cross_term(js, c_, acf, af);
        res += df * (d_own_c - pb * z_[c_] * sc.mmse) / kLn2;
      }
      ev_res(ev, c_) = res;
    }
    double r[2];
    r[c_] = rc;
    r[f_] = rf;
    ev.r1 = r[0];
    ev.r2 = r[1];
    return ev;
  }

  // Alternating per-variable root solves, role f first; converged when both
  // residuals at the common point satisfy stationarity/slackness. Silent
  // users whose activation bound is already nonpositive skip the exact check.
  void solve_sample(double& a1, double& a2) {
    double a[2] = {std::max(a1, 0.0), std::max(a2, 0.0)};
    const double ftol = res_ftol();
    for (int it = 0; it < tols_.inner_cap; ++it) {
      solve_one(f_, a);
      solve_one(c_, a);
      const bool exact_c =
          a[c_] >= kAlphaFloor || activation_bound(c_) > 0.0;
      const bool exact_f =
          a[f_] >= kAlphaFloor || activation_bound(f_) > 0.0;
      const EvalPoint ev = eval(a[0], a[1], exact_c, exact_f);
      const double res[2] = {ev.res1, ev.res2};
      bool ok = true;
      for (int j = 0; j < 2; ++j) {
        if (j == c_ ? !exact_c : !exact_f) continue;
        if (a[j] >= kAlphaFloor ? std::fabs(res[j]) > ftol : res[j] > ftol)
          ok = false;
      }
      if (ok) {
        a1 = a[0];
        a2 = a[1];
        return;
      }
    }
    throw convergence_error("inner alternation cap exceeded");
  }

  std::pair<double, double> residual_pair(double a1, double a2) {
    EvalPoint ev = eval(a1, a2, true, true);
    return {ev.res1, ev.res2};
  }

  std::pair<double, double> rate_pair(double a1, double a2) {
    EvalPoint ev = eval(a1, a2, false, false);
    return {ev.r1, ev.r2};
  }

  double lam(int j) const { return j == 0 ? w_.lambda1 : w_.lambda2; }
  double psi(int j) const { return j == 0 ? st_.psi1 : st_.psi2; }
  double theta(int j) const { return j == 0 ? qos_.theta1 : qos_.theta2; }
  double res_ftol() const {
    return ftol_scale_ * tols_.res_rel * std::max(st_.epsilon, kResFloor);
  }

  // Upper bound on user j's activation residual (own alpha 0; the cross-rate
  // term is nonpositive): lam/psi * pbar * z * var(x_j)/ln2 - eps.
  double activation_bound(int j) const {
    return lam(j) / psi(j) * params_.pbar * z_[j] * prior_variance(*in_[j]) /
               kLn2 -
           st_.epsilon;
  }

 private:
  static double& ev_res(EvalPoint& ev, int j) {
    return j == 0 ? ev.res1 : ev.res2;
  }
  static double js_mmse(const JointStats& js, int j) {
    return j == 0 ? js.mmse1 : js.mmse2;
  }
  static double prior_variance(const InputModel& in) {
    if (in.is_gaussian()) return 1.0;
    cplx m{0.0, 0.0};
    for (const auto& p : in.finite.points) m += p.prior * p.value;
    return std::max(0.0, 1.0 - std::norm(m));
  }

  // Theorem-1 cross term for d/d(alpha_j): -Re(g_j conj(g_m) E{xh_j xh_m^*})
  // / alpha_j, evaluated at the floored own alpha.
  double cross_term(const JointStats& js, int j, double aj,
                    double a_other) const {
    const cplx c = (j == 0) ? js.cross : std::conj(js.cross);
    return -(gain(j, aj) * std::conj(gain(1 - j, a_other)) * c).real() / aj;
  }

  cplx gain(int j, double aj) const {
    return std::sqrt(aj * params_.pbar) * h_[j];
  }

  SingleStats single(int j, double aj) {
    if (single_valid_[j] && single_a_[j] == aj) return single_memo_[j];
    SingleStats s = single_stats(*in_[j], gain(j, aj), quad_);
    single_a_[j] = aj;
    single_memo_[j] = s;
    single_valid_[j] = true;
    return s;
  }

  // Joint stats at the user-indexed point, with user `floor_user` (or none
  // when -1) floored to kAlphaFloor.
  const JointStats& joint_floored(const double a[2], int floor_user) {
    double b[2] = {a[0], a[1]};
    if (floor_user >= 0) b[floor_user] = std::max(b[floor_user], kAlphaFloor);
    if (joint_valid_ && joint_a_[0] == b[0] && joint_a_[1] == b[1])
      return joint_memo_;
    joint_memo_ =
        joint_stats(*in_[0], gain(0, b[0]), *in_[1], gain(1, b[1]), quad_);
    joint_a_[0] = b[0];
    joint_a_[1] = b[1];
    joint_valid_ = true;
    ++joint_evals_;
    return joint_memo_;
  }

  // Monotone-decreasing root find on user j's own residual; a[j] updated.
  void solve_one(int j, double a[2]) {
    if (lam(j) <= 0.0 || activation_bound(j) <= 0.0) {
      a[j] = 0.0;
      return;
    }
    const double ftol = res_ftol();
    auto f = [&](double x) {
      a[j] = x;
      EvalPoint ev = eval(a[0], a[1], j == c_, j == f_);
      return j == 0 ? ev.res1 : ev.res2;
    };
    const double warm = a[j];
    double lo, flo, hi, fhi;
    if (warm > kAlphaFloor) {
      const double fw = f(warm);
      if (std::fabs(fw) <= ftol) return;
      if (fw > 0.0) {
        lo = warm;
        flo = fw;
        hi = warm * 1.25;  // roots drift little between probes
        fhi = f(hi);
      } else {
        hi = warm;
        fhi = fw;
        lo = warm * 0.8;
        flo = f(lo);
        double shrink = 0.5;
        while (flo < 0.0) {
          if (std::fabs(flo) <= ftol) return;
          hi = lo;
          fhi = flo;
          if (lo <= kAlphaFloor) {
            flo = f(0.0);
            lo = 0.0;
            if (flo <= 0.0) {
              a[j] = 0.0;
              return;
            }
            break;
          }
          lo = std::max(lo * shrink, kAlphaFloor * 0.5);
          shrink *= 0.5;  // accelerate when the first guesses miss
          flo = f(lo);
        }
      }
    } else {
      lo = 0.0;
      flo = f(0.0);  // exact activation test (floored cross term)
      if (flo <= 0.0) {
        a[j] = 0.0;
        return;
      }
      hi = 0.25;
      fhi = f(hi);
    }
    int grow = 0;
    while (fhi > 0.0) {
      if (std::fabs(fhi) <= ftol) return;
      lo = hi;
      flo = fhi;
      hi *= 3.0;
      fhi = f(hi);
      if (++grow > 80) throw convergence_error("alpha bracket diverged");
    }
    if (std::fabs(fhi) <= ftol) return;

    // Anderson-Bjorck false position on [lo, hi], flo > 0 > fhi
    for (int it = 0; it < tols_.inner_cap; ++it) {
      double x = (lo * fhi - hi * flo) / (fhi - flo);
      if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
      const double fx = f(x);
      if (std::fabs(fx) <= ftol ||
          hi - lo <= tols_.alpha_tol * (1.0 + std::fabs(x)))
        return;
      if (fx > 0.0) {
        const double m = 1.0 - fx / flo;
        fhi *= m > 0.0 ? m : 0.5;
        lo = x;
        flo = fx;
      } else {
        const double m = 1.0 - fx / fhi;
        flo *= m > 0.0 ? m : 0.5;
        hi = x;
        fhi = fx;
      }
    }
    throw convergence_error("alpha root find cap exceeded");
  }

  const Weights w_;
  const QosSpec qos_;
  const SystemParams params_;
  IntegrationSpec quad_;             // active grid: coarsened during probes
  const IntegrationSpec quad_fine_;  // accepted points always use this one
  const SolverTols tols_;
  const InputModel* in_[2] = {nullptr, nullptr};
  LagrangeState st_;

  int c_ = 0, f_ = 1;
  cplx h_[2];
  double z_[2] = {0.0, 0.0};

  bool joint_valid_ = false;
  double joint_a_[2] = {-1.0, -1.0};
  JointStats joint_memo_;
  bool single_valid_[2] = {false, false};
  double single_a_[2] = {-1.0, -1.0};
  SingleStats single_memo_[2];
  long joint_evals_ = 0;
  double ftol_scale_ = 1.0;
};

struct EnsembleSolution {
  std::vector<double> a1, a2, r1, r2;
  double budget = 0.0;
};

constexpr double kBudgetInf = std::numeric_limits<double>::infinity();

EnsembleSolution solve_ensemble(KktSolver& ks, const FadingEnsemble& e,
                                const std::vector<RegionTag>& tags,
                                std::vector<double>& wa1,
                                std::vector<double>& wa2,
                                double abort_above = kBudgetInf) {
  const size_t n = e.samples.size();
  EnsembleSolution sol;
  sol.a1.resize(n);
  sol.a2.resize(n);
  sol.r1.resize(n);
  sol.r2.resize(n);
  for (size_t i = 0; i < n; ++i) {
    ks.set_sample(e.samples[i], tags[i]);
    double a1 = wa1[i], a2 = wa2[i];
    try {
      ks.solve_sample(a1, a2);
    } catch (const convergence_error& err) {
      throw convergence_error(std::string(err.what()) + " (sample " +
                              std::to_string(i) + ")");
    }
    wa1[i] = a1;
    wa2[i] = a2;
    const auto r = ks.rate_pair(a1, a2);
    sol.a1[i] = a1;
    sol.a2[i] = a2;
    sol.r1[i] = r.first;
    sol.r2[i] = r.second;
    sol.budget += e.samples[i].weight * (a1 + a2);
    // the partial sum already proves the budget overshoots: remaining
    // samples cannot lower it, so skip them (probe rejected either way)
    if (sol.budget > abort_above) break;
  }
  return sol;
}

struct MiddleResult {
  EnsembleSolution sol;
  double epsilon = 0.0;
  bool slack = false;
};

constexpr double kEpsFloor = 1e-12;

// Monotone budget search: finds epsilon with |B(epsilon) - 1| <= budget_tol,
// or takes the epsilon -> 0+ branch when the budget is slack. Bracketing
// probes solve the samples loosely; the accepted point is re-solved at full
// precision, resuming the search on the rare drift back out of band.
MiddleResult middle_loop(KktSolver& ks, const FadingEnsemble& e,
                         const std::vector<RegionTag>& tags, LagrangeState st,
                         const SolverTols& tols, std::vector<double>& wa1,
                         std::vector<double>& wa2, double warm_lo,
                         double warm_hi, double accept_band,
                         std::vector<TraceRow>* trace) {
  MiddleResult out;
  int evals = 0;
  double scale = 1e3;
  // overshoot margin: never aborts a probe the band tests could accept
  const double abort_above = 1.0 + 10.0 * tols.budget_tol;
  auto budget_at = [&](double eps) {
    st.epsilon = eps;
    ks.set_state(st);
    ks.set_ftol_scale(scale);
    out.sol = solve_ensemble(ks, e, tags, wa1, wa2, abort_above);
    out.epsilon = eps;
    if (trace != nullptr)
      trace->push_back({"middle", ++evals, out.sol.budget - 1.0});
    return out.sol.budget;
  };
  // loose probes carry alpha noise near the wide band, so bands tighter than
  // the contract one are only judged on full-precision evaluations; once the
  // search switches to scale 1 it stays there and the remaining probes are
  // noise-free. While the outer psi iterate is still far off, the caller
  // passes the wide band and the full-precision stage is skipped entirely.
  auto accept = [&](double& b) {
    if (accept_band >= tols.budget_tol)
      return std::fabs(b - 1.0) <= tols.budget_tol;
    if (scale == 1.0) return std::fabs(b - 1.0) <= accept_band;
    if (std::fabs(b - 1.0) > tols.budget_tol) return false;
    scale = 1.0;
    b = budget_at(out.epsilon);
    return std::fabs(b - 1.0) <= accept_band;
  };
  auto slack_at_floor = [&](double& b) {
    if (!(b < 1.0 + tols.budget_tol)) return false;
    if (scale != 1.0) {
      scale = 1.0;
      b = budget_at(kEpsFloor);
    }
    return b < 1.0 + tols.budget_tol;
  };

  double lo, hi, blo, bhi = 0.0;
  bool have_hi = false;
  if (warm_hi > warm_lo && warm_lo > 0.0) {
    lo = warm_lo;
    hi = warm_hi;
    blo = budget_at(lo);
    if (accept(blo)) return out;
    int tries = 0;
    while (blo < 1.0) {  // need B(lo) >= 1; walk the bracket down
      if (lo <= kEpsFloor) {
        if (slack_at_floor(blo)) {
          out.slack = true;
          return out;
        }
        break;  // full-precision solve pushed the budget back over
      }
      hi = lo;
      bhi = blo;
      have_hi = true;
      lo = std::max(lo / 16.0, kEpsFloor);
      blo = budget_at(lo);
      if (accept(blo)) return out;
      if (++tries > 60) throw convergence_error("budget bracket (low) failed");
    }
    if (!have_hi) {
      bhi = budget_at(hi);
      if (accept(bhi)) return out;
    }
    tries = 0;
    while (bhi > 1.0) {
      lo = hi;
      blo = bhi;
      hi *= 4.0;
      bhi = budget_at(hi);
      if (accept(bhi)) return out;
      if (++tries > 60) throw convergence_error("budget bracket (high) failed");
    }
  } else {
    // start the upper bracket at the largest activation level: everyone is
    // silent there, so B(hi) = 0 < 1 and the root sits below
    LagrangeState st0 = st;
    st0.epsilon = 0.0;
    ks.set_state(st0);
    hi = 4.0 * kEpsFloor;
    for (const auto& s : e.samples) {
      ks.set_sample(s, RegionTag::Z);
      hi = std::max({hi, ks.activation_bound(0), ks.activation_bound(1)});
    }
    hi *= 1.05;
    bhi = budget_at(hi);
    if (accept(bhi)) return out;
    int tries = 0;
    while (bhi > 1.0) {
      lo = hi;
      blo = bhi;
      hi *= 4.0;
      bhi = budget_at(hi);
      if (accept(bhi)) return out;
      if (++tries > 60) throw convergence_error("budget bracket (high) failed");
    }
    if (tries == 0) {
      // walk the lower end down; the floor is only reached (and the slack
      // branch only taken) when the budget never binds at any price
      lo = std::max(hi / 16.0, kEpsFloor);
      blo = budget_at(lo);
      if (accept(blo)) return out;
      while (blo < 1.0) {
        if (lo <= kEpsFloor) {
          if (slack_at_floor(blo)) {
            out.slack = true;  // budget not binding: price -> 0+
            return out;
          }
          break;  // full-precision solve pushed the budget back over
        }
        hi = lo;
        bhi = blo;
        lo = std::max(lo / 16.0, kEpsFloor);
        blo = budget_at(lo);
        if (accept(blo)) return out;
        if (++tries > 60)
          throw convergence_error("budget bracket (low) failed");
      }
    }
  }

  // Anderson-Bjorck on g = B - 1 over [lo, hi] with g(lo) > 0 > g(hi)
  double glo = blo - 1.0, ghi = bhi - 1.0;
  for (int it = 0; it < tols.mid_cap; ++it) {
    double x = (lo * ghi - hi * glo) / (ghi - glo);
    if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
    double bx = budget_at(x);
    if (accept(bx)) return out;
    const double gx = bx - 1.0;
    if (gx > 0.0) {
      const double m = 1.0 - gx / glo;
      ghi *= m > 0.0 ? m : 0.5;
      lo = x;
      glo = gx;
    } else {
      const double m = 1.0 - gx / ghi;
      glo *= m > 0.0 ? m : 0.5;
      hi = x;
      ghi = gx;
    }
  }
  throw convergence_error("budget bisection cap exceeded");
}

Algorithm1Result run_nested(const FadingEnsemble& e,
                            const std::vector<RegionTag>& tags,
                            const Weights& w, const QosSpec& qos,
                            const SystemParams& params,
                            const InputModel& in1, const InputModel& in2,
                            IntegrationSpec quad, const SolverTols& tols,
                            WarmStart* warm);

// Converges the outer loop on a prefix subsample to seed psi and epsilon.
void pilot_warm(const FadingEnsemble& e, const std::vector<RegionTag>& tags,
                const Weights& w, const QosSpec& qos,
                const SystemParams& params, const InputModel& in1,
                const InputModel& in2, IntegrationSpec quad,
                const SolverTols& tols, WarmStart& ws) {
  const size_t p = static_cast<size_t>(tols.pilot);
  FadingEnsemble sub;
  sub.seed = e.seed;
  sub.spec1 = e.spec1;
  sub.spec2 = e.spec2;
  sub.samples.assign(e.samples.begin(), e.samples.begin() + p);
  for (auto& s : sub.samples) s.weight = 1.0 / static_cast<double>(p);
  const std::vector<RegionTag> sub_tags(tags.begin(), tags.begin() + p);
  SolverTols pt = tols;
  pt.pilot = 0;
  pt.psi_tol = tols.psi_tol * 10.0;
  pt.psi_exact = pt.psi_tol;  // a seed needs no final polish
  pt.budget_tol = tols.budget_tol * 2.0;
  try {
    Algorithm1Result pr =
        run_nested(sub, sub_tags, w, qos, params, in1, in2, quad, pt, nullptr);
    ws.state = pr.state;
    if (!pr.budget_slack) {
      ws.eps_lo = pr.state.epsilon * 0.25;
      ws.eps_hi = pr.state.epsilon * 4.0;
    }
    ws.a1.assign(e.samples.size(), 0.0);
    ws.a2.assign(e.samples.size(), 0.0);
    std::copy(pr.policy.alpha1.begin(), pr.policy.alpha1.end(), ws.a1.begin());
    std::copy(pr.policy.alpha2.begin(), pr.policy.alpha2.end(), ws.a2.begin());
    // Non-pilot samples inherit the alphas of the nearest pilot sample in
    // log-gain space; a rough guess still beats the cold bracket walk.
    auto lg = [](double z) { return std::log(z + 1e-30); };
    for (size_t i = p; i < e.samples.size(); ++i) {
      const double u1 = lg(e.samples[i].z1), u2 = lg(e.samples[i].z2);
      size_t best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (size_t j = 0; j < p; ++j) {
        const double d1 = u1 - lg(e.samples[j].z1);
        const double d2 = u2 - lg(e.samples[j].z2);
        const double d = d1 * d1 + d2 * d2;
        if (d < bd) {
          bd = d;
          best = j;
        }
      }
      ws.a1[i] = pr.policy.alpha1[best];
      ws.a2[i] = pr.policy.alpha2[best];
    }
    ws.valid = true;
  } catch (const convergence_error&) {
    // non-fatal: fall back to a cold start
  }
}

Algorithm1Result run_nested(const FadingEnsemble& e,
                            const std::vector<RegionTag>& tags,
                            const Weights& w, const QosSpec& qos,
                            const SystemParams& params,
                            const InputModel& in1, const InputModel& in2,
                            IntegrationSpec quad, const SolverTols& tols,
                            WarmStart* warm) {
  if (e.samples.empty()) throw std::invalid_argument("empty ensemble");
  if (tags.size() != e.samples.size())
    throw std::invalid_argument("partition size != ensemble size");

  WarmStart local;
  if ((warm == nullptr || !warm->valid) && tols.pilot > 0) {
    const size_t p = std::min(static_cast<size_t>(tols.pilot),
                              e.samples.size() / 3);
    if (p >= 16) {
      SolverTols pts = tols;
      pts.pilot = static_cast<int>(p);
      pilot_warm(e, tags, w, qos, params, in1, in2, quad, pts, local);
      if (local.valid) warm = &local;
    }
  }

  const size_t n = e.samples.size();
  std::vector<double> wa1(n, 0.0), wa2(n, 0.0);
  LagrangeState st;
  double eps_lo = 0.0, eps_hi = 0.0;
  if (warm != nullptr && warm->valid) {
    st.psi1 = warm->state.psi1;
    st.psi2 = warm->state.psi2;
    if (warm->a1.size() == n && warm->a2.size() == n) {
      wa1 = warm->a1;
      wa2 = warm->a2;
    }
    eps_lo = warm->eps_lo;
    eps_hi = warm->eps_hi;
  }

  KktSolver ks(in1, in2, w, qos, params, quad, tols);
  const double nTB = params.n();
  Algorithm1Result out;
  MiddleResult mid;
  double sp1 = 0.0, sp2 = 0.0;  // previous fixed-point residual
  double gain = 1.0;
  bool have_step = false;
  // Budget-accept bands by phase: wide while psi is far off, tight while it
  // settles, and a final band narrow enough that the returned point's psi
  // self-consistency is limited by psi_exact, not by budget-band wobble.
  const double tight_band = 0.25 * tols.budget_tol;
  const double final_band = std::max(0.005 * tols.budget_tol, 1e-7);
  double band = tols.budget_tol;
  double eps_prev = 0.0;
  for (int outer = 1;; ++outer) {
    const double band_used = band;
    mid = middle_loop(ks, e, tags, st, tols, wa1, wa2, eps_lo, eps_hi,
                      band_used, &out.trace);
    double p1 = 0.0, p2 = 0.0;
    for (size_t i = 0; i < n; ++i) {
      p1 += e.samples[i].weight * std::exp(-qos.theta1 * nTB * mid.sol.r1[i]);
      p2 += e.samples[i].weight * std::exp(-qos.theta2 * nTB * mid.sol.r2[i]);
    }
    const double delta =
        std::max(std::fabs(p1 - st.psi1), std::fabs(p2 - st.psi2));
    out.trace.push_back({"outer", outer, delta});
    out.outer_iters = outer;
    if (delta <= tols.psi_exact && band_used <= final_band)
      break;  // return the psi the solve used
    if (outer >= tols.outer_cap)
      throw convergence_error("psi fixed point cap exceeded (delta " +
                              fmt_double(delta) + ")");
    band = delta <= tols.psi_tol           ? final_band
           : delta <= 30.0 * tols.psi_tol ? tight_band
                                           : tols.budget_tol;
    if (delta > tols.psi_exact) {
      // Picard with Aitken-style gain: the observed residual ratio
      // m = <s_k, s_{k-1}>/|s_{k-1}|^2 after a step of gain g implies a
      // contraction factor rho = 1 + (m-1)/g, and the extrapolated step
      // 1/(1-rho) = g/(1-m) jumps to the fixed point of the linear model.
      const double s1 = p1 - st.psi1, s2 = p2 - st.psi2;
      if (have_step) {
        const double nrm = sp1 * sp1 + sp2 * sp2;
        const double m = nrm > 0.0 ? (s1 * sp1 + s2 * sp2) / nrm : 0.0;
        if (m < 0.98) gain = std::clamp(gain / (1.0 - m), 0.5, 25.0);
      }
      st.psi1 += gain * s1;
      st.psi2 += gain * s2;
      sp1 = s1;
      sp2 = s2;
      have_step = true;
    }
    if (!mid.slack && mid.epsilon > 0.0) {
      // the price settles along with psi: bracket by the observed drift
      double wfac = 4.0;
      if (outer >= 2 && eps_prev > 0.0) {
        const double drift =
            std::fabs(mid.epsilon - eps_prev) / mid.epsilon;
        wfac = 1.0 + std::clamp(6.0 * drift, 0.005, 0.4);
      }
      eps_lo = mid.epsilon / wfac;
      eps_hi = mid.epsilon * wfac;
      eps_prev = mid.epsilon;
    } else {
      eps_lo = eps_hi = 0.0;
      eps_prev = 0.0;
    }
  }

  st.epsilon = mid.epsilon;
  out.state = st;
  out.budget_slack = mid.slack;
  out.policy.alpha1 = std::move(mid.sol.a1);
  out.policy.alpha2 = std::move(mid.sol.a2);
  out.rates.r1 = std::move(mid.sol.r1);
  out.rates.r2 = std::move(mid.sol.r2);
  out.joint_evals = ks.joint_evals();
  if (mid.slack)
    out.warnings.push_back("power budget slack; price at floor " +
                           fmt_double(kEpsFloor));

  if (warm != nullptr) {
    warm->state = st;
    warm->a1 = out.policy.alpha1;
    warm->a2 = out.policy.alpha2;
    if (!mid.slack) {
      warm->eps_lo = st.epsilon * 0.25;
      warm->eps_hi = st.epsilon * 4.0;
    } else {
      warm->eps_lo = warm->eps_hi = 0.0;
    }
    warm->valid = true;
  }
  return out;
}

}  // namespace

std::pair<double, double> kkt_residual_Z(
    const ChannelSample& s, double alpha1, double alpha2,
    const LagrangeState& state, const Weights& w, const QosSpec& qos,
    const SystemParams& params, const InputModel& in1, const InputModel& in2,
    IntegrationSpec quad) {
  KktSolver ks(in1, in2, w, qos, params, quad, SolverTols{});
  ks.set_state(state);
  ks.set_sample(s, RegionTag::Z);
  return ks.residual_pair(alpha1, alpha2);
}

std::pair<double, double> kkt_residual_Zc(
    const ChannelSample& s, double alpha1, double alpha2,
    const LagrangeState& state, const Weights& w, const QosSpec& qos,
    const SystemParams& params, const InputModel& in1, const InputModel& in2,
    IntegrationSpec quad) {
  KktSolver ks(in1, in2, w, qos, params, quad, SolverTols{});
  ks.set_state(state);
  ks.set_sample(s, RegionTag::Zc);
  return ks.residual_pair(alpha1, alpha2);
}

std::pair<double, double> solve_alpha_pair(
    const ChannelSample& s, RegionTag tag, const LagrangeState& state,
    const Weights& w, const QosSpec& qos, const SystemParams& params,
    const InputModel& in1, const InputModel& in2, double tol,
    IntegrationSpec quad) {
  SolverTols tols;
  if (tol > 0.0) tols.res_rel = tol;
  KktSolver ks(in1, in2, w, qos, params, quad, tols);
  ks.set_state(state);
  ks.set_sample(s, tag);
  double a1 = 0.0, a2 = 0.0;
  ks.solve_sample(a1, a2);
  return {a1, a2};
}

Algorithm1Result run_algorithm1(const FadingEnsemble& ensemble,
                                const std::vector<RegionTag>& partition,
                                const Weights& w, const QosSpec& qos,
                                const SystemParams& params,
                                const InputModel& in1, const InputModel& in2,
                                IntegrationSpec quad, SolverTols tols,
                                WarmStart* warm) {
  return run_nested(ensemble, partition, w, qos, params, in1, in2, quad, tols,
                    warm);
}

double weighted_objective(const FadingEnsemble& ensemble,
                          const RateTable& rates, const Weights& w,
                          const QosSpec& qos, const SystemParams& params) {
  std::vector<double> wt;
  wt.reserve(ensemble.samples.size());
  for (const auto& s : ensemble.samples) wt.push_back(s.weight);
  const double c1 = effective_capacity(rates.r1, wt, qos.theta1, params);
  const double c2 = effective_capacity(rates.r2, wt, qos.theta2, params);
  return w.lambda1 * c1 + w.lambda2 * c2;
}

}  // namespace macap
