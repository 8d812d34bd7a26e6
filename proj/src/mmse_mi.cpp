#include "macap/mmse_mi.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>
#include <unordered_map>
#include <vector>

namespace macap {
namespace {

constexpr int kMaxNodes = 150;          // keeps the l=k reference term > DBL_MIN
constexpr double kZeroGain2 = 1e-28;    // |gain|^2 below this: transmitter absent
constexpr std::size_t kDiffCacheCap = 4u << 20;  // doubles; else inline exps

struct Prep {
  int K = 0;
  std::vector<cplx> x;
  std::vector<double> p;
  cplx mean;                 // prior mean (0 for symmetric alphabets)
  std::vector<int> didx;     // K*K -> unique-difference id (row a, col c)
  std::vector<cplx> diffs;   // unique values of x[a]-x[c]
};

Prep build_prep(const std::vector<ConstellationPoint>& pts) {
  Prep pr;
  pr.K = (int)pts.size();
  pr.x.reserve(pr.K);
  pr.p.reserve(pr.K);
  for (const auto& q : pts) {
    pr.x.push_back(q.value);
    pr.p.push_back(q.prior);
    pr.mean += q.prior * q.value;
  }
  pr.didx.resize((std::size_t)pr.K * pr.K);
  // exact-bit dedup: grid alphabets collapse K^2 differences to O(K)
  std::unordered_map<std::uint64_t, int> seen;
  for (int a = 0; a < pr.K; ++a)
    for (int c = 0; c < pr.K; ++c) {
      cplx d = pr.x[a] - pr.x[c];
      std::uint64_t key = fnv1a(&d, sizeof(d));
      auto it = seen.find(key);
      if (it == seen.end()) {
        it = seen.emplace(key, (int)pr.diffs.size()).first;
        pr.diffs.push_back(d);
      }
      pr.didx[(std::size_t)a * pr.K + c] = it->second;
    }
  return pr;
}

// The dedup tables cost O(K^2) to build; solver loops hit the same few
// alphabets millions of times, so cache by content.
const Prep& prep_finite(const InputModel& in) {
  if (in.is_gaussian())
    throw std::invalid_argument("prep_finite: finite alphabet required");
  using Entry = std::pair<std::vector<ConstellationPoint>, std::unique_ptr<Prep>>;
  static thread_local std::unordered_map<std::uint64_t, std::vector<Entry>> memo;
  const auto& pts = in.finite.points;
  std::uint64_t key = fnv1a(pts.data(), pts.size() * sizeof(ConstellationPoint));
  auto& bucket = memo[key];
  for (const auto& e : bucket)
    if (e.first.size() == pts.size() &&
        std::memcmp(e.first.data(), pts.data(),
                    pts.size() * sizeof(ConstellationPoint)) == 0)
      return *e.second;
  bucket.emplace_back(pts, std::make_unique<Prep>(build_prep(pts)));
  return *bucket.back().second;
}

int checked_nodes(IntegrationSpec quad) {
  if (quad.nodes < 4 || quad.nodes > kMaxNodes)
    throw std::invalid_argument("IntegrationSpec.nodes out of range [4,150]");
  return quad.nodes;
}

// ---------------------------------------------------------------------------
// Recentered tensor Gauss-Hermite passes.
//
// With y = mu_k + w the information density becomes
//   ln f(y|k)/f(y) = -|w|^2 - ln sum_l p_l exp(-|w+d_kl|^2) + |w|^2 ... ,
// i.e. I = -1 - sum_k p_k E_w ln sum_l p_l exp(-|w + d_kl|^2).
// The l = k term equals exp(-|w|^2) >= exp(-2*t_max^2), so the inner sum never
// underflows for node counts <= 150 and no extra max-subtraction is needed.
// The same sweep accumulates xhat_j = E[x_j|y] statistics for the MMSEs and
// the estimator cross-correlation E{xhat_1 conj(xhat_2)}.
// ---------------------------------------------------------------------------

struct PassBuffers {
  std::vector<double> ea, eb;                     // exp tables
  std::vector<double> s0, s1r, s1i, s2r, s2i;     // node accumulators
};
PassBuffers& buffers() {
  static thread_local PassBuffers b;
  return b;
}

// exp(-(t + shift)^2) over all nodes
inline void exp_row(const double* t, int N, double shift, double* out) {
  for (int i = 0; i < N; ++i) {
    double u = t[i] + shift;
    out[i] = std::exp(-u * u);
  }
}

SingleStats single_finite(const Prep& c, cplx g, int N) {
  const auto& rule = gauss_hermite(N);
  const double* t = rule.x.data();
  const double* wn = rule.w.data();
  int K = c.K, U = (int)c.diffs.size();
  auto& bf = buffers();
  bf.ea.resize((std::size_t)U * N);
  bf.eb.resize((std::size_t)U * N);
  for (int u = 0; u < U; ++u) {
    cplx d = g * c.diffs[u];
    exp_row(t, N, d.real(), &bf.ea[(std::size_t)u * N]);
    exp_row(t, N, d.imag(), &bf.eb[(std::size_t)u * N]);
  }
  std::size_t NN = (std::size_t)N * N;
  bf.s0.resize(NN);
  bf.s1r.resize(NN);
  bf.s1i.resize(NN);
  double mi_acc = 0.0, m_acc = 0.0;
  for (int a = 0; a < K; ++a) {
    if (c.p[a] <= 0.0) continue;
    std::memset(bf.s0.data(), 0, NN * sizeof(double));
    std::memset(bf.s1r.data(), 0, NN * sizeof(double));
    std::memset(bf.s1i.data(), 0, NN * sizeof(double));
    for (int l = 0; l < K; ++l) {
      if (c.p[l] <= 0.0) continue;
      int u = c.didx[(std::size_t)a * K + l];
      const double* A = &bf.ea[(std::size_t)u * N];
      const double* B = &bf.eb[(std::size_t)u * N];
      double p = c.p[l];
      double cr = p * c.x[l].real(), ci = p * c.x[l].imag();
      for (int i = 0; i < N; ++i) {
        double fa = A[i];
        const double* __restrict Bj = B;
        double* __restrict r0 = &bf.s0[(std::size_t)i * N];
        double* __restrict r1 = &bf.s1r[(std::size_t)i * N];
        double* __restrict r2 = &bf.s1i[(std::size_t)i * N];
        for (int j = 0; j < N; ++j) {
          double tt = fa * Bj[j];
          r0[j] += p * tt;
          r1[j] += cr * tt;
          r2[j] += ci * tt;
        }
      }
    }
    double mi_k = 0.0, m_k = 0.0;
    for (int i = 0; i < N; ++i) {
      double wa = wn[i];
      const double* r0 = &bf.s0[(std::size_t)i * N];
      const double* r1 = &bf.s1r[(std::size_t)i * N];
      const double* r2 = &bf.s1i[(std::size_t)i * N];
      for (int j = 0; j < N; ++j) {
        double w = wa * wn[j];
        double inv = 1.0 / r0[j];
        mi_k += w * std::log(r0[j]);
        m_k += w * (r1[j] * r1[j] + r2[j] * r2[j]) * inv * inv;
      }
    }
    mi_acc += c.p[a] * mi_k;
    m_acc += c.p[a] * m_k;
  }
  SingleStats out;
  out.mi_nats = -1.0 - mi_acc;
  out.mmse = 1.0 - m_acc;
  if (out.mi_nats < 0.0) {
    if (out.mi_nats < -1e-8) throw numeric_error("single pass: negative MI");
    out.mi_nats = 0.0;
  }
  if (out.mmse < -1e-8 || out.mmse > 1.0 + 1e-8)
    throw numeric_error("single pass: MMSE outside [0,1]");
  out.mmse = std::clamp(out.mmse, 0.0, 1.0);
  return out;
}

JointStats joint_finite(const Prep& c1, cplx g1, const Prep& c2, cplx g2, int N) {
  const auto& rule = gauss_hermite(N);
  const double* t = rule.x.data();
  const double* wn = rule.w.data();
  int K1 = c1.K, K2 = c2.K;
  int U1 = (int)c1.diffs.size(), U2 = (int)c2.diffs.size();
  auto& bf = buffers();
  bool cache = (std::size_t)U1 * U2 * 2 * N <= kDiffCacheCap;
  std::vector<double> rsum((std::size_t)U1 * U2), isum((std::size_t)U1 * U2);
  {
    std::vector<cplx> du1(U1), du2(U2);
    for (int u = 0; u < U1; ++u) du1[u] = g1 * c1.diffs[u];
    for (int u = 0; u < U2; ++u) du2[u] = g2 * c2.diffs[u];
    for (int u = 0; u < U1; ++u)
      for (int v = 0; v < U2; ++v) {
        cplx d = du1[u] + du2[v];
        rsum[(std::size_t)u * U2 + v] = d.real();
        isum[(std::size_t)u * U2 + v] = d.imag();
      }
  }
  if (cache) {
    bf.ea.resize((std::size_t)U1 * U2 * N);
    bf.eb.resize((std::size_t)U1 * U2 * N);
    for (std::size_t uv = 0; uv < rsum.size(); ++uv) {
      exp_row(t, N, rsum[uv], &bf.ea[uv * N]);
      exp_row(t, N, isum[uv], &bf.eb[uv * N]);
    }
  } else {
    bf.ea.resize((std::size_t)2 * N);
    bf.eb.resize((std::size_t)2 * N);
  }
  std::size_t NN = (std::size_t)N * N;
  bf.s0.resize(NN);
  bf.s1r.resize(NN);
  bf.s1i.resize(NN);
  bf.s2r.resize(NN);
  bf.s2i.resize(NN);
  double mi_acc = 0.0, m1_acc = 0.0, m2_acc = 0.0;
  double cr_r = 0.0, cr_i = 0.0;
  for (int a = 0; a < K1; ++a) {
    if (c1.p[a] <= 0.0) continue;
    const int* row1 = &c1.didx[(std::size_t)a * K1];
    for (int b = 0; b < K2; ++b) {
      if (c2.p[b] <= 0.0) continue;
      const int* row2 = &c2.didx[(std::size_t)b * K2];
      std::memset(bf.s0.data(), 0, NN * sizeof(double));
      std::memset(bf.s1r.data(), 0, NN * sizeof(double));
      std::memset(bf.s1i.data(), 0, NN * sizeof(double));
      std::memset(bf.s2r.data(), 0, NN * sizeof(double));
      std::memset(bf.s2i.data(), 0, NN * sizeof(double));
      for (int cc = 0; cc < K1; ++cc) {
        double pc = c1.p[cc];
        if (pc <= 0.0) continue;
        double x1r = c1.x[cc].real(), x1i = c1.x[cc].imag();
        std::size_t u1 = (std::size_t)row1[cc] * U2;
        for (int dd = 0; dd < K2; ++dd) {
          double pl = pc * c2.p[dd];
          if (pl <= 0.0) continue;
          std::size_t uv = u1 + row2[dd];
          const double *A, *B;
          if (cache) {
            A = &bf.ea[uv * N];
            B = &bf.eb[uv * N];
          } else {
            exp_row(t, N, rsum[uv], bf.ea.data());
            exp_row(t, N, isum[uv], bf.eb.data());
            A = bf.ea.data();
            B = bf.eb.data();
          }
          double c0 = pl;
          double c1r = pl * x1r, c1i = pl * x1i;
          double c2r = pl * c2.x[dd].real(), c2i = pl * c2.x[dd].imag();
          for (int i = 0; i < N; ++i) {
            double fa = A[i];
            const double* __restrict Bj = B;
            double* __restrict r0 = &bf.s0[(std::size_t)i * N];
            double* __restrict r1 = &bf.s1r[(std::size_t)i * N];
            double* __restrict r2 = &bf.s1i[(std::size_t)i * N];
            double* __restrict r3 = &bf.s2r[(std::size_t)i * N];
            double* __restrict r4 = &bf.s2i[(std::size_t)i * N];
            for (int j = 0; j < N; ++j) {
              double tt = fa * Bj[j];
              r0[j] += c0 * tt;
              r1[j] += c1r * tt;
              r2[j] += c1i * tt;
              r3[j] += c2r * tt;
              r4[j] += c2i * tt;
            }
          }
        }
      }
      double pk = c1.p[a] * c2.p[b];
      double mi_k = 0.0, m1_k = 0.0, m2_k = 0.0, cr_kr = 0.0, cr_ki = 0.0;
      for (int i = 0; i < N; ++i) {
        double wa = wn[i];
        const double* r0 = &bf.s0[(std::size_t)i * N];
        const double* r1 = &bf.s1r[(std::size_t)i * N];
        const double* r2 = &bf.s1i[(std::size_t)i * N];
        const double* r3 = &bf.s2r[(std::size_t)i * N];
        const double* r4 = &bf.s2i[(std::size_t)i * N];
        for (int j = 0; j < N; ++j) {
          double w = wa * wn[j];
          double inv = 1.0 / r0[j];
          mi_k += w * std::log(r0[j]);
          double h1r = r1[j] * inv, h1i = r2[j] * inv;
          double h2r = r3[j] * inv, h2i = r4[j] * inv;
          m1_k += w * (h1r * h1r + h1i * h1i);
          m2_k += w * (h2r * h2r + h2i * h2i);
          // xhat1 * conj(xhat2)
          cr_kr += w * (h1r * h2r + h1i * h2i);
          cr_ki += w * (h1i * h2r - h1r * h2i);
        }
      }
      mi_acc += pk * mi_k;
      m1_acc += pk * m1_k;
      m2_acc += pk * m2_k;
      cr_r += pk * cr_kr;
      cr_i += pk * cr_ki;
    }
  }
  JointStats out;
  out.mi_nats = -1.0 - mi_acc;
  out.mmse1 = 1.0 - m1_acc;
  out.mmse2 = 1.0 - m2_acc;
  out.cross = cplx(cr_r, cr_i);
  if (out.mi_nats < 0.0) {
    if (out.mi_nats < -1e-8) throw numeric_error("joint pass: negative MI");
    out.mi_nats = 0.0;
  }
  for (double m : {out.mmse1, out.mmse2})
    if (m < -1e-8 || m > 1.0 + 1e-8)
      throw numeric_error("joint pass: MMSE outside [0,1]");
  out.mmse1 = std::clamp(out.mmse1, 0.0, 1.0);
  out.mmse2 = std::clamp(out.mmse2, 0.0, 1.0);
  return out;
}

MiResult as_result(double nats) {
  MiResult r;
  r.nats = nats;
  r.bits = nats / kLn2;
  return r;
}

}  // namespace

SingleStats single_stats(const InputModel& in, cplx gain, IntegrationSpec quad) {
  double s = std::norm(gain);
  if (in.is_gaussian()) {
    SingleStats out;
    out.mi_nats = std::log1p(s);
    out.mmse = 1.0 / (1.0 + s);
    return out;
  }
  if (s < kZeroGain2) {
    SingleStats out;
    const auto& pr = prep_finite(in);
    out.mi_nats = 0.0;
    out.mmse = 1.0 - std::norm(pr.mean);
    return out;
  }
  return single_finite(prep_finite(in), gain, checked_nodes(quad));
}

JointStats joint_stats(const InputModel& in1, cplx g1, const InputModel& in2,
                       cplx g2, IntegrationSpec quad) {
  double s1 = std::norm(g1), s2 = std::norm(g2);
  JointStats out;
  if (in1.is_gaussian() && in2.is_gaussian()) {
    double s = s1 + s2;
    out.mi_nats = std::log1p(s);
    out.mmse1 = 1.0 - s1 / (1.0 + s);
    out.mmse2 = 1.0 - s2 / (1.0 + s);
    out.cross = std::conj(g1) * g2 / (1.0 + s);
    return out;
  }
  if (!in1.is_gaussian() && in2.is_gaussian()) {
    // x2 folds into the noise for user 1; user 2 sees the chain identity
    double sc = 1.0 + s2;
    SingleStats sub = single_stats(in1, g1 / std::sqrt(sc), quad);
    out.mi_nats = sub.mi_nats + std::log(sc);
    out.mmse1 = sub.mmse;
    out.mmse2 = 1.0 - s2 * (1.0 + s2 - s1 * sub.mmse) / (sc * sc);
    out.cross = std::conj(g1) * g2 * sub.mmse / sc;
    return out;
  }
  if (in1.is_gaussian() && !in2.is_gaussian()) {
    double sc = 1.0 + s1;
    SingleStats sub = single_stats(in2, g2 / std::sqrt(sc), quad);
    out.mi_nats = sub.mi_nats + std::log(sc);
    out.mmse2 = sub.mmse;
    out.mmse1 = 1.0 - s1 * (1.0 + s1 - s2 * sub.mmse) / (sc * sc);
    out.cross = std::conj(g1) * g2 * sub.mmse / sc;
    return out;
  }
  // both finite
  if (s2 < kZeroGain2 || s1 < kZeroGain2) {
    // absent transmitter: posterior mean is the prior mean
    bool absent2 = s2 < kZeroGain2;
    const InputModel& act = absent2 ? in1 : in2;
    const InputModel& sil = absent2 ? in2 : in1;
    cplx g_act = absent2 ? g1 : g2;
    SingleStats sub = single_stats(act, g_act, quad);
    const Prep& silp = prep_finite(sil);
    const Prep& actp = prep_finite(act);
    out.mi_nats = sub.mi_nats;
    double msil = 1.0 - std::norm(silp.mean);
    if (absent2) {
      out.mmse1 = sub.mmse;
      out.mmse2 = msil;
      out.cross = actp.mean * std::conj(silp.mean);
    } else {
      out.mmse2 = sub.mmse;
      out.mmse1 = msil;
      out.cross = silp.mean * std::conj(actp.mean);
    }
    return out;
  }
  return joint_finite(prep_finite(in1), g1, prep_finite(in2), g2,
                      checked_nodes(quad));
}

MiResult mi_single(const ScaledInput& s, IntegrationSpec quad) {
  MiResult r = as_result(single_stats(s.input, s.gain, quad).mi_nats);
  if (quad.tol > 0.0 && !s.input.is_gaussian()) {
    IntegrationSpec coarse{std::max(8, quad.nodes * 2 / 3), 0.0};
    double ref = single_stats(s.input, s.gain, coarse).mi_nats;
    if (std::abs(ref - r.nats) > quad.tol)
      throw numeric_error("mi_single: integration error " +
                          fmt_double(std::abs(ref - r.nats)) + " above tol");
  }
  return r;
}

MiResult mi_joint(const ScaledInput& s1, const ScaledInput& s2,
                  IntegrationSpec quad) {
  MiResult r =
      as_result(joint_stats(s1.input, s1.gain, s2.input, s2.gain, quad).mi_nats);
  if (quad.tol > 0.0 && !(s1.input.is_gaussian() && s2.input.is_gaussian())) {
    IntegrationSpec coarse{std::max(8, quad.nodes * 2 / 3), 0.0};
    double ref = joint_stats(s1.input, s1.gain, s2.input, s2.gain, coarse).mi_nats;
    if (std::abs(ref - r.nats) > quad.tol)
      throw numeric_error("mi_joint: integration error " +
                          fmt_double(std::abs(ref - r.nats)) + " above tol");
  }
  return r;
}

MiResult mi_interference(int j, const ScaledInput& s1, const ScaledInput& s2,
                         IntegrationSpec quad) {
  if (j != 1 && j != 2) throw std::invalid_argument("mi_interference: j must be 1 or 2");
  const ScaledInput& other = (j == 1) ? s2 : s1;
  double joint = mi_joint(s1, s2, quad).nats;
  double single = single_stats(other.input, other.gain, quad).mi_nats;
  double v = joint - single;
  if (v < 0.0) {
    double tol = std::max(1e-9, quad.tol);
    if (v < -10.0 * tol)
      throw numeric_error("mi_interference: negative by " + fmt_double(-v));
    v = 0.0;
  }
  return as_result(v);
}

cplx conditional_mean(int j, const ScaledInput& s1, const ScaledInput& s2, cplx y) {
  if (j != 1 && j != 2) throw std::invalid_argument("conditional_mean: j must be 1 or 2");
  const ScaledInput& sj = (j == 1) ? s1 : s2;
  const ScaledInput& sm = (j == 1) ? s2 : s1;
  if (sj.input.is_gaussian())
    throw std::invalid_argument("conditional_mean: input j must be finite");
  if (sm.input.is_gaussian() || std::norm(sm.gain) < kZeroGain2) {
    // other user is Gaussian (or absent): fold into the noise
    double sc = 1.0 + (sm.input.is_gaussian() ? std::norm(sm.gain) : 0.0);
    const Prep& c = prep_finite(sj.input);
    std::vector<double> le(c.K);
    double mx = -HUGE_VAL;
    for (int k = 0; k < c.K; ++k) {
      le[k] = -std::norm(y - sj.gain * c.x[k]) / sc +
              (c.p[k] > 0.0 ? std::log(c.p[k]) : -HUGE_VAL);
      mx = std::max(mx, le[k]);
    }
    if (!std::isfinite(mx)) throw numeric_error("conditional_mean: posterior underflow");
    double den = 0.0;
    cplx num;
    for (int k = 0; k < c.K; ++k) {
      double e = std::exp(le[k] - mx);
      den += e;
      num += e * c.x[k];
    }
    return num / den;
  }
  const Prep& cj = prep_finite(sj.input);
  const Prep& cm = prep_finite(sm.input);
  double mx = -HUGE_VAL;
  std::vector<double> le((std::size_t)cj.K * cm.K);
  for (int a = 0; a < cj.K; ++a)
    for (int b = 0; b < cm.K; ++b) {
      double pp = cj.p[a] * cm.p[b];
      double v = pp > 0.0
                     ? -std::norm(y - sj.gain * cj.x[a] - sm.gain * cm.x[b]) +
                           std::log(pp)
                     : -HUGE_VAL;
      le[(std::size_t)a * cm.K + b] = v;
      mx = std::max(mx, v);
    }
  if (!std::isfinite(mx)) throw numeric_error("conditional_mean: posterior underflow");
  double den = 0.0;
  cplx num;
  for (int a = 0; a < cj.K; ++a)
    for (int b = 0; b < cm.K; ++b) {
      double e = std::exp(le[(std::size_t)a * cm.K + b] - mx);
      den += e;
      num += e * cj.x[a];
    }
  return num / den;
}

double mmse(int j, const ScaledInput& s1, const ScaledInput& s2,
            IntegrationSpec quad) {
  if (j != 1 && j != 2) throw std::invalid_argument("mmse: j must be 1 or 2");
  JointStats js = joint_stats(s1.input, s1.gain, s2.input, s2.gain, quad);
  return (j == 1) ? js.mmse1 : js.mmse2;
}

DerivativeReport derivative_report(int j, const InputModel& in1,
                                   const InputModel& in2, cplx h1, cplx h2,
                                   double alpha1, double alpha2,
                                   const SystemParams& params,
                                   IntegrationSpec quad) {
  if (j != 1 && j != 2) throw std::invalid_argument("derivative_report: j must be 1 or 2");
  DerivativeReport rep;
  double aj = (j == 1) ? alpha1 : alpha2;
  if (aj < kAlphaFloor) {
    aj = kAlphaFloor;
    rep.alpha_floor_applied = true;
  }
  double a1 = (j == 1) ? aj : alpha1;
  double a2 = (j == 2) ? aj : alpha2;
  cplx g1 = std::sqrt(a1 * params.pbar) * h1;
  cplx g2 = std::sqrt(a2 * params.pbar) * h2;
  const InputModel& inj = (j == 1) ? in1 : in2;
  cplx gj = (j == 1) ? g1 : g2;
  cplx gm = (j == 1) ? g2 : g1;
  double zj = std::norm((j == 1) ? h1 : h2);
  JointStats js = joint_stats(in1, g1, in2, g2, quad);
  SingleStats sj = single_stats(inj, gj, quad);
  rep.mmse_joint = (j == 1) ? js.mmse1 : js.mmse2;
  rep.mmse_clean = sj.mmse;
  cplx cj = (j == 1) ? js.cross : std::conj(js.cross);  // E{xhat_j xhat_m^*}
  // pbar*sqrt(am/aj)*Re(h_j h_m^* E{..}) with independent zero-cross inputs
  // reduces to -Re(g_j conj(g_m) E{xhat_j xhat_m^*})/alpha_j.
  rep.cross_term = -(gj * std::conj(gm) * cj).real() / aj;
  rep.d_own = params.pbar * zj * rep.mmse_joint + rep.cross_term;
  rep.d_own_clean = params.pbar * zj * rep.mmse_clean;
  rep.d_cross = rep.d_own - rep.d_own_clean;
  return rep;
}

MiResult mc_oracle_mi(const ScaledInput& s1, const ScaledInput& s2,
                      long n_samples, std::uint64_t seed) {
  if (s1.input.is_gaussian() || s2.input.is_gaussian())
    throw std::invalid_argument("mc_oracle_mi: finite alphabets only");
  if (n_samples < 1) throw std::invalid_argument("mc_oracle_mi: n_samples >= 1");
  const Prep& c1 = prep_finite(s1.input);
  const Prep& c2 = prep_finite(s2.input);
  int K = c1.K * c2.K;
  std::vector<cplx> mu((std::size_t)K);
  std::vector<double> p((std::size_t)K), cum((std::size_t)K);
  double run = 0.0;
  for (int a = 0; a < c1.K; ++a)
    for (int b = 0; b < c2.K; ++b) {
      int k = a * c2.K + b;
      mu[k] = s1.gain * c1.x[a] + s2.gain * c2.x[b];
      p[k] = c1.p[a] * c2.p[b];
      run += p[k];
      cum[k] = run;
    }
  Rng rng(seed);
  double mean = 0.0, m2 = 0.0;
  for (long i = 0; i < n_samples; ++i) {
    double u = rng.next_unit() * run;
    int k = (int)(std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
    if (k >= K) k = K - 1;
    cplx w = rng.next_cnormal();
    cplx y = mu[k] + w;
    double mx = -HUGE_VAL;
    for (int l = 0; l < K; ++l) mx = std::max(mx, -std::norm(y - mu[l]));
    double s = 0.0;
    for (int l = 0; l < K; ++l)
      if (p[l] > 0.0) s += p[l] * std::exp(-std::norm(y - mu[l]) - mx);
    double val = -std::norm(w) - (std::log(s) + mx);
    double delta = val - mean;
    mean += delta / (i + 1);
    m2 += delta * (val - mean);
  }
  MiResult r;
  r.nats = mean;
  r.bits = mean / kLn2;
  r.se_nats = n_samples > 1 ? std::sqrt(m2 / ((double)n_samples * (n_samples - 1)))
                            : HUGE_VAL;
  return r;
}

void dump_integrand_csv(const ScaledInput& s1, const ScaledInput& s2,
                        const std::string& path,
                        const std::string& header_comment,
                        IntegrationSpec quad) {
  if (s1.input.is_gaussian() || s2.input.is_gaussian())
    throw std::invalid_argument("dump_integrand_csv: finite alphabets only");
  const Prep& c1 = prep_finite(s1.input);
  const Prep& c2 = prep_finite(s2.input);
  const int N = checked_nodes(quad);
  const auto& rule = gauss_hermite(N);
  // clarity over speed here: the solver path never calls this
  std::vector<double> grid((std::size_t)N * N, 0.0);
  for (int a = 0; a < c1.K; ++a)
    for (int b = 0; b < c2.K; ++b) {
      const double pab = c1.p[a] * c2.p[b];
      if (pab <= 0.0) continue;
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
          const cplx w(rule.x[i], rule.x[j]);
          double s = 0.0;
          for (int l = 0; l < c1.K; ++l)
            for (int m = 0; m < c2.K; ++m) {
              if (c1.p[l] <= 0.0 || c2.p[m] <= 0.0) continue;
              const cplx d = s1.gain * (c1.x[a] - c1.x[l]) +
                             s2.gain * (c2.x[b] - c2.x[m]);
              s += c1.p[l] * c2.p[m] * std::exp(-std::norm(w + d));
            }
          grid[(std::size_t)i * N + j] += pab * std::log(s);
        }
    }
  std::ofstream out(path);
  if (!out) throw numeric_error("cannot open for writing: " + path);
  if (!header_comment.empty()) out << "# " << header_comment << "\n";
  out << "node_a,node_b,t_re,t_im,weight,integrand\n";
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      out << i << "," << j << "," << fmt_double(rule.x[i]) << ","
          << fmt_double(rule.x[j]) << "," << fmt_double(rule.w[i] * rule.w[j])
          << "," << fmt_double(grid[(std::size_t)i * N + j]) << "\n";
}

}  // namespace macap
