#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "macap/mmse_mi.hpp"
#include "macap/scenario.hpp"

using namespace macap;

namespace {

const IntegrationSpec kFine{96, 0.0};

InputModel bpsk() { return InputModel::from(make_psk(2)); }
InputModel qam(int m) { return InputModel::from(make_qam(m)); }

// random unit-complex phase
cplx phase(Rng& rng) {
  const double a = 2.0 * M_PI * rng.next_unit();
  return {std::cos(a), std::sin(a)};
}

}  // namespace

TEST_CASE("gaussian closed forms") {
  InputModel g = InputModel::gaussian();
  ScaledInput s1{g, cplx(1.0, 0.0)}, s0{g, cplx(0.0, 0.0)};
  CHECK(mi_single(s1).bits == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(mi_single(s0).bits == doctest::Approx(0.0));
  ScaledInput s2{g, cplx(0.0, 1.0)};
  CHECK(mi_joint(s1, s2).bits ==
        doctest::Approx(std::log2(3.0)).epsilon(1e-14));
  // log2(1 + S1/(1+S2))
  CHECK(mi_interference(1, s1, s2).bits ==
        doctest::Approx(std::log2(1.5)).epsilon(1e-12));
  CHECK(mmse(1, s1, s0) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("single-user BPSK at 0 dB against independent oracles") {
  // [DERIVED: 1-D Gauss-Hermite(150) and 400k-point trapezoid oracles agree
  //  on I = 0.7214515908 bits, MMSE = 0.2310182219 for y = x + CN(0,1)]
  ScaledInput s{bpsk(), cplx(1.0, 0.0)};
  MiResult mi = mi_single(s, kFine);
  CHECK(mi.bits == doctest::Approx(0.7214515908).epsilon(1e-9));
  CHECK(mi.bits > 0.0);
  CHECK(mi.bits < 1.0);
  SingleStats st = single_stats(bpsk(), cplx(1.0, 0.0), kFine);
  CHECK(st.mmse == doctest::Approx(0.2310182219).epsilon(1e-7));

  // [DERIVED: Monte-Carlo oracle within 1e-3 bits]
  ScaledInput none{bpsk(), cplx(0.0, 0.0)};
  MiResult mc = mc_oracle_mi(s, none, 1000000, 77);
  CHECK(std::fabs(mi.bits - mc.bits) < 1e-3);
  CHECK(std::fabs(mi.nats - mc.nats) <= 3.0 * mc.se_nats);

  // [DERIVED: Rao-Blackwellized tanh oracle E{1 - tanh^2(2 Re y)},
  //  8e6 draws, seed 3 realizes a 9e-6 gap (oracle SE ~ 1.1e-4)]
  Rng rng(3);
  double acc = 0.0;
  const long n = 8000000;
  for (long i = 0; i < n; ++i) {
    const double x = rng.next_unit() < 0.5 ? 1.0 : -1.0;
    const cplx y = cplx(x, 0.0) + rng.next_cnormal();
    const double t = std::tanh(2.0 * y.real());
    acc += 1.0 - t * t;
  }
  CHECK(std::fabs(st.mmse - acc / n) < 1e-4);
}

TEST_CASE("mi_single basics: zero gain, monotonicity, saturation") {
  for (const InputModel& in : {bpsk(), qam(16), InputModel::gaussian()}) {
    CHECK(mi_single({in, cplx(0.0, 0.0)}).bits == doctest::Approx(0.0));
  }
  double prev = 0.0;
  for (double g2 : {0.1, 0.5, 1.0, 2.0, 4.0, 16.0}) {
    const double v = mi_single({bpsk(), cplx(std::sqrt(g2), 0.0)}).bits;
    CHECK(v > prev);
    CHECK(v <= 1.0 + 1e-9);
    prev = v;
  }
  // 1-bit alphabet saturates
  CHECK(mi_single({bpsk(), cplx(10.0, 0.0)}).bits ==
        doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("mi_joint: degenerate second user and orthogonal BPSK pair") {
  ScaledInput a{bpsk(), cplx(2.0, 0.0)};
  ScaledInput gone{qam(4), cplx(0.0, 0.0)};
  CHECK(std::fabs(mi_joint(a, gone, kFine).bits -
                  mi_single(a, kFine).bits) < 1e-9);

  // orthogonal phases decouple the real and imaginary channels
  ScaledInput b{bpsk(), cplx(0.0, 2.0)};
  MiResult mj = mi_joint(a, b, kFine);
  CHECK(mj.bits == doctest::Approx(1.9809239631).epsilon(1e-9));
  CHECK(std::fabs(mj.bits - 2.0 * mi_single(a, kFine).bits) < 1e-9);
  // [DERIVED: Monte-Carlo oracle over the 4-pair joint alphabet]
  MiResult mc = mc_oracle_mi(a, b, 1000000, 99);
  CHECK(std::fabs(mj.bits - mc.bits) < 1e-3);
  CHECK(std::fabs(mj.nats - mc.nats) <= 3.0 * mc.se_nats);
}

TEST_CASE("interference never helps, and strictly hurts when aligned") {
  ScaledInput a{bpsk(), cplx(2.0, 0.0)}, b{bpsk(), cplx(2.0, 0.0)};
  MiResult interf = mi_interference(1, a, b, kFine);
  MiResult clean = mi_single(a, kFine);
  // [DERIVED: quadrature on both sides; aligned-phase values pinned]
  CHECK(interf.bits == doctest::Approx(0.4961178813).epsilon(1e-8));
  CHECK(clean.bits == doctest::Approx(0.9904619815).epsilon(1e-8));
  CHECK(interf.bits < clean.bits);

  ScaledInput none{bpsk(), cplx(0.0, 0.0)};
  CHECK(std::fabs(mi_interference(1, a, none, kFine).bits - clean.bits) <
        1e-9);
}

TEST_CASE("mixed gaussian/finite joint MI against an independent MC oracle") {
  // y = g1 x1 + g2 x2 + w with x1 ~ CN(0,1), x2 BPSK: f(y|x2) is Gaussian
  // with variance 1 + |g1|^2, so I(x1,x2;y) = E{-ln f_y(y)} - ln(pi e).
  const cplx g1(0.9, 0.3), g2(-0.6, 1.1);
  ScaledInput s1{InputModel::gaussian(), g1}, s2{bpsk(), g2};
  const double quad_bits = mi_joint(s1, s2, kFine).bits;

  Rng rng(2024);
  const double v = 1.0 + std::norm(g1);
  double acc = 0.0;
  const long n = 400000;
  for (long i = 0; i < n; ++i) {
    const double x2 = rng.next_unit() < 0.5 ? 1.0 : -1.0;
    const cplx x1 = rng.next_cnormal();
    const cplx y = g1 * x1 + g2 * x2 + rng.next_cnormal();
    const double e1 = std::exp(-std::norm(y - g2) / v);
    const double e2 = std::exp(-std::norm(y + g2) / v);
    acc += -std::log(0.5 * (e1 + e2) / (M_PI * v));
  }
  const double mc_bits = (acc / n - std::log(M_PI) - 1.0) / kLn2;
  CHECK(std::fabs(quad_bits - mc_bits) < 5e-3);
}

TEST_CASE("conditional mean: priors at zero gain and the BPSK tanh form") {
  ScaledInput z1{qam(16), cplx(0.0, 0.0)}, z2{bpsk(), cplx(0.0, 0.0)};
  CHECK(std::abs(conditional_mean(1, z1, z2, cplx(0.7, -0.2))) < 1e-14);

  // [DERIVED: closed-form BPSK posterior mean tanh(2 g Re y) for real g]
  const double g = 1.3;
  ScaledInput s1{bpsk(), cplx(g, 0.0)}, none{bpsk(), cplx(0.0, 0.0)};
  for (const cplx y : {cplx(0.4, 0.9), cplx(-1.2, 0.1), cplx(2.5, -3.0)}) {
    const cplx xh = conditional_mean(1, s1, none, y);
    CHECK(xh.real() == doctest::Approx(std::tanh(2.0 * g * y.real()))
                           .epsilon(1e-12));
    CHECK(std::fabs(xh.imag()) < 1e-14);
  }
  // posterior concentrates along the transmitted direction
  CHECK(conditional_mean(1, s1, none, cplx(40.0, 0.0)).real() ==
        doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("mmse bounds and basics") {
  ScaledInput off{qam(16), cplx(0.0, 0.0)}, none{bpsk(), cplx(0.0, 0.0)};
  CHECK(mmse(1, off, none) == doctest::Approx(1.0).epsilon(1e-12));
  Rng rng(4242);
  for (int c = 0; c < 8; ++c) {
    ScaledInput s1{c % 2 ? bpsk() : qam(4),
                   std::sqrt(3.0 * rng.next_unit()) * phase(rng)};
    ScaledInput s2{c % 3 ? qam(16) : bpsk(),
                   std::sqrt(3.0 * rng.next_unit()) * phase(rng)};
    const double m1 = mmse(1, s1, s2);
    const double m2 = mmse(2, s1, s2);
    CHECK(m1 >= -1e-12);
    CHECK(m1 <= 1.0 + 1e-12);
    CHECK(m2 >= -1e-12);
    CHECK(m2 <= 1.0 + 1e-12);
    // interference can only raise the estimation error
    const double clean = mmse(1, s1, ScaledInput{s2.input, cplx(0.0, 0.0)});
    CHECK(m1 >= clean - 1e-9);
    const double mi_j = mi_joint(s1, s2).bits;
    const double cap = std::log2(double(s1.input.finite.points.size()) *
                                 double(s2.input.finite.points.size()));
    CHECK(mi_j >= -1e-12);
    CHECK(mi_j <= cap + 1e-9);
  }
}

TEST_CASE("I-MMSE identity across an SNR sweep") {
  // numerical d/dalpha of mi_single (nats) vs pbar*z*mmse  (Eq.-13 form)
  for (const InputModel& in : {bpsk(), qam(4), qam(16)}) {
    for (double snr_db : {-10.0, -5.0, 0.0, 5.0, 10.0}) {
      const double pz = std::pow(10.0, snr_db / 10.0);
      const double alpha = 0.7;  // gain^2 = alpha * pz at pbar*z = pz
      const double da = 1e-4;
      auto mi_at = [&](double a) {
        return mi_single({in, cplx(std::sqrt(a * pz), 0.0)}, kFine).nats;
      };
      const double fd = (mi_at(alpha + da) - mi_at(alpha - da)) / (2.0 * da);
      SingleStats st =
          single_stats(in, cplx(std::sqrt(alpha * pz), 0.0), kFine);
      CHECK(fd == doctest::Approx(pz * st.mmse).epsilon(1e-3));
    }
  }
}

TEST_CASE("derivative_report: gaussian closed form and the chain rule") {
  SystemParams params;
  params.pbar = 2.0;
  InputModel g = InputModel::gaussian();
  // single active gaussian user: d_own = pbar*z/(1 + alpha*pbar*z) nats
  DerivativeReport r = derivative_report(1, g, g, cplx(1.2, -0.5),
                                         cplx(0.0, 0.0), 0.6, 0.0, params);
  const double z = std::norm(cplx(1.2, -0.5));
  CHECK(r.d_own == doctest::Approx(2.0 * z / (1.0 + 0.6 * 2.0 * z))
                       .epsilon(1e-12));
  CHECK(r.d_own_clean == doctest::Approx(r.d_own).epsilon(1e-12));
  CHECK(r.cross_term == doctest::Approx(0.0));

  // chain rule: dI/dalpha scales with pbar at matched gain^2
  SystemParams half;
  half.pbar = 1.0;
  DerivativeReport r2 = derivative_report(1, bpsk(), bpsk(), cplx(1.0, 0.0),
                                          cplx(0.8, 0.3), 0.3, 0.5, params);
  DerivativeReport r3 = derivative_report(1, bpsk(), bpsk(), cplx(1.0, 0.0),
                                          cplx(0.8, 0.3), 0.6, 1.0, half);
  CHECK(r2.d_own == doctest::Approx(2.0 * r3.d_own).epsilon(1e-10));
  CHECK(r2.d_cross == doctest::Approx(r2.d_own - r2.d_own_clean));
}

TEST_CASE("derivative_report matches finite differences of the rates") {
  // [DERIVED: central finite-difference oracle, delta = 1e-4]
  SystemParams params;
  params.pbar = 2.0;
  const cplx h1(0.9, 0.4), h2(-0.7, 0.6);
  const double a1 = 0.5, a2 = 0.5, da = 1e-4;
  InputModel in = bpsk();
  auto gain = [&](cplx h, double a) { return std::sqrt(a * 2.0) * h; };
  auto interf = [&](double a1v, double a2v) {
    return mi_interference(1, {in, gain(h1, a1v)}, {in, gain(h2, a2v)}, kFine)
        .nats;
  };
  auto clean = [&](double a1v) {
    return mi_single({in, gain(h1, a1v)}, kFine).nats;
  };
  DerivativeReport r =
      derivative_report(1, in, in, h1, h2, a1, a2, params, kFine);
  const double fd_own = (interf(a1 + da, a2) - interf(a1 - da, a2)) / (2 * da);
  const double fd_clean = (clean(a1 + da) - clean(a1 - da)) / (2 * da);
  CHECK(r.d_own == doctest::Approx(fd_own).epsilon(1e-3));
  CHECK(r.d_own_clean == doctest::Approx(fd_clean).epsilon(1e-3));
  CHECK(r.d_own_clean ==
        doctest::Approx(2.0 * std::norm(h1) * r.mmse_clean).epsilon(1e-10));
  CHECK(r.mmse_joint >= 0.0);
  CHECK(r.mmse_joint <= 1.0);
  CHECK_FALSE(r.alpha_floor_applied);
}

TEST_CASE("derivative_report floor semantics below the alpha floor") {
  SystemParams params;
  params.pbar = 1.0;
  DerivativeReport r = derivative_report(1, bpsk(), bpsk(), cplx(1.0, 0.0),
                                         cplx(1.0, 0.0), 0.0, 0.5, params);
  CHECK(r.alpha_floor_applied);
  CHECK(std::isfinite(r.d_own));
  CHECK(std::isfinite(r.cross_term));
}

TEST_CASE("joint_stats consistency with the single-user pass") {
  JointStats js = joint_stats(bpsk(), cplx(1.1, 0.2), qam(4),
                              cplx(0.0, 0.0), kFine);
  SingleStats ss = single_stats(bpsk(), cplx(1.1, 0.2), kFine);
  CHECK(js.mi_nats == doctest::Approx(ss.mi_nats).epsilon(1e-9));
  CHECK(js.mmse1 == doctest::Approx(ss.mmse).epsilon(1e-9));
  CHECK(js.mmse2 == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(js.cross) < 1e-12);  // independent zero-mean inputs
}

TEST_CASE("mc oracle self-consistency sweep") {
  // [DERIVED: agreement with mi_joint within 3 standard errors]
  Rng rng(808);
  for (int c = 0; c < 6; ++c) {
    InputModel in1 = c % 2 ? bpsk() : qam(4);
    InputModel in2 = c % 3 ? qam(4) : bpsk();
    ScaledInput s1{in1, std::sqrt(4.0 * rng.next_unit() + 0.1) * phase(rng)};
    ScaledInput s2{in2, std::sqrt(4.0 * rng.next_unit() + 0.1) * phase(rng)};
    MiResult q = mi_joint(s1, s2, kFine);
    MiResult mc = mc_oracle_mi(s1, s2, 200000, 1000 + c);
    CHECK(std::fabs(q.nats - mc.nats) <= 3.0 * mc.se_nats);
    CHECK(mc.se_nats > 0.0);
  }
  // degenerate: both gains zero
  ScaledInput none{bpsk(), cplx(0.0, 0.0)};
  MiResult z = mc_oracle_mi(none, none, 50000, 5);
  CHECK(std::fabs(z.bits) <= 3.0 * z.se_nats / kLn2 + 1e-12);
  // saturation: 1-bit alphabet at |g|^2 = 100
  MiResult sat = mc_oracle_mi({bpsk(), cplx(10.0, 0.0)}, none, 50000, 6);
  CHECK(sat.bits == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("auto node counts reproduce the 96-node reference") {
  // the resolve_quad table must stay accurate for MI and for the Theorem-1
  // derivative combination the solver consumes
  struct Case {
    const char* name1;
    const char* name2;
    double pbar;
  };
  for (const Case& c : {Case{"bpsk", "bpsk", 1.0}, Case{"bpsk", "bpsk", 10.0},
                        Case{"16-qam", "16-qam", 1.0},
                        Case{"4-qam", "4-qam", 0.316227766}}) {
    Scenario sc;
    sc.in1 = input_from_name(c.name1);
    sc.in2 = input_from_name(c.name2);
    sc.params.pbar = c.pbar;
    IntegrationSpec table = resolve_quad(sc);
    const cplx h1(0.9, 0.4), h2(-0.7, 0.6);
    const cplx g1 = std::sqrt(0.55 * c.pbar) * h1;
    const cplx g2 = std::sqrt(0.45 * c.pbar) * h2;
    JointStats a = joint_stats(sc.in1, g1, sc.in2, g2, table);
    JointStats b = joint_stats(sc.in1, g1, sc.in2, g2, kFine);
    CHECK(std::fabs(a.mi_nats - b.mi_nats) / kLn2 < 5e-5);
    auto d1 = [&](const JointStats& js) {
      return c.pbar * std::norm(h1) * js.mmse1 -
             c.pbar * std::sqrt(0.45 / 0.55) *
                 (cplx(h1 * std::conj(h2)) * js.cross).real();
    };
    CHECK(std::fabs(d1(a) - d1(b)) <=
          6e-3 * std::max(std::fabs(d1(b)), 1e-6));
  }
}

TEST_CASE("integrand dump reproduces the joint MI") {
  ScaledInput s1{bpsk(), cplx(1.0, 0.5)}, s2{qam(4), cplx(-0.3, 0.8)};
  const std::string path = "test_integrand.csv";
  dump_integrand_csv(s1, s2, path, "fingerprint=test", {24, 0.0});
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string line;
  double acc = 0.0;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("node_a", 0) == 0)
      continue;
    // columns: node_a, node_b, t_re, t_im, weight, integrand
    double na, nb, tr, ti, w, f;
    REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf", &na, &nb,
                        &tr, &ti, &w, &f) == 6);
    acc += w * f;
    ++rows;
  }
  CHECK(rows == 24 * 24);
  const double mi_from_dump = -1.0 - acc;
  CHECK(mi_from_dump ==
        doctest::Approx(mi_joint(s1, s2, {24, 0.0}).nats).epsilon(1e-9));
  std::remove(path.c_str());
}
