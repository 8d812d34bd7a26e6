#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "macap/decoding.hpp"
#include "macap/effective_capacity.hpp"
#include "macap/power_alloc.hpp"

using namespace macap;

namespace {

SystemParams params100() { return SystemParams{}; }  // n = TB = 100

// i.i.d. ensemble made exactly exchange-symmetric by mirroring every sample
FadingEnsemble mirrored(int half, std::uint64_t seed) {
  FadingEnsemble e = sample_ensemble({-300.0, 1.0}, {-300.0, 1.0}, half, seed);
  const std::size_t n = e.samples.size();
  for (std::size_t i = 0; i < n; ++i) {
    ChannelSample m = e.samples[i];
    std::swap(m.h1, m.h2);
    std::swap(m.z1, m.z2);
    e.samples.push_back(m);
  }
  for (auto& s : e.samples) s.weight = 1.0 / (2.0 * n);
  return e;
}

}  // namespace

TEST_CASE("constant rates pass through for any exponent") {
  std::vector<double> r(8, 1.7), w(8, 0.125);
  for (double th : {0.0, 0.01, 0.3, 1.0}) {
    CHECK(effective_capacity(r, w, th, params100()) ==
          doctest::Approx(1.7).epsilon(1e-12));
  }
  CHECK(ergodic_limit(r, w) == doctest::Approx(1.7).epsilon(1e-13));
}

TEST_CASE("two-point rate distribution against the scalar closed form") {
  // theta*TB = 1, rates {0,2}: C = -ln((1 + e^-2)/2)
  // [DERIVED: direct scalar evaluation, -ln(0.5*(1+exp(-2))) = 0.566219169517]
  std::vector<double> r{0.0, 2.0}, w{0.5, 0.5};
  SystemParams p = params100();
  CHECK(effective_capacity(r, w, 0.01, p) ==
        doctest::Approx(0.566219169517).epsilon(1e-12));
}

TEST_CASE("small-theta limit recovers the ergodic mean") {
  std::vector<double> r{0.3, 1.1, 2.4, 0.9}, w{0.25, 0.25, 0.25, 0.25};
  SystemParams p = params100();
  const double mean = ergodic_limit(r, w);
  CHECK(std::fabs(effective_capacity(r, w, 1e-6, p) - mean) < 1e-3);
  CHECK(std::fabs(effective_capacity(r, w, 1e-8, p) - mean) < 1e-6);
  CHECK(effective_capacity(r, w, 0.0, p) == doctest::Approx(mean));
  CHECK(effective_capacity(r, w, -1.0, p) == doctest::Approx(mean));
}

TEST_CASE("Jensen bound and monotonicity in theta") {
  std::vector<double> r{0.0, 0.4, 1.2, 2.0, 3.1}, w(5, 0.2);
  SystemParams p = params100();
  const double erg = ergodic_limit(r, w);
  double prev = erg;
  for (double th : {0.001, 0.005, 0.01, 0.05, 0.1, 0.5}) {
    const double c = effective_capacity(r, w, th, p);
    CHECK(c <= erg + 1e-12);
    CHECK(c <= prev + 1e-12);
    CHECK(c >= 0.0);
    prev = c;
  }
}

TEST_CASE("degenerate and invalid inputs") {
  SystemParams p = params100();
  std::vector<double> z(4, 0.0), w(4, 0.25);
  CHECK(effective_capacity(z, w, 0.05, p) == doctest::Approx(0.0));
  std::vector<double> bad{1.0, HUGE_VAL}, w2{0.5, 0.5};
  CHECK_THROWS_AS(effective_capacity(bad, w2, 0.01, p), numeric_error);
  std::vector<double> mism{1.0};
  CHECK_THROWS_AS(effective_capacity(mism, w2, 0.01, p),
                  std::invalid_argument);
  CHECK_THROWS_AS(ergodic_limit(mism, w2), std::invalid_argument);
}

TEST_CASE("convexity defect flags dented frontiers only") {
  RegionTrace convex;
  for (double l : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    CapacityPoint pt;
    pt.lambda1 = l;
    pt.c1 = l;                      // quarter circle: convex frontier
    pt.c2 = std::sqrt(1.0 - l * l);
    convex.points.push_back(pt);
  }
  CHECK(convexity_defect(convex) == doctest::Approx(0.0));

  RegionTrace dented = convex;
  dented.points[2].c2 *= 0.8;  // pull one point strictly inside
  CHECK(convexity_defect(dented) > 0.01);

  dented.points[2].converged = false;  // unconverged points are skipped
  CHECK(convexity_defect(dented) == doctest::Approx(0.0));
}

TEST_CASE("region trace on a symmetric ensemble") {
  FadingEnsemble e = mirrored(30, 21);
  QosSpec qos;  // 0.01 / 0.01
  SystemParams p = params100();
  InputModel in = InputModel::from(make_psk(2));
  SolverTols tols;
  BoundaryOptions bopts;
  RegionTrace tr =
      trace_region(e, qos, p, in, in, 3, tols, bopts, {20, 0.0});
  REQUIRE(tr.points.size() == 3);
  for (std::size_t i = 0; i < tr.points.size(); ++i) {
    const CapacityPoint& pt = tr.points[i];
    CHECK(pt.converged);
    CHECK(pt.lambda1 == doctest::Approx(0.5 * i));
    CHECK(pt.lambda2 == doctest::Approx(1.0 - 0.5 * i));
    CHECK(pt.objective ==
          doctest::Approx(pt.lambda1 * pt.c1 + pt.lambda2 * pt.c2)
              .epsilon(1e-12));
    CHECK(pt.c1 >= 0.0);
    CHECK(pt.c2 >= 0.0);
  }
  // endpoints are single-user: the unweighted transmitter is silent
  CHECK(tr.points[0].c1 == doctest::Approx(0.0));
  CHECK(tr.points[2].c2 == doctest::Approx(0.0));
  CHECK(tr.points[0].c2 > 0.0);
  CHECK(tr.points[2].c1 > 0.0);
  // exchange symmetry: equal capacities at equal weights, mirrored endpoints
  CHECK(tr.points[1].c1 == doctest::Approx(tr.points[1].c2).epsilon(2e-3));
  CHECK(tr.points[0].c2 == doctest::Approx(tr.points[2].c1).epsilon(2e-3));
  CHECK(convexity_defect(tr) == doctest::Approx(0.0).epsilon(1e-9));

  CHECK_THROWS_AS(trace_region(e, qos, p, in, in, 1, tols, bopts, {20, 0.0}),
                  std::invalid_argument);
}

TEST_CASE("failed interior points are marked, not interpolated") {
  FadingEnsemble e = sample_ensemble({-300.0, 1.0}, {-300.0, 1.0}, 40, 9);
  QosSpec qos;
  SystemParams p = params100();
  InputModel in = InputModel::from(make_psk(2));
  SolverTols tols;
  tols.outer_cap = 2;  // starve the psi fixed point
  BoundaryOptions bopts;
  RegionTrace tr =
      trace_region(e, qos, p, in, in, 3, tols, bopts, {20, 0.0});
  REQUIRE(tr.points.size() == 3);
  CHECK_FALSE(tr.points[1].converged);
  CHECK_FALSE(tr.points[1].note.empty());
}
