#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <stdexcept>

#include "macap/constellation.hpp"

using namespace macap;

namespace {

double avg_energy(const Constellation& c) {
  double e = 0.0;
  for (const auto& p : c.points) e += p.prior * std::norm(p.value);
  return e;
}

cplx mean_point(const Constellation& c) {
  cplx m{0.0, 0.0};
  for (const auto& p : c.points) m += p.prior * p.value;
  return m;
}

double min_distance(const Constellation& c) {
  double d = 1e300;
  for (size_t i = 0; i < c.points.size(); ++i)
    for (size_t j = i + 1; j < c.points.size(); ++j)
      d = std::min(d, std::abs(c.points[i].value - c.points[j].value));
  return d;
}

}  // namespace

TEST_CASE("psk and qam alphabets are unit-energy, zero-mean, uniform") {
  for (int order : {2, 4, 8, 16}) {
    Constellation c = make_psk(order);
    REQUIRE(c.points.size() == static_cast<size_t>(order));
    CHECK(avg_energy(c) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(mean_point(c)) < 1e-14);
    for (const auto& p : c.points) {
      CHECK(p.prior == doctest::Approx(1.0 / order));
      CHECK(std::abs(p.value) == doctest::Approx(1.0));  // unit modulus
    }
    CHECK(validate(c).ok);
  }
  for (int order : {4, 16, 64}) {
    Constellation c = make_qam(order);
    REQUIRE(c.points.size() == static_cast<size_t>(order));
    CHECK(avg_energy(c) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(mean_point(c)) < 1e-14);
    CHECK(validate(c).ok);
  }
}

TEST_CASE("bpsk is the exact {+1,-1} pair") {
  Constellation c = make_psk(2);
  CHECK(c.label == "bpsk");
  CHECK(c.points[0].value == cplx(1.0, 0.0));
  CHECK(c.points[1].value == cplx(-1.0, 0.0));
}

TEST_CASE("qam grid spacing at unit energy") {
  // m x m grid at odd integers scaled by 1/sqrt(2(m^2-1)/3)
  Constellation c = make_qam(16);
  CHECK(c.label == "16-qam");
  CHECK(min_distance(c) == doctest::Approx(2.0 / std::sqrt(10.0)).epsilon(1e-13));
  Constellation q4 = make_qam(4);
  CHECK(min_distance(q4) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-13));
}

TEST_CASE("invalid orders are rejected") {
  CHECK_THROWS_AS(make_psk(1), std::invalid_argument);
  CHECK_THROWS_AS(make_qam(8), std::invalid_argument);   // not a square
  CHECK_THROWS_AS(make_qam(2), std::invalid_argument);
  CHECK_THROWS_AS(make_qam(-16), std::invalid_argument);
}

TEST_CASE("validate rejects broken alphabets") {
  Constellation c = make_psk(4);
  c.points[0].prior = -0.25;
  CHECK_FALSE(validate(c).ok);

  Constellation sum = make_psk(4);
  sum.points[0].prior = 0.5;  // priors now sum to 1.25
  CHECK_FALSE(validate(sum).ok);

  Constellation energy = make_psk(4);
  for (auto& p : energy.points) p.value *= 2.0;
  ValidationReport rep = validate(energy);
  CHECK_FALSE(rep.ok);
  CHECK(rep.message.find("energy") != std::string::npos);

  Constellation tiny;
  tiny.points.push_back({cplx(1.0, 0.0), 1.0});
  CHECK_FALSE(validate(tiny).ok);
}

TEST_CASE("input model wrappers") {
  InputModel g = InputModel::gaussian();
  CHECK(g.is_gaussian());
  CHECK(std::string(g.label()) == "gaussian");

  InputModel b = InputModel::from(make_psk(2));
  CHECK_FALSE(b.is_gaussian());
  CHECK(std::string(b.label()) == "bpsk");

  Constellation bad = make_psk(2);
  bad.points[0].value *= 3.0;
  CHECK_THROWS_AS(InputModel::from(bad), std::invalid_argument);
}
