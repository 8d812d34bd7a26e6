#pragma once
#include <string>
#include <vector>

#include "macap/common.hpp"

namespace macap {

struct ConstellationPoint {
  cplx value;
  double prior;
};

// Unit-average-energy alphabet; transmit power enters only through alpha*Pbar.
struct Constellation {
  std::vector<ConstellationPoint> points;
  std::string label;
};

struct ValidationReport {
  bool ok = true;
  std::string message = "ok";
};

Constellation make_psk(int order);
Constellation make_qam(int order);
ValidationReport validate(const Constellation& c);

// Finite constellation or the unit-variance circularly symmetric Gaussian.
struct InputModel {
  enum class Kind { Finite, Gaussian };
  Kind kind = Kind::Gaussian;
  Constellation finite;

  static InputModel gaussian() { return InputModel{}; }
  static InputModel from(Constellation c);
  bool is_gaussian() const { return kind == Kind::Gaussian; }
  const char* label() const {
    return is_gaussian() ? "gaussian" : finite.label.c_str();
  }
};

}  // namespace macap
