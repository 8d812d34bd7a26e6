#pragma once
#include <cstdint>
#include <map>
#include <string>

#include "macap/channel.hpp"
#include "macap/constellation.hpp"
#include "macap/decoding.hpp"
#include "macap/effective_capacity.hpp"
#include "macap/power_alloc.hpp"
#include "macap/quadrature.hpp"

namespace macap {

// Parsed, validated run description. All dB fields are converted here; the
// numeric core only sees linear scale.
struct Scenario {
  SystemParams params;  // pbar linear
  RicianSpec rician1, rician2;
  QosSpec qos;
  InputModel in1, in2;
  SolverTols tols;
  BoundaryOptions bopts;
  IntegrationSpec quad{0, 0.0};  // nodes = 0 -> resolve_quad picks by alphabet
  int samples = 2000;
  std::uint64_t seed = 1;
  int lambda_points = 21;
  double lambda1 = 0.5;  // weight used by the policy command
  long frames = 1000000;
  double arrival_scale = 1.0;  // arrival = scale * effective capacity
  int validate_user = 1;
  double boundary_alpha1 = 0.5, boundary_alpha2 = 0.5;  // boundary command policy
  bool debug_integrand = false;  // policy command dumps one sample's integrand
  std::string out_dir = "out";
  std::string label = "custom";
  std::uint64_t fingerprint = 0;  // hash of the canonical key=value form
};

// Flat key=value text (also accepts ':'); '#' comments; lists comma-separated
// with optional brackets; `preset = <name>` loads a built-in base first.
// Unknown and duplicate keys are parse errors.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario_file(const std::string& path);

// Built-in presets, name -> scenario text.
const std::map<std::string, std::string>& scenario_presets();

// Canonical serialization (sorted key=value lines) the fingerprint is taken
// over; also embedded in output headers.
std::string canonical_text(const Scenario& sc);

// Node count for the MI quadrature when the scenario leaves it automatic.
IntegrationSpec resolve_quad(const Scenario& sc);

// Named alphabets accepted by scenario files (bpsk qpsk 8-psk 4-qam 16-qam
// 64-qam gaussian).
InputModel input_from_name(const std::string& name);

// Ensemble construction as the runner performs it (used by tests too).
FadingEnsemble build_ensemble(const Scenario& sc);

}  // namespace macap
