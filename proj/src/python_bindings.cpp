#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>

#include "macap/decoding.hpp"
#include "macap/runner.hpp"

namespace py = pybind11;
using namespace macap;

namespace {

// str name or [(re, im, prior), ...]
InputModel to_input(const py::object& spec) {
  if (py::isinstance<py::str>(spec)) return input_from_name(spec.cast<std::string>());
  Constellation c;
  c.label = "custom";
  for (const auto& row : spec.cast<py::list>()) {
    auto t = row.cast<py::tuple>();
    if (t.size() != 3)
      throw std::invalid_argument("custom constellation wants (re, im, prior) triples");
    c.points.push_back({cplx(t[0].cast<double>(), t[1].cast<double>()),
                        t[2].cast<double>()});
  }
  ValidationReport rep = validate(c);
  if (!rep.ok) throw std::invalid_argument(rep.message);
  return InputModel::from(std::move(c));
}

py::dict mi_to_dict(const MiResult& r) {
  py::dict d;
  d["nats"] = r.nats;
  d["bits"] = r.bits;
  d["se_nats"] = r.se_nats;
  return d;
}

py::dict point_to_dict(const CapacityPoint& p) {
  py::dict d;
  d["lambda1"] = p.lambda1;
  d["lambda2"] = p.lambda2;
  d["c1"] = p.c1;
  d["c2"] = p.c2;
  d["objective"] = p.objective;
  d["converged"] = p.converged;
  d["note"] = p.note;
  return d;
}

}  // namespace

PYBIND11_MODULE(_macap, m) {
  m.doc() = "two-user multiple-access effective capacity core";

  py::register_exception<parse_error>(m, "ParseError", PyExc_ValueError);
  py::register_exception<convergence_error>(m, "ConvergenceError",
                                            PyExc_RuntimeError);
  py::register_exception<numeric_error>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<estimation_error>(m, "EstimationError",
                                           PyExc_RuntimeError);

  m.def(
      "mi_single",
      [](const py::object& input, cplx gain, int nodes) {
        return mi_to_dict(mi_single({to_input(input), gain}, {nodes}));
      },
      py::arg("input"), py::arg("gain"), py::arg("nodes") = 48,
      "I(x;y) in a single-user AWGN channel with the given complex gain");

  m.def(
      "mi_joint",
      [](const py::object& in1, cplx g1, const py::object& in2, cplx g2,
         int nodes) {
        return mi_to_dict(
            mi_joint({to_input(in1), g1}, {to_input(in2), g2}, {nodes}));
      },
      py::arg("input1"), py::arg("gain1"), py::arg("input2"), py::arg("gain2"),
      py::arg("nodes") = 48, "joint I(x1,x2;y) of the two-user channel");

  m.def(
      "mmse",
      [](int j, const py::object& in1, cplx g1, const py::object& in2, cplx g2,
         int nodes) {
        return mmse(j, {to_input(in1), g1}, {to_input(in2), g2}, {nodes});
      },
      py::arg("j"), py::arg("input1"), py::arg("gain1"), py::arg("input2"),
      py::arg("gain2"), py::arg("nodes") = 48,
      "MMSE of x_j given y in the two-user channel");

  m.def(
      "effective_capacity",
      [](const std::vector<double>& rates, const std::vector<double>& weights,
         double theta, double bandwidth_hz, double frame_seconds) {
        SystemParams p;
        p.bandwidth_hz = bandwidth_hz;
        p.frame_seconds = frame_seconds;
        return effective_capacity(rates, weights, theta, p);
      },
      py::arg("rates"), py::arg("weights"), py::arg("theta"),
      py::arg("bandwidth_hz") = 100.0, py::arg("frame_seconds") = 1.0,
      "log-MGF effective capacity of a rate table, bits/s/Hz");

  m.def("presets", [] {
    py::dict d;
    for (const auto& p : scenario_presets()) d[py::str(p.first)] = p.second;
    return d;
  });

  m.def(
      "canonical",
      [](const std::string& text) { return canonical_text(parse_scenario(text)); },
      py::arg("scenario_text"),
      "canonical key=value form a scenario hashes to");

  m.def(
      "region",
      [](const std::string& text) {
        Scenario sc = parse_scenario(text);
        FadingEnsemble ens = build_ensemble(sc);
        RegionTrace tr =
            trace_region(ens, sc.qos, sc.params, sc.in1, sc.in2,
                         sc.lambda_points, sc.tols, sc.bopts, resolve_quad(sc));
        py::list out;
        for (const CapacityPoint& p : tr.points) out.append(point_to_dict(p));
        return out;
      },
      py::arg("scenario_text"),
      "weight-grid sweep of the effective capacity region");

  m.def(
      "policy",
      [](const std::string& text) {
        Scenario sc = parse_scenario(text);
        FadingEnsemble ens = build_ensemble(sc);
        Weights w{sc.lambda1, 1.0 - sc.lambda1};
        FixedPointResult fp =
            partition_fixed_point(ens, w, sc.qos, sc.params, sc.in1, sc.in2,
                                  resolve_quad(sc), sc.tols, sc.bopts, nullptr);
        py::dict d;
        std::vector<int> tags;
        std::vector<double> z1, z2, wt;
        for (std::size_t i = 0; i < ens.samples.size(); ++i) {
          tags.push_back(fp.partition.order[i] == RegionTag::Z ? 0 : 1);
          z1.push_back(ens.samples[i].z1);
          z2.push_back(ens.samples[i].z2);
          wt.push_back(ens.samples[i].weight);
        }
        d["alpha1"] = fp.policy.alpha1;
        d["alpha2"] = fp.policy.alpha2;
        d["r1"] = fp.rates.r1;
        d["r2"] = fp.rates.r2;
        d["tags"] = tags;  // 0 = Z (order 2,1), 1 = Zc
        d["z1"] = z1;
        d["z2"] = z2;
        d["weights"] = wt;
        d["epsilon"] = fp.state.epsilon;
        d["psi1"] = fp.state.psi1;
        d["psi2"] = fp.state.psi2;
        d["objective"] = fp.objective;
        d["rounds"] = fp.rounds;
        d["ergodic_fallback"] = fp.ergodic_fallback;
        d["warnings"] = fp.warnings;
        return d;
      },
      py::arg("scenario_text"),
      "optimal allocation, rates and decoding partition at scenario.lambda1");

  m.def(
      "boundary_point",
      [](double z1, double alpha1, double alpha2, const std::string& text) {
        Scenario sc = parse_scenario(text);
        std::vector<double> z2s;
        for (const ChannelSample& s : build_ensemble(sc).samples)
          z2s.push_back(s.z2);
        std::sort(z2s.begin(), z2s.end());
        const double z2_max = sc.bopts.z2_max > 0.0
                                  ? sc.bopts.z2_max
                                  : z2s[(std::size_t)(0.999 * (z2s.size() - 1))];
        BoundaryResult br =
            solve_boundary(z1, alpha1, alpha2, sc.params, sc.in1, sc.in2,
                           z2_max, resolve_quad(sc), sc.bopts);
        py::dict d;
        d["found"] = br.found;
        d["z2_star"] = br.z2_star;
        d["residual"] = br.residual;
        d["warning"] = br.warning;
        return d;
      },
      py::arg("z1"), py::arg("alpha1"), py::arg("alpha2"),
      py::arg("scenario_text"),
      "decoding-order boundary z2*(z1) for one z1 slice");

  m.def(
      "run",
      [](const std::string& text, const std::string& command,
         const std::string& out_dir) {
        Scenario sc = parse_scenario(text);
        if (!out_dir.empty()) sc.out_dir = out_dir;
        RunOutcome rc = run_command(sc, command);
        py::dict d;
        d["exit_code"] = rc.exit_code;
        d["category"] = rc.category;
        d["message"] = rc.message;
        return d;
      },
      py::arg("scenario_text"), py::arg("command"), py::arg("out_dir") = "",
      "full CLI pipeline: writes CSV artifacts and the run report");
}
