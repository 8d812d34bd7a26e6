#include "macap/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <utility>
#include <vector>

#include "macap/decoding.hpp"
#include "macap/queue_sim.hpp"

namespace macap {
namespace {

using Clock = std::chrono::steady_clock;

long ms_since(Clock::time_point t0) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() -
                                                               t0)
      .count();
}

std::string hex16(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, v);
  return buf;
}

std::string header_line(const Scenario& sc) {
  return "# fingerprint=" + hex16(sc.fingerprint) + " scenario=" + sc.label;
}

std::ofstream open_out(const Scenario& sc, const std::string& name) {
  std::filesystem::create_directories(sc.out_dir);
  const std::string path = sc.out_dir + "/" + name;
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  return f;
}

// key = value report; values are already formatted
struct Report {
  std::vector<std::pair<std::string, std::string>> rows;
  void add(const std::string& k, const std::string& v) { rows.push_back({k, v}); }
  void add(const std::string& k, double v) { add(k, fmt_double(v)); }
  void add(const std::string& k, long v) { add(k, std::to_string(v)); }
  void add(const std::string& k, int v) { add(k, std::to_string(v)); }
  void write(const Scenario& sc, const std::string& name) {
    std::ofstream f = open_out(sc, name);
    f << header_line(sc) << "\n";
    for (const auto& r : rows) f << r.first << " = " << r.second << "\n";
  }
};

void add_warnings(Report& rep, const std::string& prefix,
                  const std::vector<std::string>& warnings) {
  for (std::size_t i = 0; i < warnings.size(); ++i)
    rep.add(prefix + "_warning" + std::to_string(i), warnings[i]);
}

double percentile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  if (v.empty()) return 0.0;
  const double pos = p * (v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= v.size()) return v.back();
  const double frac = pos - lo;
  return v[lo] * (1.0 - frac) + v[lo + 1] * frac;
}

void cmd_region(const Scenario& sc, Report& rep) {
  const Clock::time_point t0 = Clock::now();
  const FadingEnsemble ens = build_ensemble(sc);
  const IntegrationSpec quad = resolve_quad(sc);
  rep.add("ensemble_ms", ms_since(t0));

  const Clock::time_point t1 = Clock::now();
  RegionTrace trace = trace_region(ens, sc.qos, sc.params, sc.in1, sc.in2,
                                   sc.lambda_points, sc.tols, sc.bopts, quad);
  trace.fingerprint = sc.fingerprint;
  rep.add("solve_ms", ms_since(t1));

  std::ofstream csv = open_out(sc, "region.csv");
  csv << header_line(sc) << "\n";
  csv << "lambda1,c1,c2,objective,converged\n";
  int failed = 0;
  for (const CapacityPoint& p : trace.points) {
    csv << fmt_double(p.lambda1) << "," << fmt_double(p.c1) << ","
        << fmt_double(p.c2) << "," << fmt_double(p.objective) << ","
        << (p.converged ? 1 : 0) << "\n";
    if (!p.converged) ++failed;
  }
  rep.add("points", static_cast<int>(trace.points.size()));
  rep.add("failed_points", failed);
  rep.add("convexity_defect", convexity_defect(trace));
  for (const CapacityPoint& p : trace.points)
    if (!p.note.empty())
      rep.add("note_lambda1_" + fmt_double(p.lambda1), p.note);
}

void cmd_boundary(const Scenario& sc, Report& rep) {
  const Clock::time_point t0 = Clock::now();
  const FadingEnsemble ens = build_ensemble(sc);
  const IntegrationSpec quad = resolve_quad(sc);

  std::vector<double> z1s, z2s;
  for (const ChannelSample& s : ens.samples) {
    z1s.push_back(s.z1);
    z2s.push_back(s.z2);
  }
  const double z2_max =
      sc.bopts.z2_max > 0.0 ? sc.bopts.z2_max : percentile(z2s, 0.999);
  const double z1_lo = std::max(percentile(z1s, 0.005), 1e-12);
  const double z1_hi = std::max(percentile(z1s, 0.995), z1_lo * 1.0001);
  const int ng = std::max(2, sc.bopts.z1_grid);

  std::ofstream csv = open_out(sc, "boundary.csv");
  csv << header_line(sc) << "\n";
  csv << "z1,z2_star,residual\n";
  int found = 0, wi = 0;
  for (int k = 0; k < ng; ++k) {
    const double z1 =
        z1_lo * std::pow(z1_hi / z1_lo, static_cast<double>(k) / (ng - 1));
    BoundaryResult br =
        solve_boundary(z1, sc.boundary_alpha1, sc.boundary_alpha2, sc.params,
                       sc.in1, sc.in2, z2_max, quad, sc.bopts);
    if (br.found) {
      csv << fmt_double(z1) << "," << fmt_double(br.z2_star) << ","
          << fmt_double(br.residual) << "\n";
      ++found;
    } else {
      csv << fmt_double(z1) << ",nan,nan\n";
    }
    if (!br.warning.empty())
      rep.add("warning" + std::to_string(wi++), br.warning);
  }
  rep.add("grid_points", ng);
  rep.add("roots_found", found);
  rep.add("z2_max", z2_max);
  rep.add("alpha1", sc.boundary_alpha1);
  rep.add("alpha2", sc.boundary_alpha2);
  rep.add("solve_ms", ms_since(t0));
}

FixedPointResult solve_single_weight(const Scenario& sc,
                                     const FadingEnsemble& ens,
                                     const IntegrationSpec& quad) {
  Weights w;
  w.lambda1 = sc.lambda1;
  w.lambda2 = 1.0 - sc.lambda1;
  return partition_fixed_point(ens, w, sc.qos, sc.params, sc.in1, sc.in2, quad,
                               sc.tols, sc.bopts, nullptr);
}

void cmd_policy(const Scenario& sc, Report& rep) {
  const Clock::time_point t0 = Clock::now();
  const FadingEnsemble ens = build_ensemble(sc);
  const IntegrationSpec quad = resolve_quad(sc);
  FixedPointResult fp = solve_single_weight(sc, ens, quad);
  rep.add("solve_ms", ms_since(t0));

  std::ofstream csv = open_out(sc, "policy.csv");
  csv << header_line(sc) << "\n";
  csv << "index,z1,z2,tag,alpha1,alpha2,r1,r2\n";
  for (std::size_t i = 0; i < ens.samples.size(); ++i) {
    csv << i << "," << fmt_double(ens.samples[i].z1) << ","
        << fmt_double(ens.samples[i].z2) << ","
        << (fp.partition.order[i] == RegionTag::Z ? "Z" : "Zc") << ","
        << fmt_double(fp.policy.alpha1[i]) << ","
        << fmt_double(fp.policy.alpha2[i]) << "," << fmt_double(fp.rates.r1[i])
        << "," << fmt_double(fp.rates.r2[i]) << "\n";
  }

  std::ofstream log = open_out(sc, "policy.log");
  log << header_line(sc) << "\n";
  for (const TraceRow& r : fp.trace)
    log << "loop=" << r.loop << " iteration=" << r.iteration
        << " residual=" << fmt_double(r.residual) << "\n";

  if (sc.debug_integrand) {
    if (sc.in1.is_gaussian() || sc.in2.is_gaussian())
      throw std::invalid_argument(
          "debug_integrand needs two finite constellations");
    const ChannelSample& s = ens.samples.front();
    ScaledInput a{sc.in1, std::sqrt(fp.policy.alpha1[0] * sc.params.pbar) * s.h1};
    ScaledInput b{sc.in2, std::sqrt(fp.policy.alpha2[0] * sc.params.pbar) * s.h2};
    std::filesystem::create_directories(sc.out_dir);
    dump_integrand_csv(a, b, sc.out_dir + "/integrand.csv",
                       header_line(sc).substr(2), quad);
    rep.add("integrand_csv", std::string("integrand.csv"));
  }

  std::vector<double> wt;
  for (const ChannelSample& s : ens.samples) wt.push_back(s.weight);
  double budget = 0.0;
  int n_z = 0;
  for (std::size_t i = 0; i < ens.samples.size(); ++i) {
    budget += wt[i] * (fp.policy.alpha1[i] + fp.policy.alpha2[i]);
    if (fp.partition.order[i] == RegionTag::Z) ++n_z;
  }
  rep.add("lambda1", sc.lambda1);
  rep.add("objective", fp.objective);
  rep.add("c1", effective_capacity(fp.rates.r1, wt, sc.qos.theta1, sc.params));
  rep.add("c2", effective_capacity(fp.rates.r2, wt, sc.qos.theta2, sc.params));
  rep.add("epsilon", fp.state.epsilon);
  rep.add("psi1", fp.state.psi1);
  rep.add("psi2", fp.state.psi2);
  rep.add("budget", budget);
  rep.add("rounds", fp.rounds);
  rep.add("joint_evals", fp.joint_evals);
  rep.add("tags_Z", n_z);
  rep.add("tags_Zc", static_cast<int>(ens.samples.size()) - n_z);
  rep.add("ergodic_fallback", fp.ergodic_fallback ? 1 : 0);
  rep.add("oscillated", fp.oscillated ? 1 : 0);
  add_warnings(rep, "solver", fp.warnings);
}

void cmd_validate(const Scenario& sc, Report& rep) {
  const Clock::time_point t0 = Clock::now();
  const FadingEnsemble ens = build_ensemble(sc);
  const IntegrationSpec quad = resolve_quad(sc);
  FixedPointResult fp = solve_single_weight(sc, ens, quad);
  rep.add("solve_ms", ms_since(t0));

  std::vector<double> wt;
  for (const ChannelSample& s : ens.samples) wt.push_back(s.weight);
  const bool first = sc.validate_user == 1;
  const std::vector<double>& rates = first ? fp.rates.r1 : fp.rates.r2;
  const double theta = first ? sc.qos.theta1 : sc.qos.theta2;
  const double cap = effective_capacity(rates, wt, theta, sc.params);
  const double arrival = sc.arrival_scale * cap;

  const Clock::time_point t1 = Clock::now();
  // decorrelate the service redraws from the ensemble stream
  QueueTrace qt = simulate_queue(rates, wt, arrival, sc.frames, sc.params,
                                 sc.seed + 0x9e3779b97f4a7c15ull);
  rep.add("simulate_ms", ms_since(t1));

  TailHistogram th = tail_histogram(qt, 40);
  std::ofstream csv = open_out(sc, "tail.csv");
  csv << header_line(sc) << "\n";
  csv << "q,ln_prob\n";
  for (std::size_t i = 0; i < th.q.size(); ++i)
    csv << fmt_double(th.q[i]) << "," << fmt_double(th.ln_prob[i]) << "\n";

  rep.add("user", sc.validate_user);
  rep.add("effective_capacity", cap);
  rep.add("arrival", arrival);
  rep.add("arrival_scale", sc.arrival_scale);
  rep.add("frames", sc.frames);
  rep.add("theta_target", theta);
  rep.add("unstable", qt.unstable ? 1 : 0);
  if (!qt.warning.empty()) rep.add("queue_warning", qt.warning);
  add_warnings(rep, "solver", fp.warnings);

  DecayEstimate est = estimate_decay(qt);  // estimation_error propagates
  rep.add("theta_hat", est.theta_hat);
  rep.add("theta_std_error", est.std_error);
  rep.add("fit_points", est.n_points);
  rep.add("theta_ratio", theta > 0.0 ? est.theta_hat / theta : 0.0);
}

}  // namespace

int category_exit_code(const std::string& category) {
  if (category.empty()) return 0;
  if (category == "parse") return 2;
  if (category == "convergence") return 3;
  if (category == "numeric") return 4;
  return 1;  // io / unexpected
}

RunOutcome run_command(const Scenario& sc, const std::string& command) {
  RunOutcome out;
  Report rep;
  rep.add("command", command);
  rep.add("scenario", sc.label);
  rep.add("fingerprint", hex16(sc.fingerprint));
  rep.add("samples", sc.samples);
  rep.add("seed", static_cast<long>(sc.seed));
  rep.add("quad_nodes", resolve_quad(sc).nodes);
  const Clock::time_point t0 = Clock::now();
  try {
    if (command == "region") cmd_region(sc, rep);
    else if (command == "boundary") cmd_boundary(sc, rep);
    else if (command == "policy") cmd_policy(sc, rep);
    else if (command == "validate") cmd_validate(sc, rep);
    else throw parse_error("unknown command '" + command +
                           "' (region boundary validate policy)");
    rep.add("total_ms", ms_since(t0));
    rep.write(sc, "report.txt");
  } catch (const std::exception& e) {
    if (dynamic_cast<const parse_error*>(&e) ||
        dynamic_cast<const std::invalid_argument*>(&e))
      out.category = "parse";
    else if (dynamic_cast<const convergence_error*>(&e))
      out.category = "convergence";
    else if (dynamic_cast<const numeric_error*>(&e) ||
             dynamic_cast<const estimation_error*>(&e))
      out.category = "numeric";
    else
      out.category = "io";
    out.exit_code = category_exit_code(out.category);
    out.message = "category=" + out.category + " command=" + command +
                  " message=" + e.what();
    rep.add("error_category", out.category);
    rep.add("error_message", e.what());
    try {
      rep.write(sc, "report.txt");
    } catch (...) {
      // reporting must not mask the original failure
    }
  }
  return out;
}

}  // namespace macap
