#include "cli.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "entlab/bridge.hpp"
#include "entlab/constants.hpp"
#include "entlab/convergence.hpp"
#include "entlab/csv.hpp"
#include "entlab/eot.hpp"
#include "entlab/gaussian_oracle.hpp"
#include "entlab/measures.hpp"
#include "entlab/potentials.hpp"
#include "entlab/stability.hpp"

#ifndef ENTLAB_VERSION
#define ENTLAB_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace entlab::cli {

namespace {

json read_json_file(const std::string& path, const std::string& pointer) {
  std::ifstream in(path);
  if (!in) throw SchemaError(pointer, "cannot read file " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(pointer, std::string("invalid JSON: ") + e.what());
  }
}

// Replace {"file": path} measure references by the file contents, then re-validate.
void inline_files(json& doc, const std::string& base) {
  for (const char* key : {"rho", "mu", "nu"}) {
    if (!doc.contains(key) || !doc[key].contains("file")) continue;
    fs::path p = doc[key]["file"].get<std::string>();
    if (p.is_relative()) p = fs::path(base) / p;
    const std::string ptr = std::string("/") + key + "/file";
    if (!fs::exists(p)) throw SchemaError(ptr, "referenced file does not exist: " + p.string());
    doc[key] = read_json_file(p.string(), ptr);
  }
}

DiscreteMeasure discrete(const json& j, const char* what) {
  const Measure m = measure_from_json(j);
  if (!std::holds_alternative<DiscreteMeasure>(m))
    throw InvalidArgument(std::string(what) + ": a discrete measure is required here");
  return std::get<DiscreteMeasure>(m);
}

QuadratureOrders orders_from(const json& doc, QuadratureOrders q) {
  if (!doc.contains("quadrature")) return q;
  const json& j = doc["quadrature"];
  q.legendre = j.value("legendre", q.legendre);
  q.hermite_1d = j.value("hermite_1d", q.hermite_1d);
  q.hermite_2d = j.value("hermite_2d", q.hermite_2d);
  q.prune = j.value("prune", q.prune);
  return q;
}

std::string path_in(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path);
  out << j.dump(2) << "\n";
}

struct KindResult {
  bool pass = true;
  bool diagnostics_ok = true;
};

// ---- solve ----------------------------------------------------------------

KindResult run_solve(const ExperimentConfig& c, const std::string& out, std::ostream& log) {
  const json& d = c.doc;
  const EotProblem p(discrete(d["rho"], "rho"), discrete(d["mu"], "mu"), d["T"].get<double>());
  SinkhornOptions so;
  const json s = d.value("solver", json::object());
  so.tol = s.value("tol", 1e-10);
  so.max_iter = s.value("max_iter", 100000);
  so.record_timing = s.value("timing", false);
  so.record_w2 = p.mu.dim() == 1;
  const SinkhornResult r = sinkhorn_solve(p, so);
  const Plan plan = assemble_plan(p, r.duals);

  CsvTable t({"n", "residual_l1", "w2_wrong_marginal", "wall_ns"});
  for (std::size_t n = 0; n < r.trace.residual.size(); ++n) {
    const double w2 = n < r.trace.w2_wrong.size() ? r.trace.w2_wrong[n] : std::nan("");
    const std::int64_t ns = n < r.trace.wall_ns.size() ? r.trace.wall_ns[n] : 0;
    t.add_row({static_cast<std::int64_t>(n), r.trace.residual[n], w2, ns});
  }
  t.write_file(path_in(out, "trace.csv"));
  write_json(path_in(out, "solution.json"), {{"duals", to_json(r.duals)},
                                             {"plan", to_json(plan)},
                                             {"objective", eot_objective(plan, p)},
                                             {"schrodinger_residual", schrodinger_residual(p, r.duals)},
                                             {"iterations", r.trace.iterations},
                                             {"converged", r.trace.converged}});
  log << "solve: " << r.trace.iterations << " iterations, residual " << format_double(r.trace.residual.back()) << "\n";
  return {r.trace.converged, true};
}

// ---- constants ------------------------------------------------------------

KindResult run_constants(const ExperimentConfig& c, const std::string& out, std::ostream& log) {
  const int dim = c.doc.value("dim", 1);
  json reports = json::array();
  std::string text;
  CsvTable t({"family", "R_or_alpha", "T", "quantity", "closed_form", "quadrature", "rel_err"});
  bool ok = true;
  for (const json& fj : c.doc["families"]) {
    const std::string kind = fj["kind"].get<std::string>();
    const double T = fj["T"].get<double>();
    FamilySpec f;
    if (kind == "compact") {
      if (!fj.contains("R")) throw SchemaError("/families", "compact family needs R");
      f = FamilySpec::compact(fj["R"].get<double>(), T);
    } else {
      if (!fj.contains("alpha")) throw SchemaError("/families", "logconcave family needs alpha");
      f = FamilySpec::logconcave(fj["alpha"].get<double>(), T);
    }
    const ConstantsReport r = make_report(f, dim);
    reports.push_back(to_json(r));
    text += table_report(r) + "\n";
    const std::pair<const char*, std::pair<double, double>> pairs[] = {
        {"C_phi", {r.C_phi, r.C_phi_quadrature}},
        {"I_delta", {r.I_delta, r.I_delta_quadrature}},
        {"I_deltap_delta", {r.I_deltap_delta, r.I_deltap_delta_quadrature}}};
    for (const auto& [name, v] : pairs) {
      const double rel = std::abs(v.first - v.second) / std::max(std::abs(v.first), 1e-300);
      ok = ok && rel <= 1e-10;
      t.add_row({f.name(), f.param, T, std::string(name), v.first, v.second, rel});
    }
  }
  t.write_file(path_in(out, "constants.csv"));
  write_json(path_in(out, "constants.json"), reports);
  std::ofstream(path_in(out, "constants.txt"), std::ios::binary) << text;
  log << text;
  return {ok, true};
}

// ---- stability ------------------------------------------------------------

KindResult run_stability(const ExperimentConfig& c, const RunOptions& ro, std::uint64_t seed, const std::string& out,
                         std::ostream& log) {
  const json& d = c.doc;
  StabilityOptions so;
  so.orders = orders_from(d, so.orders);
  so.seed = seed;
  so.sign_flip = ro.fault_sign_flip;
  const PerturbationMode mode = d.value("mode", std::string("weight")) == "location" ? PerturbationMode::Location
                                                                                    : PerturbationMode::Weight;
  std::vector<StabilityReport> reports;
  int instances = 0;
  if (d.contains("rho")) {
    if (!d.contains("mu") || !d.contains("nu") || !d.contains("T"))
      throw SchemaError("/nu", "a single-instance stability run needs rho, mu, nu and T");
    StabilityInstance inst{"instance", discrete(d["rho"], "rho"), discrete(d["mu"], "mu"), discrete(d["nu"], "nu"),
                           d["T"].get<double>()};
    reports = run_checks(prepare(inst, so, mode), so);
    instances = 1;
  } else {
    CampaignSpec cs;
    cs.seed = seed;
    cs.mode = mode;
    const json cj = d.value("campaign", json::object());
    cs.n_instances = cj.value("n_instances", cs.n_instances);
    if (cj.contains("eps_range")) {
      cs.eps_min = cj["eps_range"][0];
      cs.eps_max = cj["eps_range"][1];
    }
    if (cj.contains("T_range")) {
      cs.T_min = cj["T_range"][0];
      cs.T_max = cj["T_range"][1];
    }
    cs.max_atoms_1d = cj.value("max_atoms_1d", cs.max_atoms_1d);
    cs.max_atoms_2d = cj.value("max_atoms_2d", cs.max_atoms_2d);
    cs.fraction_2d = cj.value("fraction_2d", cs.fraction_2d);
    if (!(cs.eps_min > 0 && cs.eps_max >= cs.eps_min)) throw SchemaError("/campaign/eps_range", "need 0 < lo <= hi");
    if (!(cs.T_min > 0 && cs.T_max >= cs.T_min)) throw SchemaError("/campaign/T_range", "need 0 < lo <= hi");
    CampaignResult r = run_campaign(cs, so, ro.jobs);
    reports = std::move(r.reports);
    instances = r.instances;
  }
  int violations = 0;
  json failed = json::array();
  for (const auto& r : reports)
    if (!r.pass) {
      ++violations;
      if (failed.size() < 50) failed.push_back(to_json(r));
    }
  stability_table(reports).write_file(path_in(out, "stability.csv"));
  write_json(path_in(out, "summary.json"), {{"instances", instances},
                                            {"rows", reports.size()},
                                            {"violations", violations},
                                            {"failed", failed},
                                            {"pass", violations == 0}});
  log << "stability: " << instances << " instances, " << reports.size() << " checks, " << violations
      << " violations\n";
  return {violations == 0, true};
}

// ---- bridge ---------------------------------------------------------------

KindResult run_bridge(const ExperimentConfig& c, std::uint64_t seed, const std::string& out, std::ostream& log) {
  const json& d = c.doc;
  const double T = d["T"].get<double>();
  const DiscreteMeasure rho = discrete(d["rho"], "rho"), mu = discrete(d["mu"], "mu");
  const json b = d.value("bridge", json::object());
  const QuadratureOrders q = orders_from(d, QuadratureOrders{});
  const EotSolution sol = solve(rho, mu, T);

  BridgeSpec spec;
  spec.problem = sol.problem;
  spec.duals = sol.duals;
  spec.direction = b.value("direction", std::string("forward")) == "backward" ? Direction::Backward : Direction::Forward;
  spec.time_grid = b.value("time_grid", std::vector<double>{0.0, 0.25 * T, 0.5 * T, 0.75 * T});
  spec.validate();
  const int n_paths = b.value("n_paths", 10000);
  const double dt = b.value("dt", 1e-3 * T);
  const double alpha = b.value("alpha", 0.01);

  const PathEnsemble e = b.value("method", std::string("exact")) == "em"
                             ? simulate_em(spec, n_paths, dt, seed)
                             : sample_exact(sol.plan, spec.time_grid, n_paths, seed, spec.direction);
  write_ensemble(path_in(out, "ensemble.bin"), e);

  const std::vector<std::string> checks =
      b.value("checks", std::vector<std::string>{"time_reversal", "martingale"});
  std::vector<CheckReport> reps;
  for (std::size_t k = 0; k < checks.size(); ++k) {
    const std::uint64_t s = seed + 1 + k;
    const std::string& name = checks[k];
    if (name == "time_reversal") {
      reps.push_back(time_reversal_check(sol.plan, 0.5 * T, n_paths, s, alpha));
    } else if (name == "em_vs_exact") {
      reps.push_back(em_vs_exact_check(spec, sol.plan, n_paths, dt, s, alpha));
    } else if (name == "martingale") {
      reps.push_back(martingale_check(sol.problem, sol.duals, spec.direction, 0, spec.time_grid, n_paths, s));
    } else if (name == "girsanov") {
      if (!d.contains("nu")) throw SchemaError("/nu", "the girsanov check needs a second target nu");
      const EotSolution sn = solve(rho, discrete(d["nu"], "nu"), T);
      const QuadResult g = girsanov_energy(sol, sn, 1.0, Direction::Backward, q);
      CheckReport r;
      r.name = "girsanov_energy";
      r.statistic = std::abs(g.value - conditional_entropy_term(sol.plan, sn.plan));
      r.threshold = std::max(1e-6, 3.0 * g.error);
      r.pass = r.statistic <= r.threshold;
      r.detail = {{"energy", g.value}, {"quadrature_error", g.error}};
      reps.push_back(r);
    }
  }
  json arr = json::array();
  CsvTable t({"check", "statistic", "threshold", "pass"});
  bool ok = true;
  for (const auto& r : reps) {
    arr.push_back(to_json(r));
    t.add_row({r.name, r.statistic, r.threshold, r.pass});
    ok = ok && r.pass;
    log << "bridge: " << r.name << " statistic " << format_double(r.statistic) << " threshold "
        << format_double(r.threshold) << (r.pass ? " pass" : " FAIL") << "\n";
  }
  t.write_file(path_in(out, "checks.csv"));
  write_json(path_in(out, "checks.json"), arr);
  return {ok, true};
}

// ---- converge -------------------------------------------------------------

KindResult run_converge(const ExperimentConfig& c, const std::string& out, std::ostream& log) {
  const json& d = c.doc;
  const EotProblem p(discrete(d["rho"], "rho"), discrete(d["mu"], "mu"), d["T"].get<double>());
  ConvergenceOptions co;
  const json cj = d.value("converge", json::object());
  co.n_max = cj.value("n_max", co.n_max);
  co.burn_in = cj.value("burn_in", co.burn_in);
  co.floor = cj.value("floor", co.floor);
  const ConvergenceRun run = run_convergence(p, co);
  convergence_table(run).write_file(path_in(out, "converge.csv"));
  if (!std::isfinite(run.tau_hat)) throw DegenerateRun("converge: every post-burn-in entropy vanishes");
  const ConvergenceVerdict v = fit_and_compare(run, run.tau_hat, run.Lambda, co.floor);
  json j = to_json(v);
  j["tau_hat"] = run.tau_hat;
  j["Lambda"] = run.Lambda;
  j["burn_in"] = run.burn_in;
  j["kl_monotone"] = run.kl_monotone;
  write_json(path_in(out, "verdict.json"), j);
  log << "converge: c_hat " << format_double(v.c_hat) << " predicted " << format_double(v.predicted)
      << (v.pass() ? " pass" : " FAIL") << "\n";
  return {v.pass(), run.kl_monotone};
}

// ---- sweep ----------------------------------------------------------------

json sweep_summary(const SweepResult& r, double lo, double hi) {
  const bool slope_ok = r.constant_slope >= lo && r.constant_slope <= hi;
  return {{"prefactor", r.prefactor},         {"constant_slope", r.constant_slope},
          {"measured_slope", r.measured_slope}, {"slope_window", {lo, hi}},
          {"slope_ok", slope_ok},             {"below_envelope", r.below_envelope},
          {"hessian_ok", r.hessian_ok},       {"pass", slope_ok && r.below_envelope && r.hessian_ok}};
}

KindResult run_sweep(const ExperimentConfig& c, const std::string& out, std::ostream& log) {
  const json sj = c.doc["sweep"];
  SweepSpec s;
  const std::vector<double> tr = sj.value("T_range", std::vector<double>{0.25, 4.0});
  if (!(tr[0] > 0 && tr[1] > tr[0])) throw SchemaError("/sweep/T_range", "need 0 < lo < hi");
  s.T_grid = geometric_grid(tr[0], tr[1], sj.value("n_T", 8));
  s.R_grid = sj.value("R_grid", std::vector<double>{1.0, 1.5, 2.0, 3.0});
  s.R = sj.value("R", s.R);
  s.R_grid_T = sj.value("R_grid_T", s.R_grid_T);
  s.alpha = sj.value("alpha", s.alpha);
  s.eps = sj.value("eps", s.eps);
  StabilityOptions so;
  const SweepResult cr = compact_sweep(s, so);
  const SweepResult lr = logconcave_sweep(s);
  SweepResult all = cr;
  all.rows.insert(all.rows.end(), lr.rows.begin(), lr.rows.end());
  sweep_table(all).write_file(path_in(out, "sweep.csv"));
  const json j = {{"compact", sweep_summary(cr, -4.5, -3.0)}, {"logconcave", sweep_summary(lr, -4.5, -3.2)}};
  write_json(path_in(out, "sweep.json"), j);
  log << "sweep: compact slope " << format_double(cr.constant_slope) << ", log-concave slope "
      << format_double(lr.constant_slope) << "\n";
  return {j["compact"]["pass"].get<bool>() && j["logconcave"]["pass"].get<bool>(), true};
}

// ---- selftest -------------------------------------------------------------

KindResult run_selftest(const std::string& out, std::ostream& log) {
  CsvTable t({"example", "value", "expected", "pass"});
  bool ok = true;
  auto expect = [&](const std::string& name, double value, double expected, double tol) {
    const bool p = std::abs(value - expected) <= tol;
    ok = ok && p;
    t.add_row({name, value, expected, p});
  };
  auto m1 = [](std::vector<double> a, std::vector<double> w) {
    Eigen::MatrixXd x(1, a.size());
    for (std::size_t i = 0; i < a.size(); ++i) x(0, i) = a[i];
    return DiscreteMeasure(x, Eigen::Map<Eigen::VectorXd>(w.data(), w.size()));
  };
  expect("contraction_tau_lambda_equals_T", predicted_contraction(1.0, 1.0, 1.0), 0.5, 1e-15);
  expect("contraction_tau2_lambda4_T1", predicted_contraction(1.0, 2.0, 4.0), 8.0 / 9.0, 1e-15);
  {
    const EotSolution s = solve(m1({0.3}, {1.0}), m1({-1.2}, {1.0}), 1.0);
    expect("two_diracs_plan_mass", s.plan.weights(0, 0), 1.0, 1e-15);
  }
  {
    const DiscreteMeasure a = m1({-1.0, 0.5, 2.0}, {0.2, 0.3, 0.5});
    expect("w2_self_distance", wasserstein2(a, a), 0.0, 1e-15);
    expect("entropy_self", relative_entropy(a, a), 0.0, 1e-15);
    expect("w2_translation", wasserstein2(a, translate(a, Eigen::VectorXd::Constant(1, 0.7))), 0.7, 1e-12);
  }
  expect("c_phi_compact_R2_T1", C_phi(FamilySpec::compact(2.0, 1.0)), 8.0, 1e-12);
  expect("c_phi_logconcave_alpha05_T1", C_phi(FamilySpec::logconcave(0.5, 1.0)), 2.0, 1e-12);
  expect("semiconcavity_compact_R3_T05", semiconcavity(FamilySpec::compact(3.0, 0.5)), 18.0, 1e-12);
  {
    const GaussianMeasure g(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1) * 2.0);
    const GaussianEotSolution s = solve_gaussian(g, g, 1.0);
    expect("gaussian_oracle_symmetric", s.p_phi, s.p_psi, 1e-12);
    expect("backprop_curvature_at_T", backprop_curvature(0.5, 1.0, 1.0), 0.5, 1e-15);
  }
  expect("hs_norm_identity_2d", hs_norm(Mat::Identity(2, 2)), std::sqrt(2.0), 1e-15);
  t.write_file(path_in(out, "selftest.csv"));
  log << "selftest: " << t.rows() << " examples" << (ok ? ", all pass" : ", FAILURES") << "\n";
  return {ok, true};
}

std::string versions_compiler() {
#ifdef __VERSION__
  return __VERSION__;
#else
  return "unknown";
#endif
}

// ---- plotdata -------------------------------------------------------------

double cell(const CsvData& d, std::size_t r, const std::string& col) {
  const int k = d.column(col);
  if (k < 0) throw MissingArtifact("plotdata: column " + col + " missing");
  return std::strtod(d.rows[r][k].c_str(), nullptr);
}
std::string text(const CsvData& d, std::size_t r, const std::string& col) {
  const int k = d.column(col);
  if (k < 0) throw MissingArtifact("plotdata: column " + col + " missing");
  return d.rows[r][k];
}

}  // namespace

std::string config_hash(const json& doc) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : doc.dump()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig parse_config_json(const json& input, const std::string& base_dir) {
  std::vector<SchemaViolation> v = validate(config_schema(), input);
  if (!v.empty()) throw SchemaError(std::move(v));
  ExperimentConfig c;
  c.doc = input;
  c.base_dir = base_dir;
  inline_files(c.doc, base_dir);
  v = validate(config_schema(), c.doc);
  if (!v.empty()) throw SchemaError(std::move(v));
  c.kind = c.doc["kind"].get<std::string>();
  if (c.doc.contains("seed")) c.seed = c.doc["seed"].get<std::uint64_t>();
  return c;
}

ExperimentConfig parse_config(const std::string& path) {
  if (!fs::exists(path)) throw SchemaError("", "config file not found: " + path);
  const json doc = read_json_file(path, "");
  return parse_config_json(doc, fs::path(path).parent_path().string());
}

RunOutcome dispatch(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  std::string out = opt.out_dir;
  if (out.empty()) {
    const char* env = std::getenv("ENTLAB_OUT");
    if (env && *env) out = env;
    else out = cfg.doc.value("output", std::string("entlab_out"));
  }
  fs::create_directories(out);
  const std::optional<std::uint64_t> seed = opt.seed ? opt.seed : cfg.seed;
  if ((cfg.kind == "bridge" || cfg.kind == "stability") && !seed)
    throw SchemaError("/seed", "required field is missing");
  const std::uint64_t s = seed.value_or(0);

  KindResult r;
  if (cfg.kind == "solve") r = run_solve(cfg, out, log);
  else if (cfg.kind == "constants") r = run_constants(cfg, out, log);
  else if (cfg.kind == "stability") r = run_stability(cfg, opt, s, out, log);
  else if (cfg.kind == "bridge") r = run_bridge(cfg, s, out, log);
  else if (cfg.kind == "converge") r = run_converge(cfg, out, log);
  else if (cfg.kind == "sweep") r = run_sweep(cfg, out, log);
  else r = run_selftest(out, log);

  RunOutcome o;
  o.out_dir = out;
  o.diagnostics_ok = r.diagnostics_ok;
  o.pass = r.pass && (!opt.strict || r.diagnostics_ok);
  emit_plotdata(out);

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json versions = {{"entlab", ENTLAB_VERSION},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                   {"compiler", versions_compiler()}};
  write_json(path_in(out, "manifest.json"), {{"kind", cfg.kind},
                                             {"config_hash", config_hash(cfg.doc)},
                                             {"seed", seed ? json(*seed) : json(nullptr)},
                                             {"versions", versions},
                                             {"wall_time_s", wall},
                                             {"pass", o.pass},
                                             {"diagnostics_ok", o.diagnostics_ok}});
  return o;
}

std::size_t emit_plotdata(const std::string& dir) {
  if (!fs::is_directory(dir)) throw MissingArtifact("plotdata: no run directory " + dir);
  CsvTable t({"series", "x", "y"});
  auto has = [&](const char* f) { return fs::exists(fs::path(dir) / f); };
  bool any = false;

  if (has("converge.csv")) {
    any = true;
    const CsvData d = read_csv(path_in(dir, "converge.csv"));
    for (const char* s : {"plan_kl", "grad_err_sq", "hess_err_l1"})
      for (std::size_t r = 0; r < d.rows.size(); ++r) t.add_row({std::string(s), cell(d, r, "n"), cell(d, r, s)});
    // predicted envelope anchored at the burn-in iterate
    const std::size_t anchor = std::min<std::size_t>(2, d.rows.empty() ? 0 : d.rows.size() - 1);
    for (std::size_t r = anchor; r < d.rows.size(); ++r) {
      const double f = cell(d, r, "predicted_factor"), n = cell(d, r, "n"), n0 = cell(d, anchor, "n");
      t.add_row({std::string("bound"), n, cell(d, anchor, "plan_kl") * std::pow(f, n - n0)});
    }
  }
  if (has("sweep.csv")) {
    any = true;
    const CsvData d = read_csv(path_in(dir, "sweep.csv"));
    for (std::size_t r = 0; r < d.rows.size(); ++r) {
      const std::string key = text(d, r, "family") + (text(d, r, "grid") == "R" ? ":vs_R:" : ":vs_T:");
      const double x = text(d, r, "grid") == "R" ? cell(d, r, "R_or_alpha") : cell(d, r, "T");
      for (const char* s : {"grad_ratio", "grad_bound", "grad_envelope", "hess_lhs", "hess_bound"})
        t.add_row({key + s, x, cell(d, r, s)});
    }
  }
  if (has("stability.csv")) {
    any = true;
    const CsvData d = read_csv(path_in(dir, "stability.csv"));
    for (std::size_t r = 0; r < d.rows.size(); ++r) {
      const std::string c = text(d, r, "check");
      t.add_row({c + ":lhs", cell(d, r, "w2"), cell(d, r, "lhs")});
      t.add_row({c + ":bound", cell(d, r, "w2"), cell(d, r, "rhs")});
    }
  }
  if (has("trace.csv")) {
    any = true;
    const CsvData d = read_csv(path_in(dir, "trace.csv"));
    for (std::size_t r = 0; r < d.rows.size(); ++r) {
      t.add_row({std::string("residual_l1"), cell(d, r, "n"), cell(d, r, "residual_l1")});
      t.add_row({std::string("w2_wrong_marginal"), cell(d, r, "n"), cell(d, r, "w2_wrong_marginal")});
    }
  }
  if (has("checks.csv")) {
    any = true;
    const CsvData d = read_csv(path_in(dir, "checks.csv"));
    for (std::size_t r = 0; r < d.rows.size(); ++r) {
      t.add_row({text(d, r, "check") + ":statistic", static_cast<double>(r), cell(d, r, "statistic")});
      t.add_row({text(d, r, "check") + ":bound", static_cast<double>(r), cell(d, r, "threshold")});
    }
  }
  if (has("constants.csv")) {
    any = true;
    const CsvData d = read_csv(path_in(dir, "constants.csv"));
    for (std::size_t r = 0; r < d.rows.size(); ++r)
      t.add_row({text(d, r, "family") + ":" + text(d, r, "quantity"), cell(d, r, "T"), cell(d, r, "closed_form")});
  }
  if (has("selftest.csv")) {
    any = true;
    const CsvData d = read_csv(path_in(dir, "selftest.csv"));
    for (std::size_t r = 0; r < d.rows.size(); ++r)
      t.add_row({text(d, r, "example"), cell(d, r, "expected"), cell(d, r, "value")});
  }
  if (!any) throw MissingArtifact("plotdata: no run artifacts in " + dir);
  t.write_file(path_in(dir, "plotdata.csv"));
  return t.rows();
}

int run_main(int argc, char** argv) {
  CLI::App app{"entlab: entropic optimal transport stability laboratory"};
  std::string config, out, plot_dir;
  std::uint64_t seed = 0;
  int jobs = 1;
  bool strict = false;
  auto* cfg_opt = app.add_option("--config", config, "experiment config (JSON)");
  app.add_option("--out", out, "output directory (default: $ENTLAB_OUT)");
  auto* seed_opt = app.add_option("--seed", seed, "seed, overrides the config");
  app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--strict", strict, "treat monitored diagnostics as failures");
  auto* plot_opt = app.add_option("--plotdata", plot_dir, "rebuild plotdata.csv for an existing run directory");
  cfg_opt->excludes(plot_opt);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    if (!plot_dir.empty()) {
      const std::size_t rows = emit_plotdata(plot_dir);
      std::cout << "plotdata: " << rows << " rows\n";
      return 0;
    }
    if (config.empty()) {
      std::cerr << "entlab: --config is required\n";
      return 2;
    }
    const ExperimentConfig cfg = parse_config(config);
    RunOptions ro;
    ro.out_dir = out;
    if (*seed_opt) ro.seed = seed;
    ro.jobs = jobs;
    ro.strict = strict;
    const char* fault = std::getenv("ENTLAB_FAULT");
    ro.fault_sign_flip = fault && std::string(fault) == "sign_flip";
    const RunOutcome o = dispatch(cfg, ro, std::cout);
    std::cout << (o.pass ? "PASS" : "FAIL") << " (" << o.out_dir << ")\n";
    return o.exit_code();
  } catch (const SchemaError& e) {
    std::cerr << e.to_json().dump(2) << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "entlab: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "entlab: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace entlab::cli
