// Command-line driver: run scenarios, diagnose snapshots, print symbolic
// derivations, and check mesh invariants.
//
// Exit codes: 0 success, 2 configuration/usage error, 3 input/output error,
// 4 runtime failure. Every failure writes one JSON error object to stderr:
//   {"error": {"code": "...", "message": "...", "details": [...]}}

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "a2flow/config.hpp"
#include "a2flow/curvature.hpp"
#include "a2flow/diagnostics.hpp"
#include "a2flow/flow.hpp"
#include "a2flow/gradient.hpp"
#include "a2flow/mesh.hpp"
#include "a2flow/pqcalc.hpp"
#include "a2flow/threads.hpp"

using nlohmann::json;
using namespace a2flow;

namespace {

[[noreturn]] void fail(int code, const std::string& kind, const std::string& message,
                       const std::vector<std::string>& details = {}) {
  json err = {{"error", {{"code", kind}, {"message", message}, {"details", details}}}};
  std::cerr << err.dump(2) << "\n";
  std::exit(code);
}

Immersion load_mesh_file(const AmbientManifold& ambient, const std::string& path) {
  std::filesystem::path p(path);
  if (p.extension() == ".ply") return load_ply(ambient, path);
  if (p.extension() == ".obj") return load_obj(ambient, path);
  throw MeshError("unsupported mesh file extension: " + path + " (use .obj or .ply)");
}

json lifespan_json(const LifespanReport& r) {
  return {{"rho", r.rho},
          {"eps0", r.eps0},
          {"C", r.C},
          {"chi0", r.chi0},
          {"grad_riemann_inf", r.grad_riemann_inf},
          {"area0", r.area0},
          {"W0", r.W0},
          {"denominator", r.denominator},
          {"T_low", std::isinf(r.T_low) ? json("inf") : json(r.T_low)},
          {"clamped", r.clamped},
          {"observed_T", r.observed_T}};
}

// Shared snapshot statistics for `run` (final state) and `diagnose`.
json mesh_stats_json(const Immersion& m) {
  CurvatureField cf = CurvatureField::compute(m);
  json out;
  out["vertices"] = m.c().vertex_count();
  out["faces"] = m.c().face_count();
  out["euler_characteristic"] = m.c().euler_characteristic();
  out["energy"] = energy_E(cf);
  out["willmore"] = energy_W(cf);
  out["area"] = cf.total_area;
  out["gauss_bonnet_residual"] = gauss_bonnet_residual(m);
  out["gauss_equation_deficit"] = gauss_equation_deficit(m);
  out["asphericity"] = asphericity(m);
  out["shape_gradient_max"] = shape_gradient_max(m);
  double mx = 0.0;
  for (double a : cf.abs_A2) mx = std::max(mx, a);
  out["max_abs_A2"] = mx;
  return out;
}

int run_scenario(const std::string& cfg_path, const std::string& output_override) {
  ConfigParse pr = parse_config(cfg_path);
  if (!pr.ok()) fail(2, "config-error", "invalid configuration", pr.errors);
  ScenarioConfig cfg = pr.config;

  if (!output_override.empty()) cfg.output_dir = output_override;
  if (const char* env = std::getenv("A2FLOW_OUTPUT_DIR"); env && *env && output_override.empty())
    cfg.output_dir = env;

  AmbientManifold ambient = build_ambient(cfg);
  Immersion f0 = build_initial_mesh(cfg, ambient);

  RunHooks hooks;
  hooks.cadence = cfg.cadence;
  hooks.chi_radii = cfg.chi_radii;
  hooks.chi_options.grid_resolution = cfg.grid_resolution;
  hooks.concentrated_gate = cfg.eps1;
  hooks.output_dir = cfg.output_dir;

  LifespanReport lr = lifespan_bound(f0, cfg.lifespan_rho, std::sqrt(cfg.eps0_sq),
                                     cfg.lifespan_C, hooks.chi_options);

  FlowState fs = run_flow(std::move(f0), cfg.policy, hooks);
  lr.observed_T = fs.t;

  double drop = fs.history.front().E - fs.history.back().E;
  double ledger = 0.0;
  for (size_t i = 1; i < fs.history.size(); ++i) ledger += fs.history[i].dissipation;

  json report;
  report["scenario"] = std::filesystem::path(cfg_path).filename().string();
  report["status"] = to_string(fs.status);
  report["steps"] = fs.step;
  report["t_final"] = fs.t;
  report["weak_norm_final"] = fs.last_weak_norm;
  report["max_gauss_bonnet_residual"] = fs.max_gb_residual;
  report["energy_initial"] = fs.history.front().E;
  report["energy_final"] = fs.history.back().E;
  report["dissipation"] = {{"drop", drop},
                           {"ledger", ledger},
                           {"ratio", ledger > 0.0 ? drop / ledger : 1.0}};
  report["area_growth_max"] = check_area_growth(fs);
  report["final_state"] = mesh_stats_json(fs.mesh);
  report["lifespan"] = lifespan_json(lr);
  try {
    AreaBoundCheck ab = area_bound_check(fs.mesh);
    report["area_bound"] = {{"lhs", ab.lhs}, {"rhs", ab.rhs}, {"pass", ab.pass}};
  } catch (const DiagnosticsError&) {
    // Ambient without a positive curvature floor; the bound does not apply.
  }
  json rows = json::array();
  for (const InteriorRow& r : interior_estimate_monitor(fs.interior_samples))
    rows.push_back({{"s", r.s}, {"max_grad_a", r.max_grad_a}, {"product", r.product}});
  report["interior_monitor"] = rows;

  std::string out = report.dump(2) + "\n";
  std::cout << out;
  if (!cfg.output_dir.empty()) {
    std::ofstream f(std::filesystem::path(cfg.output_dir) / "report.json", std::ios::binary);
    if (!f) fail(3, "io-error", "cannot write report.json under " + cfg.output_dir);
    f << out;
  }
  return 0;
}

int diagnose_snapshot(const std::string& mesh_path, const std::string& cfg_path) {
  ScenarioConfig cfg;
  if (!cfg_path.empty()) {
    ConfigParse pr = parse_config(cfg_path);
    if (!pr.ok()) fail(2, "config-error", "invalid configuration", pr.errors);
    cfg = pr.config;
  }
  AmbientManifold ambient = build_ambient(cfg);
  Immersion m = load_mesh_file(ambient, mesh_path);

  json report;
  report["snapshot"] = std::filesystem::path(mesh_path).filename().string();
  report["ambient"] = cfg.ambient;
  report["stats"] = mesh_stats_json(m);

  ConcentrationOptions copt;
  copt.grid_resolution = cfg.grid_resolution;
  ConcentrationProfile cp = concentration(m, cfg.chi_radii, copt);
  json chi = json::array();
  for (size_t i = 0; i < cp.radii.size(); ++i)
    chi.push_back({{"rho", cp.radii[i]},
                   {"chi", cp.chi[i]},
                   {"center", {cp.center[i][0], cp.center[i][1], cp.center[i][2]}}});
  report["concentration"] = chi;

  LifespanReport lr =
      lifespan_bound(m, cfg.lifespan_rho, std::sqrt(cfg.eps0_sq), cfg.lifespan_C, copt);
  report["lifespan"] = lifespan_json(lr);

  try {
    AreaBoundCheck ab = area_bound_check(m);
    report["area_bound"] = {{"lhs", ab.lhs}, {"rhs", ab.rhs}, {"pass", ab.pass}};
  } catch (const DiagnosticsError&) {
  }
  try {
    EmptyBall eb = find_empty_ball(m);
    report["empty_ball"] = {{"center", {eb.center[0], eb.center[1], eb.center[2]}},
                            {"radius", eb.radius}};
  } catch (const DiagnosticsError&) {
    // Non-euclidean ambient; chart-space ball search does not apply.
  }

  std::cout << report.dump(2) << "\n";
  return 0;
}

int derive_structure(const std::string& target, bool flat) {
  pq::Derivation d;
  if (target == "evolution")
    d = pq::derive_evolution_structure(flat);
  else if (target == "commutator2")
    d = pq::derive_commutator_2(flat);
  else if (target == "commutator4")
    d = pq::derive_commutator_4(flat);
  else
    fail(2, "usage-error",
         "unknown derivation target '" + target +
             "' (expected evolution, commutator2, or commutator4)");
  std::cout << d.render();
  return 0;
}

int check_mesh(const std::string& mesh_path, const std::string& ambient_spec) {
  AmbientManifold ambient = AmbientManifold::parse(ambient_spec);
  Immersion m = load_mesh_file(ambient, mesh_path);

  int failures = 0;
  auto line = [&](bool ok, const std::string& name, const std::string& detail) {
    std::cout << (ok ? "ok   - " : "FAIL - ") << name;
    if (!detail.empty()) std::cout << " (" << detail << ")";
    std::cout << "\n";
    if (!ok) ++failures;
  };

  line(true, "closed oriented surface",
       "chi = " + std::to_string(m.c().euler_characteristic()));

  double gb = gauss_bonnet_residual(m);
  line(gb < 1e-9, "total intrinsic curvature telescopes", "residual " + std::to_string(gb));

  WhiteCheck wc = white_multiple_check(m);
  line(wc.deviation < 0.05, "curvature integral lands on a multiple of 4 pi",
       "multiple " + std::to_string(wc.nearest_multiple) + ", deviation " +
           std::to_string(wc.deviation));

  bool finite = true;
  try {
    CurvatureField cf = CurvatureField::compute(m);
    for (double a : cf.abs_A2) finite = finite && std::isfinite(a);
    for (double h : cf.mean_h) finite = finite && std::isfinite(h);
    line(finite, "curvature field is finite everywhere", "");
    line(cf.total_area > 0.0, "positive total area", "area " + std::to_string(cf.total_area));
  } catch (const std::exception& e) {
    line(false, "curvature field computes", e.what());
  }

  double cz = codazzi_residual(m);
  line(std::isfinite(cz), "shape-tensor derivative antisymmetry is finite",
       "residual " + std::to_string(cz));

  if (failures == 0) {
    std::cout << "all checks passed\n";
    return 0;
  }
  fail(4, "check-failed", std::to_string(failures) + " invariant check(s) failed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"energy descent flows of the total squared second fundamental form"};
  app.require_subcommand(1);

  int threads = 0;
  std::string cfg_path, output_dir, mesh_path, ambient_spec = "euclidean";
  std::string derive_target = "evolution";
  bool flat = false;

  CLI::App* run = app.add_subcommand("run", "execute a scenario config end to end");
  run->add_option("config", cfg_path, "scenario config file")->required();
  run->add_option("--output-dir", output_dir, "override the configured output directory");
  run->add_option("--threads", threads, "cap internal parallelism");

  CLI::App* diag = app.add_subcommand("diagnose", "analyze a mesh snapshot");
  diag->add_option("snapshot", mesh_path, "mesh file (.obj or .ply)")->required();
  diag->add_option("--config", cfg_path, "config supplying ambient, radii, constants");
  diag->add_option("--threads", threads, "cap internal parallelism");

  CLI::App* der = app.add_subcommand("derive", "print a symbolic structure derivation");
  der->add_option("--target", derive_target, "evolution | commutator2 | commutator4");
  der->add_flag("--flat", flat, "flat ambient: curvature classes vanish");

  CLI::App* chk = app.add_subcommand("check", "run the mesh invariant suite");
  chk->add_option("mesh", mesh_path, "mesh file (.obj or .ply)")->required();
  chk->add_option("--ambient", ambient_spec, "ambient spec (default euclidean)");
  chk->add_option("--threads", threads, "cap internal parallelism");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::ostringstream help;
    fail(2, "usage-error", e.what());
  }

  if (threads > 0) set_thread_count(threads);

  try {
    if (run->parsed()) return run_scenario(cfg_path, output_dir);
    if (diag->parsed()) return diagnose_snapshot(mesh_path, cfg_path);
    if (der->parsed()) return derive_structure(derive_target, flat);
    if (chk->parsed()) return check_mesh(mesh_path, ambient_spec);
  } catch (const ConfigError& e) {
    fail(2, "config-error", e.what());
  } catch (const AmbientError& e) {
    fail(2, "config-error", e.what());
  } catch (const MeshError& e) {
    fail(3, "mesh-error", e.what());
  } catch (const DiagnosticsError& e) {
    fail(4, "diagnostics-error", e.what());
  } catch (const FlowError& e) {
    fail(4, "flow-error", e.what());
  } catch (const std::exception& e) {
    fail(4, "runtime-error", e.what());
  }
  return 0;
}
