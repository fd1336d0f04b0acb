#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "a2flow/config.hpp"

using namespace a2flow;

namespace {

bool has_error(const ConfigParse& p, const std::string& needle) {
  for (const auto& e : p.errors)
    if (e.find(needle) != std::string::npos) return true;
  return false;
}

std::string dump_errors(const ConfigParse& p) {
  std::string s;
  for (const auto& e : p.errors) s += e + "\n";
  return s;
}

}  // namespace

TEST_CASE("empty text yields defaults") {
  ConfigParse p = parse_config_text("", "mem");
  REQUIRE_MESSAGE(p.ok(), dump_errors(p));
  CHECK(p.config == ScenarioConfig{});
  CHECK(p.config.ambient == "euclidean");
  CHECK(p.config.mesh == "sphere");
  CHECK(p.config.subdivisions == 3);
  CHECK(p.config.policy.armijo == 0.975);
  CHECK(p.config.chi_radii.size() == 7);
}

TEST_CASE("comments, blank lines, and whitespace are tolerated") {
  ConfigParse p = parse_config_text(
      "# leading comment\n"
      "\n"
      "   radius   =   2.5   \n"
      "\t\n"
      "# trailing comment\n",
      "mem");
  REQUIRE_MESSAGE(p.ok(), dump_errors(p));
  CHECK(p.config.radius == 2.5);
}

TEST_CASE("serialize then parse is the identity") {
  ScenarioConfig c;
  c.ambient = "sphere:r=2";
  c.mesh = "torus";
  c.n_major = 20;
  c.n_minor = 10;
  c.major_radius = 0.3;
  c.minor_radius = 0.1;
  c.perturb = "random";
  c.perturb_amplitude = 0.015625;
  c.seed = 123456789012345ull;
  c.policy.c_cfl = 0.07;
  c.policy.stationarity_factor = 3e-5;
  c.policy.max_steps = 777;
  c.chi_radii = {0.1, 0.2, 0.30000000000000004};
  c.lifespan_rho = 0.125;
  c.output_dir = "out/some dir";
  std::string text = serialize_config(c);
  ConfigParse p = parse_config_text(text, "mem");
  REQUIRE_MESSAGE(p.ok(), dump_errors(p));
  CHECK(p.config == c);
  // Canonical form is a fixed point: re-serializing is byte identical.
  CHECK(serialize_config(p.config) == text);
}

TEST_CASE("doubles survive the round trip exactly") {
  // Values with no short decimal form exercise the shortest-representation
  // printer; equality below is bitwise on the doubles.
  ScenarioConfig c;
  c.radius = 1.0 / 3.0;
  c.center = {0.1 + 0.2, -1e-17, 6.02214076e23};
  c.policy.beta = 0.49999999999999994;
  std::string text = serialize_config(c);
  ConfigParse p = parse_config_text(text, "mem");
  REQUIRE_MESSAGE(p.ok(), dump_errors(p));
  CHECK(p.config.radius == c.radius);
  CHECK(p.config.center[0] == c.center[0]);
  CHECK(p.config.center[1] == c.center[1]);
  CHECK(p.config.center[2] == c.center[2]);
  CHECK(p.config.policy.beta == c.policy.beta);
}

TEST_CASE("every error is collected, each anchored to its line") {
  ConfigParse p = parse_config_text(
      "mesh = dodecahedron\n"      // line 1: bad enum
      "subdivisions = many\n"      // line 2: not an integer
      "radius = -1\n"              // line 3: range
      "beta = 1.5\n"               // line 4: range
      "radius = 2\n"               // line 5: duplicate
      "warp_factor = 9\n"          // line 6: unknown key
      "just some words\n"          // line 7: no '='
      "chi_radii = 0.2 0.1\n",     // line 8: not increasing
      "cfg");
  CHECK(!p.ok());
  CHECK(p.errors.size() == 8);
  CHECK(has_error(p, "cfg:1: key 'mesh' must be one of sphere, torus, flat_subtorus, clifford, obj"));
  CHECK(has_error(p, "cfg:2: key 'subdivisions' expects an integer, got 'many'"));
  CHECK(has_error(p, "cfg:3: key 'radius' must be positive"));
  CHECK(has_error(p, "cfg:4: key 'beta' must be in (0, 1)"));
  CHECK(has_error(p, "cfg:5: duplicate key 'radius' (first at line 3)"));
  CHECK(has_error(p, "cfg:6: unknown key 'warp_factor'"));
  CHECK(has_error(p, "cfg:7: expected 'key = value', got 'just some words'"));
  CHECK(has_error(p, "cfg:8: key 'chi_radii' must be nonempty, positive, strictly increasing"));
}

TEST_CASE("validation names the offending key") {
  auto one_bad = [](const std::string& line, const std::string& needle) {
    ConfigParse p = parse_config_text(line + "\n", "mem");
    CHECK(!p.ok());
    CHECK_MESSAGE(has_error(p, needle), (line + " -> " + dump_errors(p)));
  };
  one_bad("c_cfl = -1", "key 'c_cfl' must be positive");
  one_bad("c_cfl = 0", "key 'c_cfl' must be positive");
  one_bad("armijo = 0", "key 'armijo' must be in (0, 1)");
  one_bad("armijo = 1", "key 'armijo' must be in (0, 1)");
  one_bad("dt_growth = 0.9", "key 'dt_growth' must be at least 1");
  one_bad("max_backtracks = -2", "key 'max_backtracks' must be nonnegative");
  one_bad("stationarity_factor = 0", "key 'stationarity_factor' must be positive");
  one_bad("subdivisions = 9", "key 'subdivisions' must be in [0, 8]");
  one_bad("ambient = hyperbolic:r=1", "key 'ambient' is invalid");
  one_bad("perturb = wobble", "key 'perturb' must be one of none, harmonic, random");
  one_bad("minor_radius = 3", "key 'minor_radius' must be smaller than major_radius");
  one_bad("grid_resolution = 1", "key 'grid_resolution' must be at least 2");
  one_bad("eps1 = 0", "key 'eps1' must be positive");
  one_bad("lifespan_rho = -0.5", "key 'lifespan_rho' must be positive");
  one_bad("output_dir =", "key 'output_dir' must be nonempty");
  one_bad("seed = -3", "key 'seed' expects a nonnegative integer");
  one_bad("eps0_sq = tiny", "key 'eps0_sq' expects a number, got 'tiny'");
  one_bad("chi_radii = 0.1 two 0.3", "key 'chi_radii' expects numbers, got 'two'");
}

TEST_CASE("mesh = obj demands an existing path") {
  ConfigParse p = parse_config_text("mesh = obj\n", "mem");
  CHECK(!p.ok());
  CHECK(has_error(p, "key 'mesh_path' is required when mesh = obj"));

  ConfigParse q = parse_config_text("mesh = obj\nmesh_path = /no/such/file.obj\n", "mem");
  CHECK(!q.ok());
  CHECK(has_error(q, "key 'mesh_path' names a missing file"));
}

TEST_CASE("file parsing reports the path, missing file is a single error") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "a2flow_cfg_test";
  fs::create_directories(dir);
  fs::path file = dir / "bad.cfg";
  {
    std::ofstream out(file);
    out << "radius = nope\n";
  }
  ConfigParse p = parse_config(file.string());
  CHECK(!p.ok());
  CHECK(has_error(p, file.string() + ":1: key 'radius' expects a number"));

  ConfigParse q = parse_config((dir / "absent.cfg").string());
  CHECK(q.errors.size() == 1);
  CHECK(has_error(q, "cannot open config file"));
  fs::remove_all(dir);
}

TEST_CASE("mesh_path appears in canonical form only for obj meshes") {
  ScenarioConfig c;
  CHECK(serialize_config(c).find("mesh_path") == std::string::npos);
  c.mesh = "obj";
  c.mesh_path = "some/mesh.obj";
  CHECK(serialize_config(c).find("mesh_path = some/mesh.obj\n") != std::string::npos);
}

TEST_CASE("ambient and mesh factories honour the config") {
  ScenarioConfig c;
  c.ambient = "torus:L=3";
  c.mesh = "flat_subtorus";
  c.n_u = 8;
  c.n_v = 6;
  AmbientManifold amb = build_ambient(c);
  Immersion m = build_initial_mesh(c, amb);
  CHECK(m.conn->euler_characteristic() == 0);
  CHECK(m.pos.size() == 8 * 6);

  ScenarioConfig s;
  s.subdivisions = 1;
  s.radius = 0.5;
  s.center = {1.0, 2.0, 3.0};
  Immersion sm = build_initial_mesh(s, build_ambient(s));
  CHECK(sm.conn->euler_characteristic() == 2);
  CHECK(sm.pos.size() == 42);
  double cx = 0;
  for (const auto& p : sm.pos) cx += p[0];
  CHECK(cx / double(sm.pos.size()) == doctest::Approx(1.0).epsilon(1e-12));

  // Perturbation dispatch: amplitude zero leaves vertices untouched.
  s.perturb = "harmonic";
  s.perturb_amplitude = 0.0;
  Immersion un = build_initial_mesh(s, build_ambient(s));
  bool same = true;
  for (size_t i = 0; i < un.pos.size(); ++i)
    for (int k = 0; k < 3; ++k) same = same && un.pos[i][k] == sm.pos[i][k];
  CHECK(same);

  s.perturb_amplitude = 0.05;
  Immersion pe = build_initial_mesh(s, build_ambient(s));
  bool moved = false;
  for (size_t i = 0; i < pe.pos.size(); ++i)
    for (int k = 0; k < 3; ++k) moved = moved || pe.pos[i][k] != sm.pos[i][k];
  CHECK(moved);
}
