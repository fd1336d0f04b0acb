#include "a2flow/config.hpp"

#include <cctype>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace a2flow {

namespace {

// Shortest decimal rendering that parses back to the same double.
std::string fmt_double(double v) {
  char buf[64];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  return buf;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

struct RawEntry {
  std::string value;
  int line = 0;
  bool used = false;
};

struct Parser {
  std::string label;
  std::map<std::string, RawEntry> raw;
  std::vector<std::string> errors;

  void fail(int line, const std::string& msg) {
    errors.push_back(label + ":" + std::to_string(line) + ": " + msg);
  }
  void fail(const std::string& msg) { errors.push_back(label + ": " + msg); }

  RawEntry* find(const std::string& key) {
    auto it = raw.find(key);
    if (it == raw.end()) return nullptr;
    it->second.used = true;
    return &it->second;
  }

  void get(const std::string& key, std::string& out) {
    if (RawEntry* e = find(key)) out = e->value;
  }

  void get(const std::string& key, double& out) {
    RawEntry* e = find(key);
    if (!e) return;
    char* end = nullptr;
    errno = 0;
    double v = std::strtod(e->value.c_str(), &end);
    if (errno != 0 || end == e->value.c_str() || *end != '\0')
      fail(e->line, "key '" + key + "' expects a number, got '" + e->value + "'");
    else
      out = v;
  }

  void get(const std::string& key, int& out) {
    RawEntry* e = find(key);
    if (!e) return;
    char* end = nullptr;
    errno = 0;
    long v = std::strtol(e->value.c_str(), &end, 10);
    if (errno != 0 || end == e->value.c_str() || *end != '\0')
      fail(e->line, "key '" + key + "' expects an integer, got '" + e->value + "'");
    else
      out = static_cast<int>(v);
  }

  void get(const std::string& key, uint64_t& out) {
    RawEntry* e = find(key);
    if (!e) return;
    char* end = nullptr;
    errno = 0;
    unsigned long long v = std::strtoull(e->value.c_str(), &end, 10);
    if (errno != 0 || end == e->value.c_str() || *end != '\0' || e->value[0] == '-')
      fail(e->line, "key '" + key + "' expects a nonnegative integer, got '" + e->value + "'");
    else
      out = v;
  }

  void get(const std::string& key, std::vector<double>& out) {
    RawEntry* e = find(key);
    if (!e) return;
    std::vector<double> vals;
    std::istringstream is(e->value);
    std::string tok;
    bool bad = false;
    while (is >> tok) {
      char* end = nullptr;
      errno = 0;
      double v = std::strtod(tok.c_str(), &end);
      if (errno != 0 || end == tok.c_str() || *end != '\0') {
        fail(e->line, "key '" + key + "' expects numbers, got '" + tok + "'");
        bad = true;
        break;
      }
      vals.push_back(v);
    }
    if (!bad) out = std::move(vals);
  }

  // Range guards; message names the key.
  void require(bool cond, const std::string& key, const std::string& what) {
    if (cond) return;
    auto it = raw.find(key);
    if (it != raw.end())
      fail(it->second.line, "key '" + key + "' " + what);
    else
      fail("key '" + key + "' " + what);
  }
};

const char* const kMeshKinds[] = {"sphere", "torus", "flat_subtorus", "clifford", "obj"};
const char* const kPerturbKinds[] = {"none", "harmonic", "random"};

template <size_t N>
bool oneof(const std::string& v, const char* const (&set)[N]) {
  for (const char* s : set)
    if (v == s) return true;
  return false;
}

}  // namespace

bool ScenarioConfig::operator==(const ScenarioConfig& o) const {
  auto pol = [](const StepPolicy& p) {
    return std::tuple(p.c_cfl, p.beta, p.max_backtracks, p.dt_growth, p.armijo,
                      p.stationarity_factor, p.max_steps, p.remesh_cadence);
  };
  bool center_eq =
      center[0] == o.center[0] && center[1] == o.center[1] && center[2] == o.center[2];
  return ambient == o.ambient && mesh == o.mesh && mesh_path == o.mesh_path &&
         subdivisions == o.subdivisions && radius == o.radius && center_eq &&
         n_major == o.n_major && n_minor == o.n_minor && major_radius == o.major_radius &&
         minor_radius == o.minor_radius && n_u == o.n_u && n_v == o.n_v && height == o.height &&
         perturb == o.perturb && perturb_amplitude == o.perturb_amplitude && seed == o.seed &&
         pol(policy) == pol(o.policy) && cadence == o.cadence && chi_radii == o.chi_radii &&
         grid_resolution == o.grid_resolution && eps1 == o.eps1 && eps0_sq == o.eps0_sq &&
         lifespan_C == o.lifespan_C && lifespan_rho == o.lifespan_rho &&
         output_dir == o.output_dir;
}

ConfigParse parse_config_text(const std::string& text, const std::string& label) {
  Parser p;
  p.label = label;

  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    size_t eq = s.find('=');
    if (eq == std::string::npos) {
      p.fail(lineno, "expected 'key = value', got '" + s + "'");
      continue;
    }
    std::string key = trim(s.substr(0, eq));
    std::string val = trim(s.substr(eq + 1));
    if (key.empty()) {
      p.fail(lineno, "empty key");
      continue;
    }
    if (p.raw.count(key)) {
      p.fail(lineno, "duplicate key '" + key + "' (first at line " +
                         std::to_string(p.raw[key].line) + ")");
      continue;
    }
    p.raw[key] = RawEntry{val, lineno, false};
  }

  ConfigParse out;
  ScenarioConfig& c = out.config;

  p.get("ambient", c.ambient);
  p.get("mesh", c.mesh);
  p.get("mesh_path", c.mesh_path);
  p.get("subdivisions", c.subdivisions);
  p.get("radius", c.radius);
  p.get("center_x", c.center[0]);
  p.get("center_y", c.center[1]);
  p.get("center_z", c.center[2]);
  p.get("n_major", c.n_major);
  p.get("n_minor", c.n_minor);
  p.get("major_radius", c.major_radius);
  p.get("minor_radius", c.minor_radius);
  p.get("n_u", c.n_u);
  p.get("n_v", c.n_v);
  p.get("height", c.height);
  p.get("perturb", c.perturb);
  p.get("perturb_amplitude", c.perturb_amplitude);
  p.get("seed", c.seed);
  p.get("c_cfl", c.policy.c_cfl);
  p.get("beta", c.policy.beta);
  p.get("max_backtracks", c.policy.max_backtracks);
  p.get("dt_growth", c.policy.dt_growth);
  p.get("armijo", c.policy.armijo);
  p.get("stationarity_factor", c.policy.stationarity_factor);
  p.get("max_steps", c.policy.max_steps);
  p.get("remesh_cadence", c.policy.remesh_cadence);
  p.get("cadence", c.cadence);
  p.get("chi_radii", c.chi_radii);
  p.get("grid_resolution", c.grid_resolution);
  p.get("eps1", c.eps1);
  p.get("eps0_sq", c.eps0_sq);
  p.get("lifespan_C", c.lifespan_C);
  p.get("lifespan_rho", c.lifespan_rho);
  p.get("output_dir", c.output_dir);

  for (const auto& [key, entry] : p.raw)
    if (!entry.used) p.fail(entry.line, "unknown key '" + key + "'");

  // Semantic validation; every failed rule is reported.
  try {
    AmbientManifold::parse(c.ambient);
  } catch (const std::exception& e) {
    p.require(false, "ambient", std::string("is invalid: ") + e.what());
  }
  p.require(oneof(c.mesh, kMeshKinds), "mesh",
            "must be one of sphere, torus, flat_subtorus, clifford, obj");
  if (c.mesh == "obj") {
    p.require(!c.mesh_path.empty(), "mesh_path", "is required when mesh = obj");
    if (!c.mesh_path.empty())
      p.require(std::filesystem::exists(c.mesh_path), "mesh_path",
                "names a missing file '" + c.mesh_path + "'");
  }
  p.require(c.subdivisions >= 0 && c.subdivisions <= 8, "subdivisions", "must be in [0, 8]");
  p.require(c.radius > 0.0, "radius", "must be positive");
  p.require(c.n_major >= 3 && c.n_minor >= 3, "n_major", "and n_minor must be at least 3");
  p.require(c.major_radius > 0.0 && c.minor_radius > 0.0, "major_radius",
            "and minor_radius must be positive");
  p.require(c.major_radius > c.minor_radius, "minor_radius",
            "must be smaller than major_radius");
  p.require(c.n_u >= 3 && c.n_v >= 3, "n_u", "and n_v must be at least 3");
  p.require(oneof(c.perturb, kPerturbKinds), "perturb",
            "must be one of none, harmonic, random");
  p.require(c.perturb_amplitude >= 0.0, "perturb_amplitude", "must be nonnegative");
  p.require(c.policy.c_cfl > 0.0, "c_cfl", "must be positive");
  p.require(c.policy.beta > 0.0 && c.policy.beta < 1.0, "beta", "must be in (0, 1)");
  p.require(c.policy.max_backtracks >= 0, "max_backtracks", "must be nonnegative");
  p.require(c.policy.dt_growth >= 1.0, "dt_growth", "must be at least 1");
  p.require(c.policy.armijo > 0.0 && c.policy.armijo < 1.0, "armijo", "must be in (0, 1)");
  p.require(c.policy.stationarity_factor > 0.0, "stationarity_factor", "must be positive");
  p.require(c.policy.max_steps >= 0, "max_steps", "must be nonnegative");
  p.require(c.policy.remesh_cadence >= 0, "remesh_cadence", "must be nonnegative");
  p.require(c.cadence >= 0, "cadence", "must be nonnegative");
  bool radii_ok = !c.chi_radii.empty() && c.chi_radii.front() > 0.0;
  for (size_t i = 1; i < c.chi_radii.size(); ++i)
    radii_ok = radii_ok && c.chi_radii[i] > c.chi_radii[i - 1];
  p.require(radii_ok, "chi_radii", "must be nonempty, positive, strictly increasing");
  p.require(c.grid_resolution >= 2, "grid_resolution", "must be at least 2");
  p.require(c.eps1 > 0.0, "eps1", "must be positive");
  p.require(c.eps0_sq > 0.0, "eps0_sq", "must be positive");
  p.require(c.lifespan_C > 0.0, "lifespan_C", "must be positive");
  p.require(c.lifespan_rho > 0.0, "lifespan_rho", "must be positive");
  p.require(!c.output_dir.empty(), "output_dir", "must be nonempty");

  out.errors = std::move(p.errors);
  return out;
}

ConfigParse parse_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    ConfigParse out;
    out.errors.push_back(path + ": cannot open config file");
    return out;
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

std::string serialize_config(const ScenarioConfig& c) {
  std::ostringstream os;
  os << "# scenario configuration (canonical form)\n";
  os << "ambient = " << c.ambient << "\n";
  os << "mesh = " << c.mesh << "\n";
  if (!c.mesh_path.empty()) os << "mesh_path = " << c.mesh_path << "\n";
  os << "subdivisions = " << c.subdivisions << "\n";
  os << "radius = " << fmt_double(c.radius) << "\n";
  os << "center_x = " << fmt_double(c.center[0]) << "\n";
  os << "center_y = " << fmt_double(c.center[1]) << "\n";
  os << "center_z = " << fmt_double(c.center[2]) << "\n";
  os << "n_major = " << c.n_major << "\n";
  os << "n_minor = " << c.n_minor << "\n";
  os << "major_radius = " << fmt_double(c.major_radius) << "\n";
  os << "minor_radius = " << fmt_double(c.minor_radius) << "\n";
  os << "n_u = " << c.n_u << "\n";
  os << "n_v = " << c.n_v << "\n";
  os << "height = " << fmt_double(c.height) << "\n";
  os << "perturb = " << c.perturb << "\n";
  os << "perturb_amplitude = " << fmt_double(c.perturb_amplitude) << "\n";
  os << "seed = " << c.seed << "\n";
  os << "c_cfl = " << fmt_double(c.policy.c_cfl) << "\n";
  os << "beta = " << fmt_double(c.policy.beta) << "\n";
  os << "max_backtracks = " << c.policy.max_backtracks << "\n";
  os << "dt_growth = " << fmt_double(c.policy.dt_growth) << "\n";
  os << "armijo = " << fmt_double(c.policy.armijo) << "\n";
  os << "stationarity_factor = " << fmt_double(c.policy.stationarity_factor) << "\n";
  os << "max_steps = " << c.policy.max_steps << "\n";
  os << "remesh_cadence = " << c.policy.remesh_cadence << "\n";
  os << "cadence = " << c.cadence << "\n";
  os << "chi_radii =";
  for (double r : c.chi_radii) os << " " << fmt_double(r);
  os << "\n";
  os << "grid_resolution = " << c.grid_resolution << "\n";
  os << "eps1 = " << fmt_double(c.eps1) << "\n";
  os << "eps0_sq = " << fmt_double(c.eps0_sq) << "\n";
  os << "lifespan_C = " << fmt_double(c.lifespan_C) << "\n";
  os << "lifespan_rho = " << fmt_double(c.lifespan_rho) << "\n";
  os << "output_dir = " << c.output_dir << "\n";
  return os.str();
}

AmbientManifold build_ambient(const ScenarioConfig& cfg) {
  try {
    return AmbientManifold::parse(cfg.ambient);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("ambient: ") + e.what());
  }
}

Immersion build_initial_mesh(const ScenarioConfig& cfg, const AmbientManifold& ambient) {
  Immersion m;
  if (cfg.mesh == "sphere") {
    m = make_sphere(ambient, cfg.subdivisions, cfg.radius, cfg.center);
  } else if (cfg.mesh == "torus") {
    m = make_torus(ambient, cfg.n_major, cfg.n_minor, cfg.major_radius, cfg.minor_radius);
  } else if (cfg.mesh == "flat_subtorus") {
    m = make_flat_subtorus(ambient, cfg.n_u, cfg.n_v, cfg.height);
  } else if (cfg.mesh == "clifford") {
    m = make_clifford_torus(ambient, cfg.n_u, cfg.n_v);
  } else if (cfg.mesh == "obj") {
    m = load_obj(ambient, cfg.mesh_path);
  } else {
    throw ConfigError("mesh: unknown generator '" + cfg.mesh + "'");
  }
  if (cfg.perturb == "harmonic")
    m = perturb(m, PerturbMode::Harmonic, cfg.perturb_amplitude, cfg.seed);
  else if (cfg.perturb == "random")
    m = perturb(m, PerturbMode::Random, cfg.perturb_amplitude, cfg.seed);
  return m;
}

}  // namespace a2flow
