#pragma once
// Scenario configuration: one plain-text key-value file drives a whole run
// (ambient, initial mesh, step policy, diagnostics cadence, constants).
//
// Format: `key = value` lines; `#` starts a comment; blank lines ignored.
// Unknown keys, duplicate keys, type mismatches, and out-of-range values are
// all reported together (path:line: message), not first-error-only.
// serialize_config renders the canonical form (every key, fixed order,
// shortest round-trip numbers); the shipped scenario files are canonical, so
// parse -> serialize reproduces them byte for byte.

#include <cstdint>
#include <string>
#include <vector>

#include "a2flow/flow.hpp"
#include "a2flow/mesh.hpp"

namespace a2flow {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ScenarioConfig {
  // Ambient geometry: euclidean | sphere:r=<v> | torus:L=<v> | chart:<path>.
  std::string ambient = "euclidean";

  // Initial immersion: sphere | torus | flat_subtorus | clifford | obj.
  std::string mesh = "sphere";
  std::string mesh_path;            // obj only
  int subdivisions = 3;             // sphere
  double radius = 1.0;              // sphere
  Vec3d center{0.0, 0.0, 0.0};      // sphere (center_x/y/z keys)
  int n_major = 16, n_minor = 16;   // torus
  double major_radius = 2.0, minor_radius = 0.5;
  int n_u = 16, n_v = 16;           // flat_subtorus, clifford
  double height = 0.0;              // flat_subtorus

  // Normal perturbation of the initial mesh: none | harmonic | random.
  std::string perturb = "none";
  double perturb_amplitude = 0.0;
  uint64_t seed = 0;

  StepPolicy policy;

  // Diagnostics: concentration every `cadence` accepted steps on the given
  // radius grid; chi(smallest radius) >= eps1 trips the concentration gate.
  int cadence = 50;
  std::vector<double> chi_radii = {0.05, 0.1, 0.2, 0.4, 0.8, 1.6, 3.2};
  int grid_resolution = 32;
  double eps1 = 1.0;

  // Small-energy and lifespan constants (defaults are placeholders for the
  // unspecified universal constants, not derived values).
  double eps0_sq = 1.0;
  double lifespan_C = 1.0;
  double lifespan_rho = 0.5;

  std::string output_dir = "out";

  bool operator==(const ScenarioConfig& o) const;
};

struct ConfigParse {
  ScenarioConfig config;
  std::vector<std::string> errors;  // empty on success
  bool ok() const { return errors.empty(); }
};

ConfigParse parse_config(const std::string& path);
ConfigParse parse_config_text(const std::string& text, const std::string& label = "<config>");

std::string serialize_config(const ScenarioConfig& cfg);

// Construct the pieces a run needs. Both throw ConfigError on specs that
// passed textual validation but fail to build (e.g. unreadable chart table).
AmbientManifold build_ambient(const ScenarioConfig& cfg);
Immersion build_initial_mesh(const ScenarioConfig& cfg, const AmbientManifold& ambient);

}  // namespace a2flow
