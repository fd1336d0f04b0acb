#pragma once
// Explicit Euler integration of the energy descent f <- f - dt * v with
// a backtracking line search (every accepted step strictly decreases the
// discrete energy), adaptive step growth, stationarity detection, and the
// dissipation ledger  E(t1) - E(t2) ~ sum dt * ||v||^2.
//
// The driving velocity v is the normal projection of the exact discrete
// gradient. The continuum gradient of the energy is a purely normal field;
// the tangential components of the raw vertex gradient are lattice
// artifacts, and descending along them slides vertices inside the surface
// until faces degenerate. Projection removes that failure mode while
// keeping the exact first-order identity dE/dt = -||v||_{L2}^2 (v is an
// orthogonal projection of the gradient, so <grad, v> = ||v||^2).
//
// Stationarity is measured in the weak sense: the largest energy slope
// |<grad, V>| / ||V||_L2 over a fixed dictionary of smooth polynomial vector
// fields (degree <= 2, 30 fields). The pointwise L2 norm of the exact
// discrete gradient carries a lattice-scale floor that grows under
// refinement, so it can never certify stationarity; the weak norm is exactly
// zero on critical points and vanishes on round spheres up to rounding.
//
// History bookkeeping: row 0 records the initial state (dt = 0, dissipation
// = 0); each accepted step appends one row. Concentration columns are
// computed every `cadence` accepted steps and repeated in between.

#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "a2flow/diagnostics.hpp"
#include "a2flow/mesh.hpp"

namespace a2flow {

struct FlowError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class FlowStatus { Running, Stationary, Degenerate, Concentrated, MaxSteps };
const char* to_string(FlowStatus s);

struct HistoryRow {
  int step = 0;
  double t = 0.0;
  double dt = 0.0;            // accepted step size (0 for the initial row)
  double E = 0.0;             // energy after the step
  double W = 0.0;
  double area = 0.0;
  double max_a2 = 0.0;
  double grad_norm = 0.0;     // L2 norm of the driving velocity (pre-step mesh)
  double dissipation = 0.0;   // dt * grad_norm^2
  std::vector<double> chi;    // concentration profile; empty when unhooked
};

struct StepPolicy {
  double c_cfl = 0.05;        // dt seed = c_cfl * (min edge)^4 / (1 + max|A|^2)^2
  double beta = 0.5;          // backtracking shrink factor, in (0,1)
  int max_backtracks = 40;
  double dt_growth = 1.5;     // accepted dt is scaled by this for the next trial
  double armijo = 0.975;      // accept iff E1 <= E0 - armijo * dt * ||v||_{L2}^2
  double stationarity_factor = 1e-4;  // threshold = factor * E / sqrt(area)
  int max_steps = 500;
  int remesh_cadence = 0;     // tangential smoothing every this many steps (0 = off)
};

struct FlowState {
  Immersion mesh;
  double t = 0.0;
  int step = 0;
  double dt = 0.0;            // next trial step; 0 = seed by the CFL rule
  FlowStatus status = FlowStatus::Running;
  std::vector<HistoryRow> history;
  std::vector<InteriorSample> interior_samples;  // cadence samples of max |nabla A|
  double last_weak_norm = 0.0;  // weak gradient norm at the last stationarity check
  double max_gb_residual = 0.0;  // worst Gauss-Bonnet residual over cadence checks
};

// Largest first-order energy slope against the smooth dictionary fields;
// exposed for calibration and tests.
double weak_gradient_norm(const Immersion& m, const std::vector<Vec3d>& grad);

FlowState make_flow_state(Immersion f0);

// One trial of the line-searched Euler step. Requires status Running.
// Stationarity is checked first (threshold factor * E / sqrt(area), met with
// <=, so exact critical points with E = 0 report stationary immediately);
// if the backtracking budget is exhausted the state is returned intact with
// status Degenerate.
void flow_step(FlowState& s, const StepPolicy& p);

struct RunHooks {
  int cadence = 0;                  // diagnostics + snapshots every N accepted steps (0 = off)
  std::vector<double> chi_radii;    // concentration radii; empty = no chi columns
  ConcentrationOptions chi_options;
  // Trips status Concentrated when chi at the smallest radius reaches the
  // gate at a cadence check.
  double concentrated_gate = 1.0;
  std::string output_dir;           // artifacts written iff nonempty
};

// Drives flow_step until the status leaves Running; computes cadence
// diagnostics (concentration columns, Gauss-Bonnet residual, interior
// samples) and, when output_dir is set, writes flow.csv plus snap_<step>.ply
// snapshots (channels abs_A2, abs_H2, gauss_k) at every cadence step.
FlowState run_flow(Immersion f0, const StepPolicy& p, const RunHooks& hooks);

// CSV schema: step,t,dt,E,W,area,maxA2,gradnorm,dissipation,chi_rho1,...
// Doubles print as %.17g; identical runs produce byte-identical files.
void write_history_csv(const FlowState& s, const std::string& path);

// max over history rows with t > 0 of (area(t) - area(0)) / (sqrt(t) *
// sqrt(E(0))); 0 when no such row exists. Throws FlowError on empty history.
double check_area_growth(const FlowState& s);

}  // namespace a2flow
