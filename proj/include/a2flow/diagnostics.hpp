#pragma once
// Measurable analytic quantities over immersion snapshots: the curvature
// concentration function, the lifespan lower bound, blowup rescaling, area
// and density bounds, sphere inversion, the empty-ball search, and the
// interior-estimate scaling monitor. Everything here is a pure function of a
// snapshot; nothing feeds back into the flow driver.

#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "a2flow/mesh.hpp"

namespace a2flow {

struct DiagnosticsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// chi(rho) = sup over candidate centers x of the |A|^2 mass carried by the
// vertices whose ambient distance to x is <= rho. Candidate centers: all
// mesh vertices; in euclidean ambients additionally the face circumcenters
// and an axis-aligned grid over the vertex bounding box. The sup over any
// finite center set is a lower bound for the true sup over the ambient, and
// enlarging the center set never decreases chi.
struct ConcentrationProfile {
  std::vector<double> radii;   // strictly increasing, positive
  std::vector<double> chi;     // nondecreasing; chi.back() <= total energy
  std::vector<Vec3d> center;   // first argmax center per radius, fixed scan order
  double time_stamp = 0.0;
};

struct ConcentrationOptions {
  int grid_resolution = 32;           // per axis; euclidean ambients only
  bool include_grid = true;           // off-surface grid centers (euclidean only)
  bool include_circumcenters = true;  // face circumcenters (euclidean only)
};

ConcentrationProfile concentration(const Immersion& m, std::vector<double> radii,
                                   const ConcentrationOptions& opt = {}, double time_stamp = 0.0);

// Lifespan lower bound
//   T_low = C rho^4 log( C eps0^2 / (chi0 + rho^4 G^2 (area0 + rho^2 W0)) ),
// G = sup |nabla Riemann| of the ambient. Degenerate cases encode in the
// report: denominator 0 gives T_low = +infinity; a log argument below 1
// clamps T_low to 0 and sets the warning flag.
struct LifespanReport {
  double rho = 0.0, eps0 = 0.0, C = 0.0;
  double chi0 = 0.0;              // concentration at rho on the given mesh
  double grad_riemann_inf = 0.0;  // G
  double area0 = 0.0, W0 = 0.0;
  double denominator = 0.0;  // chi0 + rho^4 G^2 (area0 + rho^2 W0)
  double T_low = 0.0;        // may be +infinity
  bool clamped = false;      // log argument was below 1
  double observed_T = -1.0;  // filled by callers that ran a flow; -1 = not set
};

LifespanReport lifespan_bound(const Immersion& m, double rho, double eps0, double C,
                              const ConcentrationOptions& opt = {});

// Blowup rescaling at a snapshot: r_i = smallest grid radius whose
// concentration reaches ratio * eps_sq, x_i = its argmax center; the result
// carries the immersion re-expressed in the metric gbar_i = r_i^{-2} gbar.
// Euclidean ambients realize the rescale in coordinates (translate x_i to
// the origin, divide by r_i); other ambients keep chart points and wrap the
// ambient with AmbientManifold::scaled. Throws DiagnosticsError when no
// radius reaches the threshold (no concentration to rescale around) and
// when the rescaled unit-ball energy is not positive.
struct RescaleResult {
  double t_i = 0.0, r_i = 0.0;
  Vec3d x_i{};
  Immersion rescaled;
  double unit_ball_energy = 0.0;  // |A|^2 mass within rescaled distance 1 of x_i
};

RescaleResult blowup_rescale(const Immersion& m, double t, const std::vector<double>& radii,
                             double eps_sq, double ratio = 0.5,
                             const ConcentrationOptions& opt = {});

// area <= (2 E + 2 pi chi(Sigma)) / inf K in ambients whose sectional
// curvature has a positive lower bound; throws DiagnosticsError otherwise.
struct AreaBoundCheck {
  double lhs = 0.0;  // area
  double rhs = 0.0;  // (2 E + 2 pi chi) / inf K
  bool pass = false;
};

AreaBoundCheck area_bound_check(const Immersion& m);

// max over centers x and radii r of area(vertices within distance r of x) / r^2,
// with the attaining center and radius (first maximum in scan order).
struct DensityRatio {
  double max_ratio = 0.0;
  Vec3d center{};
  double radius = 0.0;
};

DensityRatio density_ratio(const Immersion& m, const std::vector<Vec3d>& centers,
                           const std::vector<double>& radii);

// Inversion x -> x0 + (x - x0) / |x - x0|^2 about a point off the surface.
// Euclidean ambients only; throws DiagnosticsError when x0 is within
// 1e-6 * mean edge length of the surface.
Immersion sphere_inversion(const Immersion& m, const Vec3d& x0);

// Center maximizing the distance to the surface over a grid spanning the
// vertex bounding box; the radius is the exact point-to-mesh distance, so
// the open ball misses the surface. Euclidean ambients only.
struct EmptyBall {
  Vec3d center{};
  double radius = 0.0;
};

EmptyBall find_empty_ball(const Immersion& m, int grid_resolution = 25);

// Exact euclidean distance from a point to the closed triangle mesh.
double distance_to_surface(const Immersion& m, const Vec3d& x);

// Scaling monitor for the interior estimate ||nabla A||_inf <~ s^(-1/2):
// rows pair each sampled (s, max |nabla A|) with the product sqrt(s) * max.
// Reported for boundedness inspection, never asserted.
struct InteriorSample {
  double s = 0.0;
  double max_grad_a = 0.0;
};

struct InteriorRow {
  double s = 0.0;
  double max_grad_a = 0.0;
  double product = 0.0;  // sqrt(s) * max_grad_a
};

std::vector<InteriorRow> interior_estimate_monitor(const std::vector<InteriorSample>& samples);

// std / mean of the chart distances from the vertices to their centroid;
// 0 for a perfectly round chart sphere.
double asphericity(const Immersion& m);

}  // namespace a2flow
