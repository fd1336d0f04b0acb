#pragma once

// First variation of the discrete bending energy E = sum_v |A|^2(v) dual(v).
//
// Two independent routes produce the L2 gradient field:
//   - grad_E_variational: reverse-mode derivative of the discrete energy with
//     respect to vertex chart positions, converted to the L2(d mu) gradient by
//     raising with the ambient metric and dividing by dual areas. Exact for
//     the discrete functional, so energy decreases along -grad by
//     construction; this is the canonical flow driver.
//   - grad_E_analytic: direct discretization of the continuum Euler-Lagrange
//     operator. In codimension one the operator reduces to the scalar normal
//     speed
//         2 Lap_g h + 2 tr S^3 - h |S|^2 + 2 S^ij Rbar(nu, t_i, t_j, nu).
//     In flat ambients all curvatures come from one quartic osculating jet
//     over the 2-ring (pointwise-convergent Lap_g h on irregular meshes); in
//     curved ambients Lap_g h falls back to the intrinsic cotangent
//     Laplacian of the fitted h. The reduction of the double divergence of A
//     to Lap_g h uses the Codazzi equation and is exact in constant-curvature
//     ambients; diagnostic cross-check only.
//
// Sign conventions match the curvature module: outward nu on spheres,
// S = -d nu, h = tr S (unit sphere h = -2), so round spheres and flat
// subtori are critical points and the gradient fields vanish there.

#include <vector>

#include "a2flow/mesh.hpp"

namespace a2flow {

enum class GradientRoute { Variational, Analytic };

struct GradientField {
  GradientRoute route = GradientRoute::Variational;
  std::vector<Vec3d> vec;  // ambient chart components per vertex
  double l2_norm = 0.0;    // sqrt(sum_v <grad,grad>_g dual(v))
  double max_norm = 0.0;   // max_v |grad(v)|_g
};

// Exact derivative of the discrete energy. Duality: for every vertex field V,
//   d/de E(m + eV)|_0 = sum_v <grad(v), V(v)>_g dual(v)
// to roundoff. Entries are validated finite.
GradientField grad_E_variational(const Immersion& m);

// Cotangent-Laplacian discretization of the continuum operator, emitted as a
// purely normal field. Guarded by a mesh-quality gate protecting the
// fourth-order stencil; violations throw MeshError naming the worst face.
GradientField grad_E_analytic(const Immersion& m, double min_angle_deg = 15.0,
                              int max_valence = 12);

// Central finite difference d/de E(m + eV)|_0; the probe step is
// rel_step * (mean edge length) / max |V|. The oracle the duality tests
// compare against.
double directional_derivative_fd(const Immersion& m, const std::vector<Vec3d>& V,
                                 double rel_step = 1e-5);

// Discrete L2 pairing sum_v <F(v), V(v)>_g dual(v).
double pair_l2(const Immersion& m, const std::vector<Vec3d>& F, const std::vector<Vec3d>& V);

struct VariationCheck {
  double lhs = 0.0;  // finite-difference derivative of the discrete quantity
  double rhs = 0.0;  // value of the variation formula
};

// Area variation under the normal part of V:
//   lhs = d/de area(m + e V_n),  rhs = -sum_v <V_n, H(v)>_g dual(v),
// H = h nu. On the unit sphere with V = nu both sides are 8 pi.
VariationCheck first_variation_area(const Immersion& m, const std::vector<Vec3d>& V);

// Residual of the second-fundamental-form variation formula: L2 norm over
// vertices of (FD derivative of the fitted S under e V_n) minus
//   Hess_ij phi + phi (S^2)_ij + phi Rbar(nu, t_i, t_j, nu),
// where phi = <V, nu>_g. Frames are frozen at their base-surface values, so
// the FD measures mixed (1,1) components; in that gauge the quadratic term
// carries + (sphere family: d/dr of -1/r is +1/r^2).
double first_variation_A(const Immersion& m, const std::vector<Vec3d>& V);

}  // namespace a2flow
