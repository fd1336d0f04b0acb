#pragma once

// Discrete extrinsic geometry of an immersed closed surface.
//
// Conventions (pinned; every module relies on them):
//   nu      outward unit normal (ambient metric)
//   S       shape operator S(X) = -P(nab_X nu), a symmetric 2x2 matrix in a
//           g-orthonormal tangent frame {t1, t2}; the round unit sphere with
//           outward nu has S = -I, scalar mean curvature h = tr S = -2
//   A       second fundamental form; in codimension 1, A_ij = S_ij nu, so
//           |A|^2 = |S|^2 and the mean curvature vector is H = h nu
//   k_g     intrinsic Gauss curvature from corner-angle defects, measured in
//           each face's induced metric; summing k_g * dual over vertices
//           telescopes to 2 pi chi exactly, in any ambient
//   dual    Voronoi-mixed vertex areas clamped on obtuse corners; the three
//           corner contributions of a face sum exactly to its area
//
// The kern:: entry points are templated on the scalar and on a position
// provider (vertex id -> Vec3<T>), so the identical arithmetic runs on plain
// doubles and on the derivative tape.

#include <cmath>
#include <vector>

#include "a2flow/mesh.hpp"

namespace a2flow {

namespace kern {

template <class T> struct FaceGeom {
  Vec3<T> e1, e2;    // chart displacements corner0 -> corner1, corner0 -> corner2
  Vec3<T> bary;      // chart barycenter
  Mat3<T> g;         // ambient metric at the barycenter
  T area;            // ambient face area
  Vec3<T> normal;    // g-unit face normal
};

template <class T, class Pos>
FaceGeom<T> face_geom(const Connectivity& c, const AmbientManifold& amb, const Pos& pos, int f) {
  const auto& fc = c.face(f);
  Vec3<T> p0 = pos(fc[0]);
  FaceGeom<T> out;
  out.e1 = amb.displacement(p0, pos(fc[1]));
  out.e2 = amb.displacement(p0, pos(fc[2]));
  out.bary = p0 + (out.e1 + out.e2) / T(3);
  out.g = amb.metric(out.bary);
  T a11 = dot_g(out.g, out.e1, out.e1);
  T a12 = dot_g(out.g, out.e1, out.e2);
  T a22 = dot_g(out.g, out.e2, out.e2);
  using std::sqrt;
  out.area = T(0.5) * sqrt(a11 * a22 - a12 * a12);
  Vec3<T> n = cross_g(out.g, out.e1, out.e2);
  out.normal = n / norm_g(out.g, n);
  return out;
}

// Area-weighted average of incident face normals, unit in g(x_v).
template <class T, class Pos>
Vec3<T> vertex_normal(const Connectivity& c, const AmbientManifold& amb, const Pos& pos, int v) {
  Vec3<T> acc{};
  for (int f : c.vertex_faces(v)) {
    FaceGeom<T> fg = face_geom<T>(c, amb, pos, f);
    acc += fg.normal * fg.area;
  }
  Mat3<T> gv = amb.metric(pos(v));
  return acc / norm_g(gv, acc);
}

// Deterministic g-orthonormal tangent frame at v: seed axis is the chart
// axis least aligned with nu (by component value, ties to the lower index).
template <class T>
void tangent_frame(const Mat3<T>& g, const Vec3<T>& nu, Vec3<T>& t1, Vec3<T>& t2) {
  using std::fabs;
  T ax = fabs(nu.x), ay = fabs(nu.y), az = fabs(nu.z);
  Vec3<T> seed{};
  if (value(ax) <= value(ay) && value(ax) <= value(az)) seed.x = T(1);
  else if (value(ay) <= value(az)) seed.y = T(1);
  else seed.z = T(1);
  Vec3<T> raw = seed - nu * dot_g(g, seed, nu);
  t1 = raw / norm_g(g, raw);
  Vec3<T> c2 = cross_g(g, nu, t1);
  t2 = c2 / norm_g(g, c2);
}

// Shape operator at v from an osculating-quadric fit over the 1-ring.
// Each edge displacement is straightened into the exponential chart at v to
// second order, xi = d + (1/2) Gamma(v)[d, d], then split into tangent
// coordinates (x, y) and height z along nu. The fit
//   z ~ b1 x + b2 y + (1/2) S11 x^2 + S12 x y + (1/2) S22 y^2
// keeps the linear terms so the quadratic part is insensitive to the O(h^2)
// tilt of the area-weighted normal; with z measured along OUTWARD nu the
// quadratic coefficients are the shape operator itself (on the round unit
// sphere z = -rho^2/2 + ..., so S = -I).
template <class T, class Pos>
Mat2<T> shape_operator(const Connectivity& c, const AmbientManifold& amb, const Pos& pos, int v,
                       const Vec3<T>& nu_v, const Vec3<T>& t1, const Vec3<T>& t2) {
  Mat3<T> gv = amb.metric(pos(v));
  auto gam = amb.christoffels(pos(v));
  std::array<T, 25> M{};
  std::array<T, 5> rhs{};
  T edge_sum{};
  int deg = 0;
  for (int h : c.vertex_out_halfedges(v)) {
    int u = c.destination(h);
    Vec3<T> d = amb.displacement(pos(v), pos(u));
    Vec3<T> xi = d;
    for (int k = 0; k < 3; ++k) {
      T corr{};
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) corr += gam[k](i, j) * d[i] * d[j];
      xi[k] += T(0.5) * corr;
    }
    T x = dot_g(gv, xi, t1), y = dot_g(gv, xi, t2), z = dot_g(gv, xi, nu_v);
    std::array<T, 5> phi = {x, y, T(0.5) * x * x, x * y, T(0.5) * y * y};
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 5; ++j) M[5 * i + j] += phi[i] * phi[j];
      rhs[i] += phi[i] * z;
    }
    edge_sum += norm_g(gv, xi);
    ++deg;
  }
  // Normalize columns by the mean edge length (linear ~ s, quadratic ~ s^2)
  // so the Cholesky pivots stay O(1) at every refinement level.
  T inv = T(deg) / edge_sum;
  T inv2 = inv * inv;
  std::array<T, 5> col = {inv, inv, inv2, inv2, inv2};
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) M[5 * i + j] = M[5 * i + j] * (col[i] * col[j]);
    rhs[i] = rhs[i] * col[i];
  }
  std::array<T, 5> beta = solve_spd<T, 5>(M, rhs);
  Mat2<T> S;
  S(0, 0) = beta[2] * inv2;
  S(0, 1) = beta[3] * inv2;
  S(1, 0) = S(0, 1);
  S(1, 1) = beta[4] * inv2;
  return S;
}

// Voronoi-mixed dual area at v (Meyer clamping on obtuse faces). The three
// corner shares of each face sum exactly to the face area, so the dual areas
// partition the total area to rounding.
template <class T, class Pos>
T mixed_dual_area(const Connectivity& c, const AmbientManifold& amb, const Pos& pos, int v) {
  T total{};
  for (int h : c.vertex_out_halfedges(v)) {
    int f = c.halfedge(h).face;
    int u = c.destination(h);
    int w = c.destination(c.halfedge(h).next);  // third corner
    Vec3<T> a = amb.displacement(pos(v), pos(u));
    Vec3<T> b = amb.displacement(pos(v), pos(w));
    Vec3<T> e = amb.displacement(pos(u), pos(w));
    FaceGeom<T> fg = face_geom<T>(c, amb, pos, f);
    const Mat3<T>& g = fg.g;
    T dot_v = dot_g(g, a, b);
    T dot_u = T(0) - dot_g(g, a, e);  // corner u: edges u->v = -a, u->w = e
    T dot_w = dot_g(g, b, e);         // corner w: edges w->v = -b, w->u = -e
    if (value(dot_v) < 0) {
      total += fg.area * T(0.5);
    } else if (value(dot_u) < 0 || value(dot_w) < 0) {
      total += fg.area * T(0.25);
    } else {
      T la2 = dot_g(g, a, a), lb2 = dot_g(g, b, b);
      T cot_u = dot_u / (T(2) * fg.area);
      T cot_w = dot_w / (T(2) * fg.area);
      total += (la2 * cot_w + lb2 * cot_u) * T(0.125);
    }
  }
  return total;
}

/// Energy density contribution of one vertex: |A|^2(v) * dual(v). Summing
// over vertices gives the discrete total squared second fundamental form;
// it depends only on positions in the closed 1-ring of v (the quadric fit
// does not look at neighbor normals).
template <class T, class Pos>
T vertex_energy(const Connectivity& c, const AmbientManifold& amb, const Pos& pos, int v) {
  Vec3<T> nu = vertex_normal<T>(c, amb, pos, v);
  Mat3<T> gv = amb.metric(pos(v));
  Vec3<T> t1, t2;
  tangent_frame(gv, nu, t1, t2);
  Mat2<T> S = shape_operator(c, amb, pos, v, nu, t1, t2);
  T a2 = S(0, 0) * S(0, 0) + S(0, 1) * S(0, 1) + S(1, 0) * S(1, 0) + S(1, 1) * S(1, 1);
  return a2 * mixed_dual_area<T>(c, amb, pos, v);
}

}  // namespace kern

// Cached per-face and per-vertex curvature data of one immersion.
struct CurvatureField {
  // Per face: induced metric as the Gram matrix of (e1, e2), ambient area,
  // g-unit normal.
  std::vector<Mat2d> face_metric;
  std::vector<double> face_area;
  std::vector<Vec3d> face_normal;
  // Per vertex.
  std::vector<Vec3d> normal;
  std::vector<Vec3d> tangent1, tangent2;  // g-orthonormal frame
  std::vector<Mat2d> shape;               // S in that frame
  std::vector<double> abs_A2;             // |A|^2 = |S|^2
  std::vector<double> mean_h;             // h = tr S; mean curvature vector h nu
  std::vector<double> gauss_k;            // angle defect / dual area
  std::vector<double> dual_area;
  double total_area = 0.0;

  static CurvatureField compute(const Immersion& m);
};

// Total squared second fundamental form, directly from the kernels.
double energy_E(const Immersion& m);
double energy_E(const CurvatureField& f);
// Willmore-type energy (1/4) integral |H|^2.
double energy_W(const Immersion& m);
double energy_W(const CurvatureField& f);

// |sum k_g dual - 2 pi chi|: telescopes to rounding error by construction.
double gauss_bonnet_residual(const Immersion& m);

// Signed deficit E - 4W + 4 pi chi = 2 sum (k_g - det S) dual: measures the
// consistency of intrinsic (angle defect) and extrinsic (det S) curvature in
// flat ambients; converges to 0 under refinement.
double gauss_equation_deficit(const Immersion& m);

// Antisymmetrized covariant difference of the shape tensor over face corner
// pairs, per unit bivector; the ambient curvature contribution vanishes in
// constant-curvature ambients, so the continuum limit is 0. The field holds
// the area-weighted average of incident face densities at each vertex;
// codazzi_residual is its L2 norm over the surface.
std::vector<double> codazzi_residual_field(const Immersion& m);
double codazzi_residual(const Immersion& m);

// Frame-invariant magnitude of the discrete covariant differential of the
// shape tensor per face (inverse-Gram contraction of the covariant
// differences along the two face edges, tangentially projected), maximized
// over faces. Low-order by construction; feeds the interior-estimate
// scaling monitor.
double shape_gradient_max(const Immersion& m);

// The intrinsic curvature integral sum k_g dual = 2 pi chi is an exact
// multiple of 4 pi for closed orientable meshes; returns that multiple
// (chi / 2) and the deviation, which only carries acos rounding. A deviation
// near a half-integer means the mesh bookkeeping is inconsistent.
struct WhiteCheck {
  int nearest_multiple = 0;
  double deviation = 0.0;
};
WhiteCheck white_multiple_check(const Immersion& m);

}  // namespace a2flow
