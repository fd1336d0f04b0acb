#include "a2flow/gradient.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <vector>

#include "a2flow/curvature.hpp"
#include "a2flow/tape.hpp"
#include "a2flow/threads.hpp"

namespace a2flow {

namespace {

struct PosView {
  const std::vector<Vec3d>* p;
  const Vec3d& operator()(int v) const { return (*p)[v]; }
};

// Position lookup over one vertex's tape inputs; stencils are tiny (the
// closed 1-ring), so a linear scan beats any map.
struct StencilPos {
  const std::vector<int>* ids;
  const std::vector<Vec3<ad::Var>>* vars;
  const Vec3<ad::Var>& operator()(int w) const {
    for (size_t i = 0; i < ids->size(); ++i)
      if ((*ids)[i] == w) return (*vars)[i];
    throw MeshError("vertex energy touched a position outside its 1-ring stencil");
  }
};

// Quartic osculating jet over the closed 2-ring, flat ambients only (the
// chart metric is the identity there, so heights and abscissae are plain
// projections of wrap-aware displacements). Differencing the fitted h field
// through a Laplacian stencil loses half an order across mesh-pattern seams;
// reading the fourth-order jet coefficients directly keeps the surface
// bilaplacian pointwise first-order accurate on irregular meshes.
struct QuarticJet {
  double qxx, qxy, qyy;  // graph Hessian at the vertex = shape operator
  double biharm;         // q_xxxx + 2 q_xxyy + q_yyyy
};

QuarticJet quartic_jet(const Immersion& m, int v, const Vec3d& nu, const Vec3d& t1,
                       const Vec3d& t2) {
  std::array<double, 14 * 14> M{};
  std::array<double, 14> rhs{};
  double edge_sum = 0.0;
  int cnt = 0;
  for (int u : m.c().two_ring_closure(v)) {
    if (u == v) continue;
    Vec3d d = m.ambient.displacement(m.pos[v], m.pos[u]);
    double x = dot(d, t1), y = dot(d, t2), z = dot(d, nu);
    double b[14] = {x,
                    y,
                    0.5 * x * x,
                    x * y,
                    0.5 * y * y,
                    x * x * x / 6.0,
                    0.5 * x * x * y,
                    0.5 * x * y * y,
                    y * y * y / 6.0,
                    x * x * x * x / 24.0,
                    x * x * x * y / 6.0,
                    0.25 * x * x * y * y,
                    x * y * y * y / 6.0,
                    y * y * y * y / 24.0};
    for (int i = 0; i < 14; ++i) {
      for (int j = 0; j < 14; ++j) M[14 * i + j] += b[i] * b[j];
      rhs[i] += b[i] * z;
    }
    edge_sum += norm(d);
    ++cnt;
  }
  // Column equilibration by jet order keeps the Cholesky pivots O(1).
  double inv = cnt / edge_sum;
  std::array<double, 14> col;
  static const int order[14] = {1, 1, 2, 2, 2, 3, 3, 3, 3, 4, 4, 4, 4, 4};
  for (int i = 0; i < 14; ++i) col[i] = std::pow(inv, order[i]);
  for (int i = 0; i < 14; ++i) {
    for (int j = 0; j < 14; ++j) M[14 * i + j] *= col[i] * col[j];
    rhs[i] *= col[i];
  }
  std::array<double, 14> beta = solve_spd<double, 14>(M, rhs);
  double inv2 = inv * inv, inv4 = inv2 * inv2;
  QuarticJet out;
  out.qxx = beta[2] * inv2;
  out.qxy = beta[3] * inv2;
  out.qyy = beta[4] * inv2;
  out.biharm = (beta[9] + 2.0 * beta[11] + beta[13]) * inv4;
  return out;
}

std::vector<double> dual_areas(const Immersion& m) {
  const Connectivity& c = m.c();
  PosView pos{&m.pos};
  std::vector<double> dual(c.vertex_count());
  for (int v = 0; v < c.vertex_count(); ++v)
    dual[v] = kern::mixed_dual_area<double>(c, m.ambient, pos, v);
  return dual;
}

void finish_norms(const Immersion& m, const std::vector<double>& dual, GradientField& gf) {
  double sq = 0.0, mx = 0.0;
  for (int v = 0; v < m.c().vertex_count(); ++v) {
    Mat3d g = m.ambient.metric(m.pos[v]);
    double n2 = dot_g(g, gf.vec[v], gf.vec[v]);
    if (!std::isfinite(n2)) throw MeshError("gradient field has non-finite entries");
    sq += n2 * dual[v];
    mx = std::max(mx, std::sqrt(n2));
  }
  gf.l2_norm = std::sqrt(sq);
  gf.max_norm = mx;
}

double fd_step(const Immersion& m, const std::vector<Vec3d>& V, double rel_step) {
  double lmin, lmean, lmax;
  m.edge_length_stats(lmin, lmean, lmax);
  double vmax = 0.0;
  for (const Vec3d& x : V) vmax = std::max(vmax, norm(x));
  return vmax > 0.0 ? rel_step * lmean / vmax : rel_step * lmean;
}

}  // namespace

GradientField grad_E_variational(const Immersion& m) {
  const Connectivity& c = m.c();
  const int nv = c.vertex_count();

  // Each vertex energy depends only on the closed 1-ring, so its adjoints are
  // taped independently (parallel), then scattered in fixed vertex order so
  // the sums are identical for every thread count.
  std::vector<std::vector<Vec3d>> local(nv);
  parallel_for(nv, [&](int v) {
    thread_local ad::Tape tape;
    ad::ScopedTape guard(tape);
    const auto& ring = c.one_ring(v);
    const int ns = static_cast<int>(ring.size()) + 1;
    std::vector<int> ids(ns);
    std::vector<Vec3<ad::Var>> vars(ns);
    ids[0] = v;
    for (int i = 1; i < ns; ++i) ids[i] = ring[i - 1];
    for (int i = 0; i < ns; ++i) {
      const Vec3d& p = m.pos[ids[i]];
      vars[i] = {ad::Var::input(p.x), ad::Var::input(p.y), ad::Var::input(p.z)};
    }
    StencilPos sp{&ids, &vars};
    ad::Var e = kern::vertex_energy<ad::Var>(c, m.ambient, sp, v);
    tape.backward(e.id);
    local[v].resize(ns);
    for (int i = 0; i < ns; ++i)
      local[v][i] = {tape.adjoint(vars[i].x.id), tape.adjoint(vars[i].y.id),
                     tape.adjoint(vars[i].z.id)};
  });

  std::vector<Vec3d> dEdx(nv, Vec3d{});
  for (int v = 0; v < nv; ++v) {
    const auto& ring = c.one_ring(v);
    dEdx[v] += local[v][0];
    for (size_t i = 0; i < ring.size(); ++i) dEdx[ring[i]] += local[v][i + 1];
  }

  // dE/dx are covector components; the L2(d mu) gradient raises with the
  // ambient metric and divides by the vertex mass.
  std::vector<double> dual = dual_areas(m);
  GradientField gf;
  gf.route = GradientRoute::Variational;
  gf.vec.resize(nv);
  for (int v = 0; v < nv; ++v)
    gf.vec[v] = inverse(m.ambient.metric(m.pos[v])) * dEdx[v] / dual[v];
  finish_norms(m, dual, gf);
  return gf;
}

GradientField grad_E_analytic(const Immersion& m, double min_angle_deg, int max_valence) {
  const Connectivity& c = m.c();
  const int nv = c.vertex_count();
  PosView pos{&m.pos};

  const bool flat = m.ambient.flat();
  for (int v = 0; v < nv; ++v) {
    if (c.valence(v) > max_valence) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "vertex %d has valence %d, above the stencil gate %d", v,
                    c.valence(v), max_valence);
      throw MeshError(buf);
    }
    if (flat && c.two_ring_closure(v).size() < 15) {
      char buf[128];
      std::snprintf(buf, sizeof buf,
                    "vertex %d has a 2-ring of %zu vertices, too small for the quartic jet", v,
                    c.two_ring_closure(v).size());
      throw MeshError(buf);
    }
  }

  // Intrinsic corner angles and cotangents per half-edge (opposite corner of
  // the edge inside its face), from edge lengths in the face metric.
  std::vector<double> cot_opp(c.halfedge_count());
  double worst_angle = M_PI;
  int worst_face = -1;
  for (int f = 0; f < c.face_count(); ++f) {
    kern::FaceGeom<double> fg = kern::face_geom<double>(c, m.ambient, pos, f);
    Vec3d e12 = fg.e2 - fg.e1;
    double l0 = norm_g(fg.g, fg.e1);   // corner0 -> corner1
    double l1 = norm_g(fg.g, e12);     // corner1 -> corner2
    double l2 = norm_g(fg.g, fg.e2);   // corner0 -> corner2
    auto corner = [](double a, double b, double opp) {
      double cosv = (a * a + b * b - opp * opp) / (2.0 * a * b);
      return std::acos(std::clamp(cosv, -1.0, 1.0));
    };
    double ang[3] = {corner(l0, l2, l1), corner(l0, l1, l2), corner(l1, l2, l0)};
    for (double a : ang)
      if (a < worst_angle) {
        worst_angle = a;
        worst_face = f;
      }
    // Half-edge 3f+k starts at face corner k; its opposite corner is k+2 mod 3.
    for (int k = 0; k < 3; ++k) {
      double a = ang[(k + 2) % 3];
      cot_opp[3 * f + k] = std::cos(a) / std::sin(a);
    }
  }
  if (worst_angle < min_angle_deg * M_PI / 180.0) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "face %d has interior angle %.2f deg, below the stencil gate %.2f deg",
                  worst_face, worst_angle * 180.0 / M_PI, min_angle_deg);
    throw MeshError(buf);
  }

  CurvatureField cf = CurvatureField::compute(m);

  GradientField gf;
  gf.route = GradientRoute::Analytic;
  gf.vec.resize(nv);
  for (int v = 0; v < nv; ++v) {
    double speed;
    if (flat) {
      // Graph identity at the jet origin: Lap_g h = Dxy^2 q + 2 h det S -
      // 3 h |S|^2 (exact on sphere and cylinder jets), with every curvature
      // taken from the same quartic fit.
      QuarticJet jet = quartic_jet(m, v, cf.normal[v], cf.tangent1[v], cf.tangent2[v]);
      double h = jet.qxx + jet.qyy;
      double det = jet.qxx * jet.qyy - jet.qxy * jet.qxy;
      double s2 = jet.qxx * jet.qxx + 2.0 * jet.qxy * jet.qxy + jet.qyy * jet.qyy;
      double lap = jet.biharm + 2.0 * h * det - 3.0 * h * s2;
      Mat2d S;
      S(0, 0) = jet.qxx;
      S(0, 1) = jet.qxy;
      S(1, 0) = jet.qxy;
      S(1, 1) = jet.qyy;
      double tr_s3 = trace(S * S * S);
      speed = 2.0 * lap + 2.0 * tr_s3 - h * s2;
    } else {
      double lap = 0.0;
      for (int h : c.vertex_out_halfedges(v)) {
        int u = c.destination(h);
        double w = 0.5 * (cot_opp[h] + cot_opp[c.halfedge(h).twin]);
        lap += w * (cf.mean_h[u] - cf.mean_h[v]);
      }
      lap /= cf.dual_area[v];

      const Mat2d& S = cf.shape[v];
      Mat2d S2 = S * S;
      double tr_s3 = trace(S2 * S);
      double s2 = cf.abs_A2[v];
      double h = cf.mean_h[v];

      double ambient = 0.0;
      RiemannTensor R = m.ambient.riemann(m.pos[v]);
      const Vec3d* t[2] = {&cf.tangent1[v], &cf.tangent2[v]};
      const Vec3d& nu = cf.normal[v];
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
          double r = 0.0;
          for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
              for (int cc = 0; cc < 3; ++cc)
                for (int d = 0; d < 3; ++d)
                  r += nu[a] * (*t[i])[b] * (*t[j])[cc] * nu[d] * R(a, b, cc, d);
          ambient += S(i, j) * r;
        }
      speed = 2.0 * lap + 2.0 * tr_s3 - h * s2 + 2.0 * ambient;
    }
    gf.vec[v] = cf.normal[v] * speed;
  }
  finish_norms(m, cf.dual_area, gf);
  return gf;
}

double directional_derivative_fd(const Immersion& m, const std::vector<Vec3d>& V,
                                 double rel_step) {
  double eps = fd_step(m, V, rel_step);
  Immersion plus = m, minus = m;
  for (size_t v = 0; v < m.pos.size(); ++v) {
    plus.pos[v] += V[v] * eps;
    minus.pos[v] -= V[v] * eps;
  }
  return (energy_E(plus) - energy_E(minus)) / (2.0 * eps);
}

double pair_l2(const Immersion& m, const std::vector<Vec3d>& F, const std::vector<Vec3d>& V) {
  std::vector<double> dual = dual_areas(m);
  double s = 0.0;
  for (int v = 0; v < m.c().vertex_count(); ++v)
    s += dot_g(m.ambient.metric(m.pos[v]), F[v], V[v]) * dual[v];
  return s;
}

VariationCheck first_variation_area(const Immersion& m, const std::vector<Vec3d>& V) {
  CurvatureField cf = CurvatureField::compute(m);
  const int nv = m.c().vertex_count();
  std::vector<Vec3d> vn(nv);
  std::vector<double> phi(nv);
  for (int v = 0; v < nv; ++v) {
    phi[v] = dot_g(m.ambient.metric(m.pos[v]), V[v], cf.normal[v]);
    vn[v] = cf.normal[v] * phi[v];
  }
  double eps = fd_step(m, vn, 1e-5);
  Immersion plus = m, minus = m;
  for (int v = 0; v < nv; ++v) {
    plus.pos[v] += vn[v] * eps;
    minus.pos[v] -= vn[v] * eps;
  }
  VariationCheck out;
  out.lhs = (plus.total_area() - minus.total_area()) / (2.0 * eps);
  for (int v = 0; v < nv; ++v) out.rhs -= phi[v] * cf.mean_h[v] * cf.dual_area[v];
  return out;
}

namespace {

// Quadratic coefficients of the 1-ring fit of a vertex scalar in the
// exponential-chart tangent coordinates at v; same basis, normalization and
// solve as the shape fit, with the field values as heights.
Mat2d ring_hessian(const Immersion& m, int v, const Vec3d& t1, const Vec3d& t2,
                   const std::vector<double>& phi) {
  const Connectivity& c = m.c();
  Mat3d gv = m.ambient.metric(m.pos[v]);
  auto gam = m.ambient.christoffels(m.pos[v]);
  std::array<double, 25> M{};
  std::array<double, 5> rhs{};
  double edge_sum = 0.0;
  int deg = 0;
  for (int h : c.vertex_out_halfedges(v)) {
    int u = c.destination(h);
    Vec3d d = m.ambient.displacement(m.pos[v], m.pos[u]);
    Vec3d xi = d;
    for (int k = 0; k < 3; ++k) {
      double corr = 0.0;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) corr += gam[k](i, j) * d[i] * d[j];
      xi[k] += 0.5 * corr;
    }
    double x = dot_g(gv, xi, t1), y = dot_g(gv, xi, t2), z = phi[u] - phi[v];
    std::array<double, 5> basis = {x, y, 0.5 * x * x, x * y, 0.5 * y * y};
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 5; ++j) M[5 * i + j] += basis[i] * basis[j];
      rhs[i] += basis[i] * z;
    }
    edge_sum += norm_g(gv, xi);
    ++deg;
  }
  double inv = deg / edge_sum;
  double inv2 = inv * inv;
  std::array<double, 5> col = {inv, inv, inv2, inv2, inv2};
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) M[5 * i + j] *= col[i] * col[j];
    rhs[i] *= col[i];
  }
  std::array<double, 5> beta = solve_spd<double, 5>(M, rhs);
  Mat2d H;
  H(0, 0) = beta[2] * inv2;
  H(0, 1) = beta[3] * inv2;
  H(1, 0) = H(0, 1);
  H(1, 1) = beta[4] * inv2;
  return H;
}

}  // namespace

double first_variation_A(const Immersion& m, const std::vector<Vec3d>& V) {
  CurvatureField cf = CurvatureField::compute(m);
  const Connectivity& c = m.c();
  const int nv = c.vertex_count();
  std::vector<Vec3d> vn(nv);
  std::vector<double> phi(nv);
  for (int v = 0; v < nv; ++v) {
    phi[v] = dot_g(m.ambient.metric(m.pos[v]), V[v], cf.normal[v]);
    vn[v] = cf.normal[v] * phi[v];
  }
  double eps = fd_step(m, vn, 1e-5);
  std::vector<Vec3d> pp(nv), pm(nv);
  for (int v = 0; v < nv; ++v) {
    pp[v] = m.pos[v] + vn[v] * eps;
    pm[v] = m.pos[v] - vn[v] * eps;
  }
  PosView posp{&pp}, posm{&pm};

  const bool flat = m.ambient.flat();
  double sq = 0.0;
  for (int v = 0; v < nv; ++v) {
    // The measurement frame travels by parallel transport along the probe
    // displacement (first-order: w -> w - Gamma[dx, w]); a chart-frozen frame
    // would leak O(Gamma) gauge terms into the difference quotient.
    std::array<Mat3d, 3> gam{};
    if (!flat) gam = m.ambient.christoffels(m.pos[v]);
    auto transport = [&](const Vec3d& w, double sign) {
      if (flat) return w;
      Vec3d dx = vn[v] * (sign * eps);
      Vec3d out = w;
      for (int k = 0; k < 3; ++k) {
        double corr = 0.0;
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) corr += gam[k](i, j) * dx[i] * w[j];
        out[k] -= corr;
      }
      return out;
    };
    Mat2d sp = kern::shape_operator<double>(c, m.ambient, posp, v, transport(cf.normal[v], 1.0),
                                            transport(cf.tangent1[v], 1.0),
                                            transport(cf.tangent2[v], 1.0));
    Mat2d sm = kern::shape_operator<double>(c, m.ambient, posm, v, transport(cf.normal[v], -1.0),
                                            transport(cf.tangent1[v], -1.0),
                                            transport(cf.tangent2[v], -1.0));
    Mat2d fd = (sp - sm) * (1.0 / (2.0 * eps));

    // Mixed (frame) components: d/de S = Hess phi + phi S^2 + phi Rbar; the
    // cubic enters with the opposite sign to the lowered-index version
    // because the induced metric evolves too (sphere family: d/dr(-1/r) I =
    // +1/r^2 I = +S^2 there).
    Mat2d rhs = ring_hessian(m, v, cf.tangent1[v], cf.tangent2[v], phi);
    Mat2d s2 = cf.shape[v] * cf.shape[v];
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) rhs(i, j) += phi[v] * s2(i, j);
    if (!flat) {
      RiemannTensor R = m.ambient.riemann(m.pos[v]);
      const Vec3d* t[2] = {&cf.tangent1[v], &cf.tangent2[v]};
      const Vec3d& nu = cf.normal[v];
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
          double r = 0.0;
          for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
              for (int cc = 0; cc < 3; ++cc)
                for (int d = 0; d < 3; ++d)
                  r += nu[a] * (*t[i])[b] * (*t[j])[cc] * nu[d] * R(a, b, cc, d);
          rhs(i, j) += phi[v] * r;
        }
    }

    Mat2d diff = fd - rhs;
    double f2 = 0.0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) f2 += diff(i, j) * diff(i, j);
    sq += f2 * cf.dual_area[v];
  }
  return std::sqrt(sq);
}

}  // namespace a2flow
