#include "a2flow/curvature.hpp"

#include <algorithm>
#include <cmath>

namespace a2flow {

namespace {

struct PosView {
  const std::vector<Vec3d>* p;
  const Vec3d& operator()(int v) const { return (*p)[v]; }
};

// Ambient (1,1) extension of the shape operator at vertex v: maps chart
// vectors, annihilates the normal, acts as S on the tangent plane.
Mat3d ambient_shape(const CurvatureField& cf, const Mat3d& gv, int v) {
  const Vec3d t[2] = {cf.tangent1[v], cf.tangent2[v]};
  Mat3d out{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      Vec3d flat = gv * t[j];  // lowered index
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) out(a, b) += cf.shape[v](i, j) * t[i][a] * flat[b];
    }
  return out;
}

}  // namespace

CurvatureField CurvatureField::compute(const Immersion& m) {
  const Connectivity& c = m.c();
  const AmbientManifold& amb = m.ambient;
  PosView pos{&m.pos};
  CurvatureField cf;
  int nf = c.face_count(), nv = c.vertex_count();

  cf.face_metric.resize(nf);
  cf.face_area.resize(nf);
  cf.face_normal.resize(nf);
  for (int f = 0; f < nf; ++f) {
    auto fg = kern::face_geom<double>(c, amb, pos, f);
    Mat2d gram;
    gram(0, 0) = dot_g(fg.g, fg.e1, fg.e1);
    gram(0, 1) = dot_g(fg.g, fg.e1, fg.e2);
    gram(1, 0) = gram(0, 1);
    gram(1, 1) = dot_g(fg.g, fg.e2, fg.e2);
    cf.face_metric[f] = gram;
    cf.face_area[f] = fg.area;
    cf.face_normal[f] = fg.normal;
    cf.total_area += fg.area;
  }

  cf.normal.resize(nv);
  cf.tangent1.resize(nv);
  cf.tangent2.resize(nv);
  cf.shape.resize(nv);
  cf.abs_A2.resize(nv);
  cf.mean_h.resize(nv);
  cf.gauss_k.resize(nv);
  cf.dual_area.resize(nv);
  for (int v = 0; v < nv; ++v) {
    Vec3d nu = kern::vertex_normal<double>(c, amb, pos, v);
    Mat3d gv = amb.metric(m.pos[v]);
    Vec3d t1, t2;
    kern::tangent_frame(gv, nu, t1, t2);
    Mat2d S = kern::shape_operator(c, amb, pos, v, nu, t1, t2);
    cf.normal[v] = nu;
    cf.tangent1[v] = t1;
    cf.tangent2[v] = t2;
    cf.shape[v] = S;
    cf.abs_A2[v] = S(0, 0) * S(0, 0) + S(0, 1) * S(0, 1) + S(1, 0) * S(1, 0) + S(1, 1) * S(1, 1);
    cf.mean_h[v] = trace(S);
    cf.dual_area[v] = kern::mixed_dual_area<double>(c, amb, pos, v);

    double angle_sum = 0.0;
    for (int h : c.vertex_out_halfedges(v)) {
      int f = c.halfedge(h).face;
      int u = c.destination(h);
      int w = c.destination(c.halfedge(h).next);
      auto fg = kern::face_geom<double>(c, amb, pos, f);
      Vec3d a = amb.displacement(m.pos[v], m.pos[u]);
      Vec3d b = amb.displacement(m.pos[v], m.pos[w]);
      double cosv = dot_g(fg.g, a, b) / std::sqrt(dot_g(fg.g, a, a) * dot_g(fg.g, b, b));
      angle_sum += std::acos(std::clamp(cosv, -1.0, 1.0));
    }
    cf.gauss_k[v] = (2.0 * M_PI - angle_sum) / cf.dual_area[v];
  }
  return cf;
}

double energy_E(const Immersion& m) {
  PosView pos{&m.pos};
  double e = 0.0;
  for (int v = 0; v < m.c().vertex_count(); ++v)
    e += kern::vertex_energy<double>(m.c(), m.ambient, pos, v);
  return e;
}

double energy_E(const CurvatureField& f) {
  double e = 0.0;
  for (size_t v = 0; v < f.abs_A2.size(); ++v) e += f.abs_A2[v] * f.dual_area[v];
  return e;
}

double energy_W(const CurvatureField& f) {
  double w = 0.0;
  for (size_t v = 0; v < f.mean_h.size(); ++v) w += f.mean_h[v] * f.mean_h[v] * f.dual_area[v];
  return 0.25 * w;
}

double energy_W(const Immersion& m) { return energy_W(CurvatureField::compute(m)); }

namespace {

// Sum of angle defects, accumulated directly so no dual-area division
// enters: per face the three corner angles sum to pi exactly (they are the
// angles of one flat triangle with the face's Gram matrix), so the total
// telescopes to 2 pi V - pi F = 2 pi chi up to acos rounding.
double angle_defect_sum(const Immersion& m) {
  const Connectivity& c = m.c();
  PosView pos{&m.pos};
  double defect_sum = 0.0;
  for (int v = 0; v < c.vertex_count(); ++v) {
    double angle_sum = 0.0;
    for (int h : c.vertex_out_halfedges(v)) {
      int f = c.halfedge(h).face;
      int u = c.destination(h);
      int w = c.destination(c.halfedge(h).next);
      auto fg = kern::face_geom<double>(c, m.ambient, pos, f);
      Vec3d a = m.ambient.displacement(m.pos[v], m.pos[u]);
      Vec3d b = m.ambient.displacement(m.pos[v], m.pos[w]);
      double cosv = dot_g(fg.g, a, b) / std::sqrt(dot_g(fg.g, a, a) * dot_g(fg.g, b, b));
      angle_sum += std::acos(std::clamp(cosv, -1.0, 1.0));
    }
    defect_sum += 2.0 * M_PI - angle_sum;
  }
  return defect_sum;
}

}  // namespace

double gauss_bonnet_residual(const Immersion& m) {
  return std::fabs(angle_defect_sum(m) - 2.0 * M_PI * m.c().euler_characteristic());
}

double gauss_equation_deficit(const Immersion& m) {
  CurvatureField cf = CurvatureField::compute(m);
  double E = energy_E(cf), W = energy_W(cf);
  return E - 4.0 * W + 4.0 * M_PI * m.c().euler_characteristic();
}

std::vector<double> codazzi_residual_field(const Immersion& m) {
  const Connectivity& c = m.c();
  const AmbientManifold& amb = m.ambient;
  CurvatureField cf = CurvatureField::compute(m);
  PosView pos{&m.pos};
  std::vector<double> face_density(c.face_count());
  for (int f = 0; f < c.face_count(); ++f) {
    const auto& fc = c.face(f);
    auto fg = kern::face_geom<double>(c, amb, pos, f);
    auto gam = amb.christoffels(fg.bary);
    Mat3d S0 = ambient_shape(cf, amb.metric(m.pos[fc[0]]), fc[0]);
    Mat3d S1 = ambient_shape(cf, amb.metric(m.pos[fc[1]]), fc[1]);
    Mat3d S2 = ambient_shape(cf, amb.metric(m.pos[fc[2]]), fc[2]);

    // Covariant difference of the (1,1) tensor along an edge from corner 0.
    auto cov_diff = [&](const Mat3d& St, const Vec3d& d) {
      Mat3d out = St - S0;
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
          double corr = 0.0;
          for (int i = 0; i < 3; ++i)
            for (int e = 0; e < 3; ++e)
              corr += gam[a](i, e) * d[i] * S0(e, b) - gam[e](i, b) * d[i] * S0(a, e);
          out(a, b) += corr;
        }
      return out;
    };
    Mat3d d1S = cov_diff(S1, fg.e1);
    Mat3d d2S = cov_diff(S2, fg.e2);

    auto project = [&](const Vec3d& x) { return x - fg.normal * dot_g(fg.g, fg.normal, x); };
    Vec3d asym = d1S * project(fg.e2) - d2S * project(fg.e1);
    asym = project(asym);
    face_density[f] = norm_g(fg.g, asym) / (2.0 * fg.area);
  }
  // Vertex value: area-weighted average of the incident face densities.
  std::vector<double> field(c.vertex_count());
  for (int v = 0; v < c.vertex_count(); ++v) {
    double num = 0.0, den = 0.0;
    for (int f : c.vertex_faces(v)) {
      num += face_density[f] * cf.face_area[f];
      den += cf.face_area[f];
    }
    field[v] = num / den;
  }
  return field;
}

double codazzi_residual(const Immersion& m) {
  std::vector<double> field = codazzi_residual_field(m);
  PosView pos{&m.pos};
  double acc = 0.0;
  for (size_t v = 0; v < field.size(); ++v)
    acc += field[v] * field[v] *
           kern::mixed_dual_area<double>(m.c(), m.ambient, pos, static_cast<int>(v));
  return std::sqrt(acc);
}

double shape_gradient_max(const Immersion& m) {
  const Connectivity& c = m.c();
  const AmbientManifold& amb = m.ambient;
  CurvatureField cf = CurvatureField::compute(m);
  PosView pos{&m.pos};
  double worst = 0.0;
  for (int f = 0; f < c.face_count(); ++f) {
    const auto& fc = c.face(f);
    auto fg = kern::face_geom<double>(c, amb, pos, f);
    auto gam = amb.christoffels(fg.bary);
    Mat3d S0 = ambient_shape(cf, amb.metric(m.pos[fc[0]]), fc[0]);
    Mat3d S1 = ambient_shape(cf, amb.metric(m.pos[fc[1]]), fc[1]);
    Mat3d S2 = ambient_shape(cf, amb.metric(m.pos[fc[2]]), fc[2]);
    auto cov_diff = [&](const Mat3d& St, const Vec3d& d) {
      Mat3d out = St - S0;
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
          double corr = 0.0;
          for (int i = 0; i < 3; ++i)
            for (int e = 0; e < 3; ++e)
              corr += gam[a](i, e) * d[i] * S0(e, b) - gam[e](i, b) * d[i] * S0(a, e);
          out(a, b) += corr;
        }
      return out;
    };
    // Project both tensor slots onto the face tangent plane.
    Vec3d nu_flat = fg.g * fg.normal;
    Mat3d proj{};
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) proj(a, b) = (a == b ? 1.0 : 0.0) - fg.normal[a] * nu_flat[b];
    Mat3d D[2] = {proj * cov_diff(S1, fg.e1) * proj, proj * cov_diff(S2, fg.e2) * proj};

    double g11 = dot_g(fg.g, fg.e1, fg.e1);
    double g12 = dot_g(fg.g, fg.e1, fg.e2);
    double g22 = dot_g(fg.g, fg.e2, fg.e2);
    double det = g11 * g22 - g12 * g12;
    double gi[2][2] = {{g22 / det, -g12 / det}, {-g12 / det, g11 / det}};
    Mat3d ginv = inverse(fg.g);
    auto inner = [&](const Mat3d& M, const Mat3d& N) {
      double acc = 0.0;
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          for (int cc = 0; cc < 3; ++cc)
            for (int d = 0; d < 3; ++d) acc += fg.g(a, cc) * ginv(b, d) * M(a, b) * N(cc, d);
      return acc;
    };
    double mag2 = 0.0;
    for (int k = 0; k < 2; ++k)
      for (int l = 0; l < 2; ++l) mag2 += gi[k][l] * inner(D[k], D[l]);
    worst = std::max(worst, mag2);
  }
  return std::sqrt(std::max(0.0, worst));
}

WhiteCheck white_multiple_check(const Immersion& m) {
  double w = angle_defect_sum(m) / (4.0 * M_PI);
  WhiteCheck out;
  out.nearest_multiple = static_cast<int>(std::lround(w));
  out.deviation = w - out.nearest_multiple;
  if (std::fabs(out.deviation) > 0.25)
    throw MeshError("curvature integral is not near a multiple of 4 pi; mesh inconsistent");
  return out;
}

}  // namespace a2flow
