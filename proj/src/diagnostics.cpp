#include "a2flow/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "a2flow/curvature.hpp"
#include "a2flow/threads.hpp"

namespace a2flow {

namespace {

bool euclidean_kind(const AmbientManifold& amb) {
  return amb.kind() == AmbientManifold::Kind::Euclidean;
}

// Closest-point distance squared from p to triangle (a, b, c), by Voronoi
// region of the triangle (vertices, edges, interior).
double point_tri_dist2(const Vec3d& p, const Vec3d& a, const Vec3d& b, const Vec3d& c) {
  Vec3d ab = b - a, ac = c - a, ap = p - a;
  double d1 = dot(ab, ap), d2 = dot(ac, ap);
  if (d1 <= 0.0 && d2 <= 0.0) return norm2(p - a);
  Vec3d bp = p - b;
  double d3 = dot(ab, bp), d4 = dot(ac, bp);
  if (d3 >= 0.0 && d4 <= d3) return norm2(p - b);
  double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    double t = d1 / (d1 - d3);
    return norm2(p - (a + ab * t));
  }
  Vec3d cp = p - c;
  double d5 = dot(ab, cp), d6 = dot(ac, cp);
  if (d6 >= 0.0 && d5 <= d6) return norm2(p - c);
  double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    double t = d2 / (d2 - d6);
    return norm2(p - (a + ac * t));
  }
  double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && d4 - d3 >= 0.0 && d5 - d6 >= 0.0) {
    double t = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return norm2(p - (b + (c - b) * t));
  }
  double denom = 1.0 / (va + vb + vc);
  double v = vb * denom, w = vc * denom;
  return norm2(p - (a + ab * v + ac * w));
}

Vec3d circumcenter(const Vec3d& a, const Vec3d& b, const Vec3d& c) {
  Vec3d ab = b - a, ac = c - a;
  Vec3d n = cross(ab, ac);
  double nn = norm2(n);
  if (nn < 1e-30) return (a + b + c) * (1.0 / 3.0);
  Vec3d w = cross(n, ab) * norm2(ac) + cross(ac, n) * norm2(ab);
  return a + w * (0.5 / nn);
}

// Candidate centers in a fixed, documented scan order: vertices by index,
// then (euclidean only) face circumcenters by face index, then the bounding
// box grid z-major / x-fastest. The order breaks argmax ties first-wins.
std::vector<Vec3d> candidate_centers(const Immersion& m, const ConcentrationOptions& opt) {
  std::vector<Vec3d> centers = m.pos;
  if (!euclidean_kind(m.ambient)) return centers;
  const Connectivity& c = m.c();
  if (opt.include_circumcenters) {
    for (int f = 0; f < c.face_count(); ++f) {
      const auto& fc = c.face(f);
      centers.push_back(circumcenter(m.pos[fc[0]], m.pos[fc[1]], m.pos[fc[2]]));
    }
  }
  if (opt.include_grid && opt.grid_resolution > 1) {
    Vec3d lo = m.pos[0], hi = m.pos[0];
    for (const Vec3d& p : m.pos)
      for (int k = 0; k < 3; ++k) {
        lo[k] = std::min(lo[k], p[k]);
        hi[k] = std::max(hi[k], p[k]);
      }
    int res = opt.grid_resolution;
    for (int kz = 0; kz < res; ++kz)
      for (int ky = 0; ky < res; ++ky)
        for (int kx = 0; kx < res; ++kx)
          centers.push_back({lo[0] + (hi[0] - lo[0]) * kx / (res - 1),
                             lo[1] + (hi[1] - lo[1]) * ky / (res - 1),
                             lo[2] + (hi[2] - lo[2]) * kz / (res - 1)});
  }
  return centers;
}

}  // namespace

ConcentrationProfile concentration(const Immersion& m, std::vector<double> radii,
                                   const ConcentrationOptions& opt, double time_stamp) {
  if (radii.empty()) throw DiagnosticsError("concentration: empty radii grid");
  for (size_t k = 0; k < radii.size(); ++k)
    if (radii[k] <= 0.0 || (k > 0 && radii[k] <= radii[k - 1]))
      throw DiagnosticsError("concentration: radii must be positive, strictly increasing");

  CurvatureField cf = CurvatureField::compute(m);
  const int nv = m.c().vertex_count();
  const int K = static_cast<int>(radii.size());
  std::vector<double> mass(nv);
  for (int v = 0; v < nv; ++v) mass[v] = cf.abs_A2[v] * cf.dual_area[v];

  std::vector<Vec3d> centers = candidate_centers(m, opt);
  const int nc = static_cast<int>(centers.size());
  std::vector<double> cum(static_cast<size_t>(nc) * K, 0.0);
  parallel_for(nc, [&](int ci) {
    double* bucket = &cum[static_cast<size_t>(ci) * K];
    const Vec3d& x = centers[ci];
    for (int v = 0; v < nv; ++v) {
      double d = m.ambient.distance(x, m.pos[v]);
      if (d > radii.back()) continue;
      int k = static_cast<int>(std::lower_bound(radii.begin(), radii.end(), d) - radii.begin());
      bucket[k] += mass[v];
    }
    for (int k = 1; k < K; ++k) bucket[k] += bucket[k - 1];
  });

  ConcentrationProfile out;
  out.radii = std::move(radii);
  out.chi.assign(K, -1.0);
  out.center.assign(K, Vec3d{});
  out.time_stamp = time_stamp;
  for (int ci = 0; ci < nc; ++ci)
    for (int k = 0; k < K; ++k)
      if (cum[static_cast<size_t>(ci) * K + k] > out.chi[k]) {
        out.chi[k] = cum[static_cast<size_t>(ci) * K + k];
        out.center[k] = centers[ci];
      }
  return out;
}

LifespanReport lifespan_bound(const Immersion& m, double rho, double eps0, double C,
                              const ConcentrationOptions& opt) {
  if (rho <= 0.0 || eps0 <= 0.0 || C <= 0.0)
    throw DiagnosticsError("lifespan_bound: rho, eps0, C must be positive");
  LifespanReport r;
  r.rho = rho;
  r.eps0 = eps0;
  r.C = C;
  r.chi0 = concentration(m, {rho}, opt).chi[0];
  r.grad_riemann_inf = m.ambient.curvature_bounds(m.pos).sup_nabla_riemann;
  r.area0 = m.total_area();
  r.W0 = energy_W(m);
  double rho4 = rho * rho * rho * rho;
  r.denominator =
      r.chi0 + rho4 * r.grad_riemann_inf * r.grad_riemann_inf * (r.area0 + rho * rho * r.W0);
  if (r.denominator == 0.0) {
    r.T_low = std::numeric_limits<double>::infinity();
  } else {
    double arg = C * eps0 * eps0 / r.denominator;
    if (arg < 1.0) {
      r.T_low = 0.0;
      r.clamped = true;
    } else {
      r.T_low = C * rho4 * std::log(arg);
    }
  }
  return r;
}

RescaleResult blowup_rescale(const Immersion& m, double t, const std::vector<double>& radii,
                             double eps_sq, double ratio, const ConcentrationOptions& opt) {
  ConcentrationProfile prof = concentration(m, radii, opt, t);
  int pick = -1;
  for (size_t k = 0; k < prof.radii.size(); ++k)
    if (prof.chi[k] >= ratio * eps_sq) {
      pick = static_cast<int>(k);
      break;
    }
  if (pick < 0)
    throw DiagnosticsError("blowup_rescale: no radius reaches the concentration threshold");

  RescaleResult out;
  out.t_i = t;
  out.r_i = prof.radii[pick];
  out.x_i = prof.center[pick];
  out.rescaled = m;
  Vec3d ball_center;
  if (euclidean_kind(m.ambient)) {
    for (Vec3d& p : out.rescaled.pos) p = (p - out.x_i) * (1.0 / out.r_i);
    ball_center = Vec3d{};
  } else {
    out.rescaled.ambient =
        AmbientManifold::scaled(std::make_shared<AmbientManifold>(m.ambient), out.r_i);
    ball_center = out.x_i;
  }

  CurvatureField cf = CurvatureField::compute(out.rescaled);
  double acc = 0.0;
  for (int v = 0; v < out.rescaled.c().vertex_count(); ++v)
    if (out.rescaled.ambient.distance(ball_center, out.rescaled.pos[v]) <= 1.0)
      acc += cf.abs_A2[v] * cf.dual_area[v];
  out.unit_ball_energy = acc;
  if (!(acc > 0.0))
    throw DiagnosticsError("blowup_rescale: rescaled unit-ball energy is not positive");
  return out;
}

AreaBoundCheck area_bound_check(const Immersion& m) {
  double inf_k = m.ambient.curvature_bounds(m.pos).inf_sectional;
  if (inf_k <= 0.0)
    throw DiagnosticsError(
        "area_bound_check: ambient has no positive lower sectional curvature bound");
  AreaBoundCheck out;
  out.lhs = m.total_area();
  out.rhs = (2.0 * energy_E(m) + 2.0 * M_PI * m.c().euler_characteristic()) / inf_k;
  out.pass = out.lhs <= out.rhs;
  return out;
}

DensityRatio density_ratio(const Immersion& m, const std::vector<Vec3d>& centers,
                           const std::vector<double>& radii) {
  if (centers.empty() || radii.empty())
    throw DiagnosticsError("density_ratio: centers and radii must be nonempty");
  for (double r : radii)
    if (r <= 0.0) throw DiagnosticsError("density_ratio: radii must be positive");
  CurvatureField cf = CurvatureField::compute(m);
  const int nv = m.c().vertex_count();
  DensityRatio out;
  out.max_ratio = -1.0;
  for (const Vec3d& x : centers)
    for (double r : radii) {
      double area = 0.0;
      for (int v = 0; v < nv; ++v)
        if (m.ambient.distance(x, m.pos[v]) <= r) area += cf.dual_area[v];
      double ratio = area / (r * r);
      if (ratio > out.max_ratio) {
        out.max_ratio = ratio;
        out.center = x;
        out.radius = r;
      }
    }
  return out;
}

double distance_to_surface(const Immersion& m, const Vec3d& x) {
  if (!euclidean_kind(m.ambient))
    throw DiagnosticsError("distance_to_surface: euclidean ambients only");
  const Connectivity& c = m.c();
  double best = std::numeric_limits<double>::infinity();
  for (int f = 0; f < c.face_count(); ++f) {
    const auto& fc = c.face(f);
    best = std::min(best, point_tri_dist2(x, m.pos[fc[0]], m.pos[fc[1]], m.pos[fc[2]]));
  }
  return std::sqrt(best);
}

Immersion sphere_inversion(const Immersion& m, const Vec3d& x0) {
  if (!euclidean_kind(m.ambient))
    throw DiagnosticsError("sphere_inversion: euclidean ambients only");
  double min_len, mean_len, max_len;
  m.edge_length_stats(min_len, mean_len, max_len);
  double rho0 = distance_to_surface(m, x0);
  if (rho0 < 1e-6 * mean_len)
    throw DiagnosticsError("sphere_inversion: center is on (or too close to) the surface");
  Immersion out = m;
  for (Vec3d& p : out.pos) {
    Vec3d d = p - x0;
    p = x0 + d * (1.0 / norm2(d));
  }
  out.validate();
  return out;
}

EmptyBall find_empty_ball(const Immersion& m, int grid_resolution) {
  if (!euclidean_kind(m.ambient))
    throw DiagnosticsError("find_empty_ball: euclidean ambients only");
  if (grid_resolution < 2) throw DiagnosticsError("find_empty_ball: grid too coarse");
  Vec3d lo = m.pos[0], hi = m.pos[0];
  for (const Vec3d& p : m.pos)
    for (int k = 0; k < 3; ++k) {
      lo[k] = std::min(lo[k], p[k]);
      hi[k] = std::max(hi[k], p[k]);
    }
  const int res = grid_resolution;
  const int total = res * res * res;
  std::vector<double> dist(total);
  std::vector<Vec3d> pts(total);
  // z-major / x-fastest scan order; first maximum wins.
  for (int kz = 0; kz < res; ++kz)
    for (int ky = 0; ky < res; ++ky)
      for (int kx = 0; kx < res; ++kx)
        pts[(kz * res + ky) * res + kx] = {lo[0] + (hi[0] - lo[0]) * kx / (res - 1),
                                           lo[1] + (hi[1] - lo[1]) * ky / (res - 1),
                                           lo[2] + (hi[2] - lo[2]) * kz / (res - 1)};
  parallel_for(total, [&](int i) { dist[i] = distance_to_surface(m, pts[i]); });
  EmptyBall out;
  out.radius = -1.0;
  for (int i = 0; i < total; ++i)
    if (dist[i] > out.radius) {
      out.radius = dist[i];
      out.center = pts[i];
    }
  return out;
}

std::vector<InteriorRow> interior_estimate_monitor(const std::vector<InteriorSample>& samples) {
  std::vector<InteriorRow> rows;
  rows.reserve(samples.size());
  for (const InteriorSample& s : samples)
    rows.push_back({s.s, s.max_grad_a, std::sqrt(std::max(0.0, s.s)) * s.max_grad_a});
  return rows;
}

double asphericity(const Immersion& m) {
  const int nv = m.c().vertex_count();
  Vec3d c{};
  for (const Vec3d& p : m.pos) c = c + p;
  c = c * (1.0 / nv);
  double mean = 0.0;
  std::vector<double> r(nv);
  for (int v = 0; v < nv; ++v) {
    r[v] = norm(m.pos[v] - c);
    mean += r[v];
  }
  mean /= nv;
  if (mean == 0.0) return 0.0;
  double var = 0.0;
  for (int v = 0; v < nv; ++v) var += (r[v] - mean) * (r[v] - mean);
  return std::sqrt(var / nv) / mean;
}

}  // namespace a2flow
