#include "a2flow/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <queue>
#include <random>
#include <sstream>

namespace a2flow {

// --- Connectivity ---

Connectivity Connectivity::build(int vertex_count, std::vector<std::array<int, 3>> faces) {
  if (vertex_count <= 0) throw MeshError("mesh has no vertices");
  if (faces.empty()) throw MeshError("mesh has no faces");
  Connectivity c;
  c.nv_ = vertex_count;
  c.faces_ = std::move(faces);

  auto face_str = [&](int f) {
    std::ostringstream ss;
    ss << "face " << f << " (" << c.faces_[f][0] << "," << c.faces_[f][1] << ","
       << c.faces_[f][2] << ")";
    return ss.str();
  };

  int nf = c.face_count();
  for (int f = 0; f < nf; ++f) {
    const auto& fc = c.faces_[f];
    for (int i = 0; i < 3; ++i) {
      if (fc[i] < 0 || fc[i] >= vertex_count)
        throw MeshError("vertex index out of range in " + face_str(f));
    }
    if (fc[0] == fc[1] || fc[1] == fc[2] || fc[2] == fc[0])
      throw MeshError("repeated vertex in " + face_str(f));
  }

  c.halfedges_.resize(3 * static_cast<size_t>(nf));
  std::map<std::pair<int, int>, int> directed;
  for (int f = 0; f < nf; ++f) {
    const auto& fc = c.faces_[f];
    for (int i = 0; i < 3; ++i) {
      int h = 3 * f + i;
      int u = fc[i], v = fc[(i + 1) % 3];
      c.halfedges_[h].origin = u;
      c.halfedges_[h].face = f;
      c.halfedges_[h].next = 3 * f + (i + 1) % 3;
      auto [it, inserted] = directed.insert({{u, v}, h});
      if (!inserted) {
        std::ostringstream ss;
        ss << "directed edge (" << u << "," << v << ") shared by " << face_str(it->second / 3)
           << " and " << face_str(f) << ": non-manifold or inconsistently oriented";
        throw MeshError(ss.str());
      }
    }
  }
  for (const auto& [uv, h] : directed) {
    auto it = directed.find({uv.second, uv.first});
    if (it == directed.end()) {
      std::ostringstream ss;
      ss << "edge (" << uv.first << "," << uv.second << ") has no opposite face: mesh not closed";
      throw MeshError(ss.str());
    }
    c.halfedges_[h].twin = it->second;
  }

  c.vout_.resize(vertex_count);
  c.ring_.resize(vertex_count);
  c.vfaces_.resize(vertex_count);
  std::vector<int> out_degree(vertex_count, 0), first_out(vertex_count, INT32_MAX);
  for (int h = 0; h < c.halfedge_count(); ++h) {
    int v = c.halfedges_[h].origin;
    ++out_degree[v];
    first_out[v] = std::min(first_out[v], h);
  }
  for (int v = 0; v < vertex_count; ++v) {
    if (out_degree[v] == 0) {
      std::ostringstream ss;
      ss << "vertex " << v << " belongs to no face";
      throw MeshError(ss.str());
    }
    int h = first_out[v];
    do {
      c.vout_[v].push_back(h);
      c.ring_[v].push_back(c.destination(h));
      c.vfaces_[v].push_back(c.halfedges_[h].face);
      h = c.halfedges_[c.halfedges_[h].twin].next;
    } while (h != first_out[v] && static_cast<int>(c.vout_[v].size()) <= out_degree[v]);
    if (static_cast<int>(c.vout_[v].size()) != out_degree[v]) {
      std::ostringstream ss;
      ss << "vertex " << v << " has a split fan: non-manifold vertex";
      throw MeshError(ss.str());
    }
  }

  std::vector<char> seen(vertex_count, 0);
  std::queue<int> bfs;
  bfs.push(0);
  seen[0] = 1;
  int reached = 1;
  while (!bfs.empty()) {
    int v = bfs.front();
    bfs.pop();
    for (int u : c.ring_[v])
      if (!seen[u]) {
        seen[u] = 1;
        ++reached;
        bfs.push(u);
      }
  }
  if (reached != vertex_count) {
    std::ostringstream ss;
    ss << "mesh not connected: " << vertex_count - reached << " vertices unreachable from vertex 0";
    throw MeshError(ss.str());
  }
  return c;
}

std::vector<int> Connectivity::two_ring_closure(int v) const {
  std::vector<int> out;
  out.push_back(v);
  for (int u : ring_[v]) out.push_back(u);
  for (int u : ring_[v])
    for (int w : ring_[u]) out.push_back(w);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// --- Immersion ---

double Immersion::face_area(int f) const {
  const auto& fc = c().face(f);
  Vec3d p0 = pos[fc[0]];
  Vec3d e1 = edge_vector(fc[0], fc[1]);
  Vec3d e2 = edge_vector(fc[0], fc[2]);
  Vec3d bary = p0 + (e1 + e2) / 3.0;
  Mat3d g = ambient.metric(bary);
  double a11 = dot_g(g, e1, e1), a12 = dot_g(g, e1, e2), a22 = dot_g(g, e2, e2);
  return 0.5 * std::sqrt(std::max(0.0, a11 * a22 - a12 * a12));
}

double Immersion::total_area() const {
  double s = 0.0;
  for (int f = 0; f < c().face_count(); ++f) s += face_area(f);
  return s;
}

void Immersion::edge_length_stats(double& min_len, double& mean_len, double& max_len) const {
  min_len = std::numeric_limits<double>::infinity();
  max_len = 0.0;
  double sum = 0.0;
  int count = 0;
  for (int h = 0; h < c().halfedge_count(); ++h) {
    if (h > c().halfedge(h).twin) continue;
    int u = c().halfedge(h).origin, v = c().destination(h);
    Vec3d d = edge_vector(u, v);
    Vec3d mid = pos[u] + d * 0.5;
    double len = std::sqrt(std::max(0.0, dot_g(ambient.metric(mid), d, d)));
    min_len = std::min(min_len, len);
    max_len = std::max(max_len, len);
    sum += len;
    ++count;
  }
  mean_len = sum / count;
}

void Immersion::validate() const {
  if (static_cast<int>(pos.size()) != c().vertex_count())
    throw MeshError("position count does not match vertex count");
  for (size_t v = 0; v < pos.size(); ++v)
    if (!std::isfinite(pos[v].x) || !std::isfinite(pos[v].y) || !std::isfinite(pos[v].z)) {
      std::ostringstream ss;
      ss << "vertex " << v << " has a non-finite coordinate";
      throw MeshError(ss.str());
    }
  int nf = c().face_count();
  std::vector<double> area(nf);
  double mean = 0.0;
  for (int f = 0; f < nf; ++f) {
    area[f] = face_area(f);
    mean += area[f];
  }
  mean /= nf;
  double eps = 1e-12 * mean;
  for (int f = 0; f < nf; ++f)
    if (!(area[f] > eps)) {
      std::ostringstream ss;
      ss << "face " << f << " is degenerate: area " << area[f] << " below threshold " << eps;
      throw MeshError(ss.str());
    }
}

// --- generators ---

namespace {

struct FaceList {
  std::vector<Vec3d> pos;
  std::vector<std::array<int, 3>> tri;
};

// Unit icosahedron with outward-oriented faces.
FaceList icosahedron() {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  FaceList m;
  m.pos = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0}, {0, -1, t},  {0, 1, t},
           {0, -1, -t}, {0, 1, -t}, {t, 0, -1},  {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : m.pos) p = normalized(p);
  m.tri = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9},
           {5, 11, 4}, {11, 10, 2}, {10, 7, 6},  {7, 1, 8},  {3, 9, 4},   {3, 4, 2},
           {3, 2, 6},  {3, 6, 8},  {3, 8, 9},   {4, 9, 5},  {2, 4, 11},  {6, 2, 10},
           {8, 6, 7},  {9, 8, 1}};
  return m;
}

void midpoint_subdivide_on_unit_sphere(FaceList& m) {
  std::map<std::pair<int, int>, int> midpoint;
  auto mid = [&](int a, int b) {
    auto key = std::minmax(a, b);
    auto it = midpoint.find({key.first, key.second});
    if (it != midpoint.end()) return it->second;
    int id = static_cast<int>(m.pos.size());
    m.pos.push_back(normalized(m.pos[a] + m.pos[b]));
    midpoint.insert({{key.first, key.second}, id});
    return id;
  };
  std::vector<std::array<int, 3>> next;
  next.reserve(m.tri.size() * 4);
  for (const auto& f : m.tri) {
    int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
    next.push_back({f[0], ab, ca});
    next.push_back({f[1], bc, ab});
    next.push_back({f[2], ca, bc});
    next.push_back({ab, bc, ca});
  }
  m.tri = std::move(next);
}

}  // namespace

Immersion make_sphere(const AmbientManifold& ambient, int subdivisions, double radius,
                      const Vec3d& center) {
  if (subdivisions < 0 || subdivisions > 8) throw MeshError("sphere subdivisions out of range");
  if (!(radius > 0)) throw MeshError("sphere radius must be positive");
  FaceList base = icosahedron();
  for (int s = 0; s < subdivisions; ++s) midpoint_subdivide_on_unit_sphere(base);
  Immersion m;
  m.ambient = ambient;
  m.conn = std::make_shared<Connectivity>(
      Connectivity::build(static_cast<int>(base.pos.size()), base.tri));
  m.pos.reserve(base.pos.size());
  for (const auto& p : base.pos) m.pos.push_back(center + p * radius);
  m.validate();
  return m;
}

Immersion make_torus(const AmbientManifold& ambient, int n_major, int n_minor,
                     double major_radius, double minor_radius) {
  if (n_major < 3 || n_minor < 3) throw MeshError("torus needs at least 3x3 samples");
  if (!(major_radius > minor_radius && minor_radius > 0))
    throw MeshError("torus radii must satisfy R > r > 0");
  Immersion m;
  m.ambient = ambient;
  std::vector<Vec3d> pos;
  pos.reserve(static_cast<size_t>(n_major) * n_minor);
  for (int i = 0; i < n_major; ++i)
    for (int j = 0; j < n_minor; ++j) {
      double u = 2.0 * M_PI * i / n_major;
      double v = 2.0 * M_PI * j / n_minor;
      double w = major_radius + minor_radius * std::cos(v);
      pos.push_back({w * std::cos(u), w * std::sin(u), minor_radius * std::sin(v)});
    }
  std::vector<std::array<int, 3>> tri;
  tri.reserve(2 * static_cast<size_t>(n_major) * n_minor);
  auto vid = [&](int i, int j) { return (i % n_major) * n_minor + (j % n_minor); };
  for (int i = 0; i < n_major; ++i)
    for (int j = 0; j < n_minor; ++j) {
      int a = vid(i, j), b = vid(i + 1, j), c = vid(i + 1, j + 1), d = vid(i, j + 1);
      tri.push_back({a, b, c});
      tri.push_back({a, c, d});
    }
  m.conn = std::make_shared<Connectivity>(Connectivity::build(static_cast<int>(pos.size()), tri));
  m.pos = std::move(pos);
  m.validate();
  return m;
}

Immersion make_flat_subtorus(const AmbientManifold& flat_torus_ambient, int n_u, int n_v,
                             double height) {
  if (flat_torus_ambient.kind() != AmbientManifold::Kind::FlatTorus)
    throw MeshError("flat subtorus requires a flat-torus ambient");
  if (n_u < 3 || n_v < 3) throw MeshError("subtorus needs at least 3x3 samples");
  Vec3d L = flat_torus_ambient.periods();
  Immersion m;
  m.ambient = flat_torus_ambient;
  std::vector<Vec3d> pos;
  pos.reserve(static_cast<size_t>(n_u) * n_v);
  for (int i = 0; i < n_u; ++i)
    for (int j = 0; j < n_v; ++j)
      pos.push_back({L.x * i / n_u, L.y * j / n_v, height});
  std::vector<std::array<int, 3>> tri;
  auto vid = [&](int i, int j) { return (i % n_u) * n_v + (j % n_v); };
  for (int i = 0; i < n_u; ++i)
    for (int j = 0; j < n_v; ++j) {
      int a = vid(i, j), b = vid(i + 1, j), c = vid(i + 1, j + 1), d = vid(i, j + 1);
      tri.push_back({a, b, c});
      tri.push_back({a, c, d});
    }
  m.conn = std::make_shared<Connectivity>(Connectivity::build(static_cast<int>(pos.size()), tri));
  m.pos = std::move(pos);
  m.validate();
  return m;
}

Immersion make_clifford_torus(const AmbientManifold& sphere_ambient, int n_u, int n_v) {
  if (sphere_ambient.kind() != AmbientManifold::Kind::Sphere)
    throw MeshError("clifford torus requires a sphere ambient");
  if (n_u < 3 || n_v < 3) throw MeshError("clifford torus needs at least 3x3 samples");
  double r = sphere_ambient.sphere_radius();
  double s2 = r / std::sqrt(2.0);
  Immersion m;
  m.ambient = sphere_ambient;
  std::vector<Vec3d> pos;
  pos.reserve(static_cast<size_t>(n_u) * n_v);
  for (int i = 0; i < n_u; ++i)
    for (int j = 0; j < n_v; ++j) {
      double u = 2.0 * M_PI * i / n_u;
      double v = 2.0 * M_PI * j / n_v;
      // Point on the round 3-sphere in R^4, then down the stereographic
      // chart x = r xi / (r - w).
      double xi1 = s2 * std::cos(u), xi2 = s2 * std::sin(u), xi3 = s2 * std::cos(v);
      double w = s2 * std::sin(v);
      double denom = r - w;  // never near zero: |w| <= r/sqrt(2)
      pos.push_back({r * xi1 / denom, r * xi2 / denom, r * xi3 / denom});
    }
  std::vector<std::array<int, 3>> tri;
  auto vid = [&](int i, int j) { return (i % n_u) * n_v + (j % n_v); };
  for (int i = 0; i < n_u; ++i)
    for (int j = 0; j < n_v; ++j) {
      int a = vid(i, j), b = vid(i + 1, j), c = vid(i + 1, j + 1), d = vid(i, j + 1);
      tri.push_back({a, b, c});
      tri.push_back({a, c, d});
    }
  m.conn = std::make_shared<Connectivity>(Connectivity::build(static_cast<int>(pos.size()), tri));
  m.pos = std::move(pos);
  m.validate();
  return m;
}

// --- vertex normals ---

std::vector<Vec3d> vertex_normals(const Immersion& m) {
  const Connectivity& c = m.c();
  std::vector<Vec3d> normals(c.vertex_count());
  for (int v = 0; v < c.vertex_count(); ++v) {
    Vec3d acc{};
    for (int f : c.vertex_faces(v)) {
      const auto& fc = c.face(f);
      Vec3d p0 = m.pos[fc[0]];
      Vec3d e1 = m.edge_vector(fc[0], fc[1]);
      Vec3d e2 = m.edge_vector(fc[0], fc[2]);
      Vec3d bary = p0 + (e1 + e2) / 3.0;
      Mat3d g = m.ambient.metric(bary);
      Vec3d n = cross_g(g, e1, e2);
      double nn = norm_g(g, n);
      double a11 = dot_g(g, e1, e1), a12 = dot_g(g, e1, e2), a22 = dot_g(g, e2, e2);
      double area = 0.5 * std::sqrt(std::max(0.0, a11 * a22 - a12 * a12));
      acc += n * (area / nn);
    }
    Mat3d gv = m.ambient.metric(m.pos[v]);
    normals[v] = acc / norm_g(gv, acc);
  }
  return normals;
}

// --- perturb / refine ---

Immersion perturb(const Immersion& m, PerturbMode mode, double amplitude, uint64_t seed) {
  std::vector<Vec3d> normals = vertex_normals(m);
  Immersion out = m;
  int nv = m.c().vertex_count();
  if (mode == PerturbMode::Harmonic) {
    Vec3d centroid{};
    for (const auto& p : m.pos) centroid += p;
    centroid = centroid / double(nv);
    for (int v = 0; v < nv; ++v) {
      Vec3d d = m.pos[v] - centroid;
      double rr = norm(d);
      double ct = rr > 0 ? d.z / rr : 0.0;
      double field = 0.5 * (3.0 * ct * ct - 1.0);
      out.pos[v] += normals[v] * (amplitude * field);
    }
  } else {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int v = 0; v < nv; ++v) out.pos[v] += normals[v] * (amplitude * uni(rng));
  }
  out.validate();
  return out;
}

Immersion refine(const Immersion& m) {
  const Connectivity& c = m.c();
  std::vector<Vec3d> pos = m.pos;
  // One new vertex per undirected edge, indexed in half-edge order.
  std::vector<int> edge_vertex(c.halfedge_count(), -1);
  for (int h = 0; h < c.halfedge_count(); ++h) {
    int t = c.halfedge(h).twin;
    if (h > t) continue;
    int u = c.halfedge(h).origin, v = c.destination(h);
    Vec3d mid = m.pos[u] + m.edge_vector(u, v) * 0.5;
    int id = static_cast<int>(pos.size());
    pos.push_back(m.ambient.wrap(mid));
    edge_vertex[h] = edge_vertex[t] = id;
  }
  std::vector<std::array<int, 3>> tri;
  tri.reserve(4 * static_cast<size_t>(c.face_count()));
  for (int f = 0; f < c.face_count(); ++f) {
    const auto& fc = c.face(f);
    int ab = edge_vertex[3 * f], bc = edge_vertex[3 * f + 1], ca = edge_vertex[3 * f + 2];
    tri.push_back({fc[0], ab, ca});
    tri.push_back({fc[1], bc, ab});
    tri.push_back({fc[2], ca, bc});
    tri.push_back({ab, bc, ca});
  }
  Immersion out;
  out.ambient = m.ambient;
  out.conn = std::make_shared<Connectivity>(Connectivity::build(static_cast<int>(pos.size()), tri));
  out.pos = std::move(pos);
  out.validate();
  return out;
}

}  // namespace a2flow
