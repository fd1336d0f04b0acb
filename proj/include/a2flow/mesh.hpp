#pragma once

// Closed oriented triangle meshes immersed in an ambient chart. The
// connectivity is a half-edge structure built once and shared; positions are
// chart coordinates and are the only state that changes during a flow.

#include <array>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "a2flow/ambient.hpp"
#include "a2flow/linalg.hpp"

namespace a2flow {

struct MeshError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct HalfEdge {
  int origin = -1;  // source vertex
  int face = -1;
  int next = -1;  // next half-edge inside the face
  int twin = -1;  // opposite half-edge (always present: meshes are closed)
};

class Connectivity {
 public:
  // Validates: indices in range, faces nondegenerate as simplices, every
  // directed edge unique (manifold + consistently oriented), every edge
  // twinned (closed), single vertex fan per vertex, connected.
  // Throws MeshError naming the offending simplex otherwise.
  static Connectivity build(int vertex_count, std::vector<std::array<int, 3>> faces);

  int vertex_count() const { return nv_; }
  int face_count() const { return static_cast<int>(faces_.size()); }
  int edge_count() const { return static_cast<int>(halfedges_.size()) / 2; }
  int euler_characteristic() const { return nv_ - edge_count() + face_count(); }

  const std::vector<std::array<int, 3>>& faces() const { return faces_; }
  const std::array<int, 3>& face(int f) const { return faces_[f]; }
  const HalfEdge& halfedge(int h) const { return halfedges_[h]; }
  int halfedge_count() const { return static_cast<int>(halfedges_.size()); }
  int destination(int h) const { return halfedges_[halfedges_[h].next].origin; }

  // Out-half-edges around a vertex in fan order, starting from the smallest
  // half-edge id: the canonical iteration order used everywhere (it makes
  // taped and untaped evaluations bitwise identical).
  const std::vector<int>& vertex_out_halfedges(int v) const { return vout_[v]; }
  // Neighbor vertices in the same canonical order.
  const std::vector<int>& one_ring(int v) const { return ring_[v]; }
  // Incident faces in the same canonical order.
  const std::vector<int>& vertex_faces(int v) const { return vfaces_[v]; }
  int valence(int v) const { return static_cast<int>(ring_[v].size()); }

  // Vertices whose positions influence quantities at v that depend on the
  // 1-ring normals: v, its ring, and the rings of the ring. Sorted unique.
  std::vector<int> two_ring_closure(int v) const;

 private:
  int nv_ = 0;
  std::vector<std::array<int, 3>> faces_;
  std::vector<HalfEdge> halfedges_;  // 3 per face, face f owns 3f..3f+2
  std::vector<std::vector<int>> vout_, ring_, vfaces_;
};

struct Immersion {
  AmbientManifold ambient;
  std::shared_ptr<const Connectivity> conn;
  std::vector<Vec3d> pos;  // chart coordinates per vertex

  const Connectivity& c() const { return *conn; }

  // Chart displacement corner->corner, wrap-aware on periodic charts.
  Vec3d edge_vector(int from_vertex, int to_vertex) const {
    return ambient.displacement(pos[from_vertex], pos[to_vertex]);
  }

  // Ambient area of face f (metric at the face barycenter).
  double face_area(int f) const;
  double total_area() const;
  double mean_face_area() const { return total_area() / c().face_count(); }
  // Ambient lengths over all edges.
  void edge_length_stats(double& min_len, double& mean_len, double& max_len) const;

  // Nondegeneracy: all positions finite, every face area above
  // 1e-12 * mean face area. Throws MeshError naming the face.
  void validate() const;
};

// Icosahedral geodesic sphere: 10 * 4^subdivisions + 2 vertices, positions
// on the chart sphere |x - center| = radius, outward orientation.
Immersion make_sphere(const AmbientManifold& ambient, int subdivisions, double radius,
                      const Vec3d& center = {});

// Structured torus of revolution about the z axis, outward orientation.
Immersion make_torus(const AmbientManifold& ambient, int n_major = 16, int n_minor = 16,
                     double major_radius = 2.0, double minor_radius = 0.5);

// Coordinate 2-torus {z = height} inside a flat 3-torus: totally geodesic,
// vanishing second fundamental form.
Immersion make_flat_subtorus(const AmbientManifold& flat_torus_ambient, int n_u, int n_v,
                             double height = 0.0);

// Minimal torus of the round 3-sphere (both circle radii r/sqrt(2)), mapped
// through the stereographic chart.
Immersion make_clifford_torus(const AmbientManifold& sphere_ambient, int n_u = 32, int n_v = 32);

enum class PerturbMode { Harmonic, Random };

// Displaces vertices along their unit normals. Harmonic: amplitude times the
// degree-2 zonal harmonic (3 cos^2 theta - 1)/2 about the chart centroid.
// Random: amplitude times iid uniform(-1,1), mt19937_64(seed), vertex order.
Immersion perturb(const Immersion& m, PerturbMode mode, double amplitude, uint64_t seed = 0);

// Loop-style 1->4 midpoint split, no smoothing: new vertices sit at
// wrap-aware edge midpoints.
Immersion refine(const Immersion& m);

// Area-weighted vertex normals, unit in the ambient metric.
std::vector<Vec3d> vertex_normals(const Immersion& m);

// --- mesh_io ---

// Wavefront OBJ, 1-based indices. Parse errors carry file:line.
Immersion load_obj(const AmbientManifold& ambient, const std::string& path);
void save_obj(const Immersion& m, const std::string& path);

// ASCII PLY with double-precision coordinates plus named per-vertex scalar
// channels (the writers emit abs_A2, abs_H2, gauss_k).
struct PlyChannel {
  std::string name;
  std::vector<double> value;
};
void save_ply(const Immersion& m, const std::string& path,
              const std::vector<PlyChannel>& channels = {});
Immersion load_ply(const AmbientManifold& ambient, const std::string& path,
                   std::vector<PlyChannel>* channels = nullptr);

}  // namespace a2flow
