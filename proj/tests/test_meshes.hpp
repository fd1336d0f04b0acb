#pragma once

// Shared test fixtures that are not part of the library proper.

#include "a2flow/mesh.hpp"

namespace a2flow::testing {

// Genus-2 surface: connected sum of two structured tori. One face is removed
// from each torus and the two triangular boundary loops are bridged by a
// six-face band; Euler characteristic drops to -2. Positions keep every face
// nondegenerate (self-intersection is fine for an immersion).
inline Immersion make_genus2(const AmbientManifold& ambient) {
  Immersion a = make_torus(ambient, 16, 16, 2.0, 0.5);
  int nv = a.c().vertex_count();
  int removed_a = 0;                  // face near major angle u = 0
  int removed_b = 2 * (8 * 16);       // face near major angle u = pi on the copy

  std::vector<Vec3d> pos = a.pos;
  for (const Vec3d& p : a.pos) pos.push_back(p + Vec3d{5.5, 0.0, 0.0});

  std::vector<std::array<int, 3>> tri;
  for (int f = 0; f < a.c().face_count(); ++f) {
    if (f == removed_a) continue;
    tri.push_back(a.c().face(f));
  }
  for (int f = 0; f < a.c().face_count(); ++f) {
    if (f == removed_b) continue;
    const auto& fc = a.c().face(f);
    tri.push_back({fc[0] + nv, fc[1] + nv, fc[2] + nv});
  }
  const auto& fa = a.c().face(removed_a);
  const auto& fb = a.c().face(removed_b);
  // Band between loop A traversed forward and loop B traversed reversed.
  std::array<int, 3> la = {fa[0], fa[1], fa[2]};
  std::array<int, 3> lb = {fb[0] + nv, fb[2] + nv, fb[1] + nv};
  for (int i = 0; i < 3; ++i) {
    int j = (i + 1) % 3;
    tri.push_back({la[i], la[j], lb[i]});
    tri.push_back({la[j], lb[j], lb[i]});
  }
  Immersion m;
  m.ambient = ambient;
  m.conn = std::make_shared<Connectivity>(Connectivity::build(2 * nv, std::move(tri)));
  m.pos = std::move(pos);
  m.validate();
  return m;
}

}  // namespace a2flow::testing
