#include "a2flow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "a2flow/curvature.hpp"
#include "a2flow/gradient.hpp"

namespace a2flow {

namespace {

struct PosView {
  const std::vector<Vec3d>* p;
  const Vec3d& operator()(int v) const { return (*p)[v]; }
};

// Smooth dictionary: e_k, x_l e_k, x_l x_m e_k (l <= m), 30 fields total.
// spec = (k, l, m); l or m = -1 drops the factor.
struct FieldSpec {
  int k, l, m;
};

const std::vector<FieldSpec>& dictionary() {
  static const std::vector<FieldSpec> specs = [] {
    std::vector<FieldSpec> out;
    for (int k = 0; k < 3; ++k) out.push_back({k, -1, -1});
    for (int k = 0; k < 3; ++k)
      for (int l = 0; l < 3; ++l) out.push_back({k, l, -1});
    for (int k = 0; k < 3; ++k)
      for (int l = 0; l < 3; ++l)
        for (int m = l; m < 3; ++m) out.push_back({k, l, m});
    return out;
  }();
  return specs;
}

double max_abs_a2(const CurvatureField& cf) {
  double worst = 0.0;
  for (double a : cf.abs_A2) worst = std::max(worst, a);
  return worst;
}

HistoryRow state_row(const CurvatureField& cf) {
  HistoryRow row;
  row.E = energy_E(cf);
  row.W = energy_W(cf);
  row.area = cf.total_area;
  row.max_a2 = max_abs_a2(cf);
  return row;
}

// Area-weighted tangential smoothing; applied only when the energy does not
// increase and the mesh stays valid.
bool tangential_smooth(Immersion& m) {
  CurvatureField cf = CurvatureField::compute(m);
  double e0 = energy_E(cf);
  const Connectivity& c = m.c();
  Immersion trial = m;
  for (int v = 0; v < c.vertex_count(); ++v) {
    Vec3d avg{};
    double wsum = 0.0;
    for (int f : c.vertex_faces(v)) {
      const auto& fc = c.face(f);
      Vec3d d = (m.ambient.displacement(m.pos[v], m.pos[fc[0]]) +
                 m.ambient.displacement(m.pos[v], m.pos[fc[1]]) +
                 m.ambient.displacement(m.pos[v], m.pos[fc[2]])) *
                (1.0 / 3.0);
      avg = avg + d * cf.face_area[f];
      wsum += cf.face_area[f];
    }
    Vec3d delta = avg * (1.0 / wsum);
    Mat3d g = m.ambient.metric(m.pos[v]);
    delta = delta - cf.normal[v] * dot_g(g, cf.normal[v], delta);
    trial.pos[v] = m.pos[v] + delta * 0.5;
  }
  try {
    trial.validate();
    if (energy_E(trial) <= e0) {
      m = std::move(trial);
      return true;
    }
  } catch (const MeshError&) {
  }
  return false;
}

}  // namespace

const char* to_string(FlowStatus s) {
  switch (s) {
    case FlowStatus::Running: return "running";
    case FlowStatus::Stationary: return "stationary";
    case FlowStatus::Degenerate: return "degenerate";
    case FlowStatus::Concentrated: return "concentrated";
    case FlowStatus::MaxSteps: return "max-steps";
  }
  return "unknown";
}

double weak_gradient_norm(const Immersion& m, const std::vector<Vec3d>& grad) {
  const Connectivity& c = m.c();
  const int nv = c.vertex_count();
  if (static_cast<int>(grad.size()) != nv)
    throw FlowError("weak_gradient_norm: field size does not match the mesh");
  const auto& specs = dictionary();
  const int nf = static_cast<int>(specs.size());
  std::vector<double> vv(nf, 0.0), gv(nf, 0.0);
  PosView pos{&m.pos};
  for (int v = 0; v < nv; ++v) {
    const Vec3d& x = m.pos[v];
    double dual = kern::mixed_dual_area<double>(c, m.ambient, pos, v);
    Mat3d g = m.ambient.metric(x);
    for (int i = 0; i < nf; ++i) {
      const FieldSpec& sp = specs[i];
      double coeff = 1.0;
      if (sp.l >= 0) coeff *= x[sp.l];
      if (sp.m >= 0) coeff *= x[sp.m];
      Vec3d V{};
      V[sp.k] = coeff;
      vv[i] += dot_g(g, V, V) * dual;
      gv[i] += dot_g(g, grad[v], V) * dual;
    }
  }
  double worst = 0.0;
  for (int i = 0; i < nf; ++i)
    if (vv[i] > 0.0) worst = std::max(worst, std::fabs(gv[i]) / std::sqrt(vv[i]));
  return worst;
}

// Normal projection of the vertex gradient in the ambient metric, plus its
// L2 norm against the mixed dual areas. The projection is the flow velocity.
static std::vector<Vec3d> normal_velocity(const Immersion& m, const std::vector<Vec3d>& grad,
                                          double& l2) {
  const Connectivity& c = m.c();
  const int nv = c.vertex_count();
  std::vector<Vec3d> nu = vertex_normals(m);
  std::vector<Vec3d> vel(nv);
  PosView pos{&m.pos};
  double acc = 0.0;
  for (int v = 0; v < nv; ++v) {
    Mat3d g = m.ambient.metric(m.pos[v]);
    double coeff = dot_g(g, grad[v], nu[v]);
    vel[v] = nu[v] * coeff;
    acc += coeff * coeff * kern::mixed_dual_area<double>(c, m.ambient, pos, v);
  }
  l2 = std::sqrt(acc);
  return vel;
}

FlowState make_flow_state(Immersion f0) {
  f0.validate();
  FlowState s;
  s.mesh = std::move(f0);
  CurvatureField cf = CurvatureField::compute(s.mesh);
  HistoryRow row = state_row(cf);
  GradientField g = grad_E_variational(s.mesh);
  double vl2 = 0.0;
  normal_velocity(s.mesh, g.vec, vl2);
  row.grad_norm = vl2;
  s.history.push_back(std::move(row));
  return s;
}

void flow_step(FlowState& s, const StepPolicy& p) {
  if (s.status != FlowStatus::Running) throw FlowError("flow_step: status is not running");
  if (!(p.beta > 0.0 && p.beta < 1.0) || !(p.c_cfl > 0.0))
    throw FlowError("flow_step: policy requires 0 < beta < 1 and c_cfl > 0");
  if (!(p.armijo > 0.0 && p.armijo < 1.0))
    throw FlowError("flow_step: policy requires 0 < armijo < 1");

  CurvatureField cf0 = CurvatureField::compute(s.mesh);
  double e0 = energy_E(cf0);
  GradientField g = grad_E_variational(s.mesh);
  double vl2 = 0.0;
  std::vector<Vec3d> vel = normal_velocity(s.mesh, g.vec, vl2);

  s.last_weak_norm = weak_gradient_norm(s.mesh, g.vec);
  if (s.last_weak_norm <= p.stationarity_factor * e0 / std::sqrt(cf0.total_area)) {
    s.status = FlowStatus::Stationary;
    return;
  }
  if (s.step >= p.max_steps) {
    s.status = FlowStatus::MaxSteps;
    return;
  }

  if (s.dt <= 0.0) {
    double mn, me, mx;
    s.mesh.edge_length_stats(mn, me, mx);
    double ma = max_abs_a2(cf0);
    s.dt = p.c_cfl * mn * mn * mn * mn / ((1.0 + ma) * (1.0 + ma));
  }

  const int nv = s.mesh.c().vertex_count();
  double dt = s.dt;
  for (int bt = 0; bt <= p.max_backtracks; ++bt, dt *= p.beta) {
    Immersion trial = s.mesh;
    for (int v = 0; v < nv; ++v) trial.pos[v] = s.mesh.pos[v] - vel[v] * dt;
    double e1;
    CurvatureField cft;
    try {
      trial.validate();
      cft = CurvatureField::compute(trial);
      e1 = energy_E(cft);
    } catch (const MeshError&) {
      continue;
    }
    // Sufficient decrease against the exact duality ledger entry dt * ||v||^2.
    // Plain descent (E1 < E0) lets dt ride the stability boundary where the
    // realized decrease is a fraction of the ledger entry; requiring the
    // Armijo fraction keeps the dissipation ledger tight.
    if (!std::isfinite(e1) || !(e1 <= e0 - p.armijo * dt * vl2 * vl2)) continue;

    s.mesh = std::move(trial);
    s.t += dt;
    s.step += 1;
    HistoryRow row = state_row(cft);
    row.step = s.step;
    row.t = s.t;
    row.dt = dt;
    row.grad_norm = vl2;
    row.dissipation = dt * vl2 * vl2;
    s.history.push_back(std::move(row));
    s.dt = dt * p.dt_growth;
    return;
  }
  s.status = FlowStatus::Degenerate;
}

FlowState run_flow(Immersion f0, const StepPolicy& p, const RunHooks& hooks) {
  FlowState s = make_flow_state(std::move(f0));
  namespace fs = std::filesystem;
  const bool artifacts = !hooks.output_dir.empty();
  if (artifacts) fs::create_directories(hooks.output_dir);

  auto cadence_work = [&] {
    if (!hooks.chi_radii.empty()) {
      ConcentrationProfile prof = concentration(s.mesh, hooks.chi_radii, hooks.chi_options, s.t);
      s.history.back().chi = prof.chi;
      if (prof.chi.front() >= hooks.concentrated_gate && s.status == FlowStatus::Running)
        s.status = FlowStatus::Concentrated;
    }
    s.max_gb_residual = std::max(s.max_gb_residual, gauss_bonnet_residual(s.mesh));
    s.interior_samples.push_back({s.t, shape_gradient_max(s.mesh)});
    if (artifacts) {
      CurvatureField cf = CurvatureField::compute(s.mesh);
      std::vector<double> h2(cf.mean_h.size());
      for (size_t v = 0; v < h2.size(); ++v) h2[v] = cf.mean_h[v] * cf.mean_h[v];
      std::vector<PlyChannel> ch = {
          {"abs_A2", cf.abs_A2}, {"abs_H2", std::move(h2)}, {"gauss_k", cf.gauss_k}};
      save_ply(s.mesh, hooks.output_dir + "/snap_" + std::to_string(s.step) + ".ply", ch);
    }
  };

  if (hooks.cadence > 0) cadence_work();
  while (s.status == FlowStatus::Running) {
    size_t before = s.history.size();
    flow_step(s, p);
    if (s.history.size() == before) continue;  // no step accepted (status changed)
    if (hooks.cadence > 0) {
      if (s.step % hooks.cadence == 0)
        cadence_work();
      else
        s.history.back().chi = s.history[s.history.size() - 2].chi;
    }
    if (p.remesh_cadence > 0 && s.step % p.remesh_cadence == 0) tangential_smooth(s.mesh);
  }
  if (artifacts) write_history_csv(s, hooks.output_dir + "/flow.csv");
  return s;
}

void write_history_csv(const FlowState& s, const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw FlowError("write_history_csv: cannot open " + path);
  size_t K = s.history.empty() ? 0 : s.history.front().chi.size();
  std::fprintf(fp, "step,t,dt,E,W,area,maxA2,gradnorm,dissipation");
  for (size_t k = 1; k <= K; ++k) std::fprintf(fp, ",chi_rho%zu", k);
  std::fprintf(fp, "\n");
  for (const HistoryRow& r : s.history) {
    if (r.chi.size() != K) {
      std::fclose(fp);
      throw FlowError("write_history_csv: inconsistent concentration columns");
    }
    std::fprintf(fp, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", r.step, r.t, r.dt, r.E,
                 r.W, r.area, r.max_a2, r.grad_norm, r.dissipation);
    for (double c : r.chi) std::fprintf(fp, ",%.17g", c);
    std::fprintf(fp, "\n");
  }
  std::fclose(fp);
}

double check_area_growth(const FlowState& s) {
  if (s.history.empty()) throw FlowError("check_area_growth: empty history");
  double area0 = s.history.front().area;
  double e0 = s.history.front().E;
  double worst = 0.0;
  bool any = false;
  for (const HistoryRow& r : s.history) {
    if (!(r.t > 0.0)) continue;
    double res = (r.area - area0) / (std::sqrt(r.t) * std::sqrt(e0));
    if (!any || res > worst) worst = res;
    any = true;
  }
  return any ? worst : 0.0;
}

}  // namespace a2flow
