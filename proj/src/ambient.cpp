#include "a2flow/ambient.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>

namespace a2flow {

namespace {

// Deterministic direction pairs for sectional-curvature sampling, in
// addition to the three coordinate planes.
const std::array<std::array<Vec3d, 2>, 13> kPlaneSamples = {{
    {{{1, 1, 0}, {0, 0, 1}}},
    {{{1, -1, 0}, {0, 0, 1}}},
    {{{1, 0, 1}, {0, 1, 0}}},
    {{{1, 0, -1}, {0, 1, 0}}},
    {{{0, 1, 1}, {1, 0, 0}}},
    {{{0, 1, -1}, {1, 0, 0}}},
    {{{1, 1, 1}, {1, -1, 0}}},
    {{{1, 1, 1}, {1, 0, -1}}},
    {{{1, 1, -1}, {1, -1, 0}}},
    {{{1, -1, 1}, {0, 1, 1}}},
    {{{-1, 1, 1}, {1, 1, 0}}},
    {{{2, 1, 0}, {0, 1, 2}}},
    {{{1, 2, 3}, {3, 2, 1}}},
}};

double tensor_norm_riemann(const RiemannTensor& R, const Mat3d& ginv) {
  double s = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d) {
          double t = 0.0;
          for (int e = 0; e < 3; ++e)
            for (int f = 0; f < 3; ++f)
              for (int g = 0; g < 3; ++g)
                for (int h = 0; h < 3; ++h)
                  t += R(e, f, g, h) * ginv(a, e) * ginv(b, f) * ginv(c, g) * ginv(d, h);
          s += t * R(a, b, c, d);
        }
  return std::sqrt(std::max(0.0, s));
}

double tensor_norm_riemann_derivative(const RiemannDerivative& D, const Mat3d& ginv) {
  double s = 0.0;
  for (int e = 0; e < 3; ++e)
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int c = 0; c < 3; ++c)
          for (int d = 0; d < 3; ++d) {
            double t = 0.0;
            for (int e2 = 0; e2 < 3; ++e2)
              for (int a2 = 0; a2 < 3; ++a2)
                for (int b2 = 0; b2 < 3; ++b2)
                  for (int c2 = 0; c2 < 3; ++c2)
                    for (int d2 = 0; d2 < 3; ++d2)
                      t += D(e2, a2, b2, c2, d2) * ginv(e, e2) * ginv(a, a2) * ginv(b, b2) *
                           ginv(c, c2) * ginv(d, d2);
            s += t * D(e, a, b, c, d);
          }
  return std::sqrt(std::max(0.0, s));
}

}  // namespace

// --- MetricGrid ---

MetricGrid MetricGrid::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw AmbientError("cannot open metric grid file: " + path);
  MetricGrid g;
  std::string line;
  int lineno = 0;
  auto next_line = [&](const char* what) {
    while (std::getline(in, line)) {
      ++lineno;
      auto pos = line.find('#');
      if (pos != std::string::npos) line.erase(pos);
      bool blank = line.find_first_not_of(" \t\r") == std::string::npos;
      if (!blank) return;
    }
    throw AmbientError(path + ": unexpected end of file, expected " + std::string(what));
  };
  auto fail = [&](const std::string& msg) {
    throw AmbientError(path + ":" + std::to_string(lineno) + ": " + msg);
  };

  next_line("header");
  {
    std::istringstream ss(line);
    std::string magic;
    int version = 0;
    ss >> magic >> version;
    if (magic != "a2flow-metric-grid" || version != 1)
      fail("expected header 'a2flow-metric-grid 1'");
  }
  next_line("origin");
  {
    std::istringstream ss(line);
    std::string key;
    ss >> key >> g.origin.x >> g.origin.y >> g.origin.z;
    if (key != "origin" || !ss) fail("expected 'origin ox oy oz'");
  }
  next_line("spacing");
  {
    std::istringstream ss(line);
    std::string key;
    ss >> key >> g.spacing.x >> g.spacing.y >> g.spacing.z;
    if (key != "spacing" || !ss) fail("expected 'spacing hx hy hz'");
    if (g.spacing.x <= 0 || g.spacing.y <= 0 || g.spacing.z <= 0) fail("spacing must be positive");
  }
  next_line("dims");
  {
    std::istringstream ss(line);
    std::string key;
    ss >> key >> g.nx >> g.ny >> g.nz;
    if (key != "dims" || !ss) fail("expected 'dims nx ny nz'");
    if (g.nx < 4 || g.ny < 4 || g.nz < 4) fail("grid must be at least 4 nodes per axis");
  }
  size_t count = static_cast<size_t>(g.nx) * g.ny * g.nz;
  g.node.reserve(count);
  for (size_t n = 0; n < count; ++n) {
    next_line("metric node row");
    std::istringstream ss(line);
    std::array<double, 6> comp{};
    for (double& c : comp) ss >> c;
    if (!ss) fail("expected six metric components g11 g12 g13 g22 g23 g33");
    g.node.push_back(comp);
  }
  g.validate();
  return g;
}

void MetricGrid::validate() const {
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const auto& c = at(i, j, k);
        double d1 = c[0];
        double d2 = c[0] * c[3] - c[1] * c[1];
        double d3 = c[0] * (c[3] * c[5] - c[4] * c[4]) - c[1] * (c[1] * c[5] - c[4] * c[2]) +
                    c[2] * (c[1] * c[4] - c[3] * c[2]);
        if (!(d1 > 0 && d2 > 0 && d3 > 0)) {
          std::ostringstream msg;
          msg << "metric grid not positive definite at node (" << i << "," << j << "," << k << ")";
          throw AmbientError(msg.str());
        }
      }
}

double MetricGrid::lattice_distance(const Vec3d& a, const Vec3d& b) const {
  auto clampi = [](int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); };
  auto snap = [&](const Vec3d& p, int idx[3]) {
    idx[0] = clampi(static_cast<int>(std::lround((p.x - origin.x) / spacing.x)), 0, nx - 1);
    idx[1] = clampi(static_cast<int>(std::lround((p.y - origin.y) / spacing.y)), 0, ny - 1);
    idx[2] = clampi(static_cast<int>(std::lround((p.z - origin.z) / spacing.z)), 0, nz - 1);
  };
  auto node_pos = [&](const int idx[3]) {
    return Vec3d{origin.x + idx[0] * spacing.x, origin.y + idx[1] * spacing.y,
                 origin.z + idx[2] * spacing.z};
  };
  auto metric_at_node = [&](int i, int j, int k) {
    const auto& c = at(i, j, k);
    Mat3d m;
    m(0, 0) = c[0]; m(0, 1) = c[1]; m(0, 2) = c[2];
    m(1, 0) = c[1]; m(1, 1) = c[3]; m(1, 2) = c[4];
    m(2, 0) = c[2]; m(2, 1) = c[4]; m(2, 2) = c[5];
    return m;
  };

  int sa[3], sb[3];
  snap(a, sa);
  snap(b, sb);
  int source = (sa[2] * ny + sa[1]) * nx + sa[0];
  int target = (sb[2] * ny + sb[1]) * nx + sb[0];

  // Segment corrections between the query points and their snapped nodes.
  auto seg_len = [&](const Vec3d& p, const int idx[3]) {
    Vec3d d = node_pos(idx) - p;
    Mat3d m = metric_at_node(idx[0], idx[1], idx[2]);
    return std::sqrt(std::max(0.0, dot_g(m, d, d)));
  };
  double correction = seg_len(a, sa) + seg_len(b, sb);
  if (source == target) {
    Vec3d d = b - a;
    Mat3d m = metric_at_node(sa[0], sa[1], sa[2]);
    return std::sqrt(std::max(0.0, dot_g(m, d, d)));
  }

  size_t n = static_cast<size_t>(nx) * ny * nz;
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
  dist[source] = 0.0;
  pq.push({0.0, source});
  while (!pq.empty()) {
    auto [d0, u] = pq.top();
    pq.pop();
    if (d0 > dist[u]) continue;
    if (u == target) break;
    int ui = u % nx, uj = (u / nx) % ny, uk = u / (nx * ny);
    Mat3d gu = metric_at_node(ui, uj, uk);
    for (int dk = -1; dk <= 1; ++dk)
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) {
          if (di == 0 && dj == 0 && dk == 0) continue;
          int vi = ui + di, vj = uj + dj, vk = uk + dk;
          if (vi < 0 || vi >= nx || vj < 0 || vj >= ny || vk < 0 || vk >= nz) continue;
          int v = (vk * ny + vj) * nx + vi;
          Vec3d step{di * spacing.x, dj * spacing.y, dk * spacing.z};
          Mat3d gmid = (gu + metric_at_node(vi, vj, vk)) * 0.5;
          double w = std::sqrt(std::max(0.0, dot_g(gmid, step, step)));
          if (dist[u] + w < dist[v]) {
            dist[v] = dist[u] + w;
            pq.push({dist[v], v});
          }
        }
  }
  return dist[target] + correction;
}

// --- AmbientManifold factories ---

AmbientManifold AmbientManifold::euclidean() { return {}; }

AmbientManifold AmbientManifold::sphere(double radius) {
  if (!(radius > 0)) throw AmbientError("sphere radius must be positive");
  AmbientManifold m;
  m.kind_ = Kind::Sphere;
  m.radius_ = radius;
  return m;
}

AmbientManifold AmbientManifold::flat_torus(const Vec3d& periods) {
  if (!(periods.x > 0 && periods.y > 0 && periods.z > 0))
    throw AmbientError("torus periods must be positive");
  AmbientManifold m;
  m.kind_ = Kind::FlatTorus;
  m.periods_ = periods;
  return m;
}

AmbientManifold AmbientManifold::chart_grid(MetricGrid grid, std::string source_path) {
  grid.validate();
  AmbientManifold m;
  m.kind_ = Kind::ChartGrid;
  m.grid_ = std::make_shared<MetricGrid>(std::move(grid));
  m.chart_path_ = std::move(source_path);
  return m;
}

AmbientManifold AmbientManifold::chart_fn(std::function<Mat3d(const Vec3d&)> fn) {
  AmbientManifold m;
  m.kind_ = Kind::ChartFn;
  m.fn_ = std::move(fn);
  return m;
}

AmbientManifold AmbientManifold::scaled(std::shared_ptr<const AmbientManifold> base, double factor) {
  if (!(factor > 0)) throw AmbientError("scale factor must be positive");
  AmbientManifold m;
  m.kind_ = Kind::Scaled;
  m.base_ = std::move(base);
  m.factor_ = factor;
  return m;
}

AmbientManifold AmbientManifold::parse(const std::string& text) {
  if (text == "euclidean") return euclidean();
  auto starts = [&](const char* p) { return text.rfind(p, 0) == 0; };
  if (starts("sphere:")) {
    std::string rest = text.substr(7);
    if (rest.rfind("r=", 0) != 0) throw AmbientError("expected sphere:r=<float>, got '" + text + "'");
    size_t used = 0;
    double r = std::stod(rest.substr(2), &used);
    if (used != rest.size() - 2) throw AmbientError("trailing characters in '" + text + "'");
    return sphere(r);
  }
  if (starts("torus:")) {
    std::string rest = text.substr(6);
    if (rest.rfind("L=", 0) != 0) throw AmbientError("expected torus:L=<float>, got '" + text + "'");
    size_t used = 0;
    double L = std::stod(rest.substr(2), &used);
    if (used != rest.size() - 2) throw AmbientError("trailing characters in '" + text + "'");
    if (!(L > 0)) throw AmbientError("torus period must be positive");
    return flat_torus({L, L, L});
  }
  if (starts("chart:")) {
    std::string path = text.substr(6);
    return chart_grid(MetricGrid::load(path), path);
  }
  throw AmbientError("unrecognized ambient spec '" + text +
                     "' (expected euclidean | sphere:r=<float> | torus:L=<float> | chart:<path>)");
}

bool AmbientManifold::flat() const {
  switch (kind_) {
    case Kind::Euclidean:
    case Kind::FlatTorus:
      return true;
    case Kind::Scaled:
      return base_->flat();
    default:
      return false;
  }
}

bool AmbientManifold::locally_symmetric() const {
  switch (kind_) {
    case Kind::Euclidean:
    case Kind::FlatTorus:
    case Kind::Sphere:
      return true;
    case Kind::Scaled:
      return base_->locally_symmetric();
    default:
      return false;
  }
}

std::string AmbientManifold::describe() const {
  std::ostringstream ss;
  switch (kind_) {
    case Kind::Euclidean:
      return "euclidean";
    case Kind::Sphere:
      ss << "sphere:r=" << radius_;
      return ss.str();
    case Kind::FlatTorus:
      ss << "torus:L=" << periods_.x;
      return ss.str();
    case Kind::ChartGrid:
      return chart_path_.empty() ? std::string("chart:<in-memory>") : "chart:" + chart_path_;
    case Kind::ChartFn:
      return "chart-fn:<callback>";
    case Kind::Scaled:
      ss << "scaled:" << factor_ << ":" << base_->describe();
      return ss.str();
  }
  return "?";
}

// --- curvature tensors ---

RiemannTensor AmbientManifold::riemann_fd(const Vec3d& x) const {
  constexpr double h = kCurvatureFdStep;
  std::array<std::array<Mat3d, 3>, 3> dgam;  // dgam[a][k](i,j) = d_a Gamma^k_ij
  for (int a = 0; a < 3; ++a) {
    Vec3d xp = x, xm = x;
    xp[a] += h;
    xm[a] -= h;
    auto gp = christoffels(xp), gm = christoffels(xm);
    for (int k = 0; k < 3; ++k) dgam[a][k] = (gp[k] - gm[k]) * (0.5 / h);
  }
  auto gam = christoffels(x);
  Mat3d g = metric(x);
  RiemannTensor R;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c) {
        // Component on the frame vector E_e of R(E_a, E_b) E_c.
        Vec3d up{};
        for (int e = 0; e < 3; ++e) {
          double v = dgam[a][e](b, c) - dgam[b][e](a, c);
          for (int f = 0; f < 3; ++f) v += gam[e](a, f) * gam[f](b, c) - gam[e](b, f) * gam[f](a, c);
          up[e] = v;
        }
        for (int d = 0; d < 3; ++d) {
          double low = 0.0;
          for (int e = 0; e < 3; ++e) low += g(d, e) * up[e];
          R(a, b, c, d) = low;
        }
      }
  return R;
}

RiemannTensor AmbientManifold::riemann(const Vec3d& x) const {
  switch (kind_) {
    case Kind::Euclidean:
    case Kind::FlatTorus:
      return {};
    case Kind::Sphere: {
      double K = 1.0 / (radius_ * radius_);
      Mat3d g = metric(x);
      RiemannTensor R;
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          for (int c = 0; c < 3; ++c)
            for (int d = 0; d < 3; ++d)
              R(a, b, c, d) = K * (g(b, c) * g(a, d) - g(a, c) * g(b, d));
      return R;
    }
    case Kind::Scaled: {
      // Lowered curvature scales linearly with a constant metric scaling.
      RiemannTensor R = base_->riemann(x);
      double lam = 1.0 / (factor_ * factor_);
      for (double& v : R.c) v *= lam;
      return R;
    }
    default:
      return riemann_fd(x);
  }
}

RiemannDerivative AmbientManifold::nabla_riemann(const Vec3d& x) const {
  if (locally_symmetric()) return {};
  constexpr double h = kCurvatureFdStep;
  std::array<RiemannTensor, 3> dR;
  for (int e = 0; e < 3; ++e) {
    Vec3d xp = x, xm = x;
    xp[e] += h;
    xm[e] -= h;
    RiemannTensor Rp = riemann(xp), Rm = riemann(xm);
    for (int i = 0; i < 81; ++i) dR[e].c[i] = (Rp.c[i] - Rm.c[i]) * (0.5 / h);
  }
  RiemannTensor R = riemann(x);
  auto gam = christoffels(x);
  RiemannDerivative D;
  for (int e = 0; e < 3; ++e)
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int c = 0; c < 3; ++c)
          for (int d = 0; d < 3; ++d) {
            double v = dR[e](a, b, c, d);
            for (int f = 0; f < 3; ++f) {
              v -= gam[f](e, a) * R(f, b, c, d);
              v -= gam[f](e, b) * R(a, f, c, d);
              v -= gam[f](e, c) * R(a, b, f, d);
              v -= gam[f](e, d) * R(a, b, c, f);
            }
            D(e, a, b, c, d) = v;
          }
  return D;
}

// --- distance ---

double AmbientManifold::distance(const Vec3d& a, const Vec3d& b) const {
  switch (kind_) {
    case Kind::Euclidean:
      return norm(b - a);
    case Kind::FlatTorus: {
      Vec3d d = displacement(a, b);
      return norm(d);
    }
    case Kind::Sphere: {
      // Lift chart points to the round sphere in R^4 and use the arc length.
      double r = radius_;
      auto lift = [r](const Vec3d& u) {
        double s = 2.0 * r * r / (r * r + dot(u, u));
        return std::array<double, 4>{s * u.x, s * u.y, s * u.z, r * (1.0 - s)};
      };
      auto X = lift(a), Y = lift(b);
      double inner = (X[0] * Y[0] + X[1] * Y[1] + X[2] * Y[2] + X[3] * Y[3]) / (r * r);
      inner = std::clamp(inner, -1.0, 1.0);
      return r * std::acos(inner);
    }
    case Kind::ChartGrid:
      return grid_->lattice_distance(a, b);
    case Kind::ChartFn: {
      // Metric length of the straight chart segment (upper bound on the
      // geodesic distance; adequate for the analytic-callback test paths).
      constexpr int kSegments = 64;
      double len = 0.0;
      Vec3d step = (b - a) / double(kSegments);
      for (int s = 0; s < kSegments; ++s) {
        Vec3d mid = a + step * (s + 0.5);
        len += std::sqrt(std::max(0.0, dot_g(fn_(mid), step, step)));
      }
      return len;
    }
    case Kind::Scaled:
      return base_->distance(a, b) / factor_;
  }
  throw AmbientError("unreachable ambient kind");
}

Vec3d AmbientManifold::wrap(const Vec3d& x) const {
  if (kind_ == Kind::Scaled) return base_->wrap(x);
  if (kind_ != Kind::FlatTorus) return x;
  Vec3d w = x;
  for (int a = 0; a < 3; ++a) {
    double L = periods_[a];
    w[a] -= std::floor(w[a] / L) * L;
  }
  return w;
}

// --- curvature bounds ---

CurvatureBounds AmbientManifold::curvature_bounds(const std::vector<Vec3d>& samples) const {
  switch (kind_) {
    case Kind::Euclidean:
    case Kind::FlatTorus:
      return {0.0, 0.0, 0.0};
    case Kind::Sphere: {
      double K = 1.0 / (radius_ * radius_);
      // |R|^2 for a constant-curvature 3-manifold contracts to 12 K^2.
      return {2.0 * std::sqrt(3.0) * K, 0.0, K};
    }
    case Kind::Scaled: {
      CurvatureBounds b = base_->curvature_bounds(samples);
      double f2 = factor_ * factor_;
      return {b.sup_riemann * f2, b.sup_nabla_riemann * f2 * factor_, b.inf_sectional * f2};
    }
    default:
      break;
  }
  CurvatureBounds out{0.0, 0.0, std::numeric_limits<double>::infinity()};
  for (const Vec3d& x : samples) {
    Mat3d g = metric(x);
    Mat3d ginv = inverse(g);
    RiemannTensor R = riemann(x);
    out.sup_riemann = std::max(out.sup_riemann, tensor_norm_riemann(R, ginv));
    out.sup_nabla_riemann =
        std::max(out.sup_nabla_riemann, tensor_norm_riemann_derivative(nabla_riemann(x), ginv));
    auto sect = [&](const Vec3d& X, const Vec3d& Y) {
      double num = 0.0;
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          for (int c = 0; c < 3; ++c)
            for (int d = 0; d < 3; ++d) num += R(a, b, c, d) * X[a] * Y[b] * Y[c] * X[d];
      double den = dot_g(g, X, X) * dot_g(g, Y, Y) - dot_g(g, X, Y) * dot_g(g, X, Y);
      return num / den;
    };
    out.inf_sectional = std::min(out.inf_sectional, sect({1, 0, 0}, {0, 1, 0}));
    out.inf_sectional = std::min(out.inf_sectional, sect({1, 0, 0}, {0, 0, 1}));
    out.inf_sectional = std::min(out.inf_sectional, sect({0, 1, 0}, {0, 0, 1}));
    for (const auto& pl : kPlaneSamples)
      out.inf_sectional = std::min(out.inf_sectional, sect(pl[0], pl[1]));
  }
  if (samples.empty()) out.inf_sectional = 0.0;
  return out;
}

}  // namespace a2flow
