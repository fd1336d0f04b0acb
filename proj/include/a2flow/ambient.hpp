#pragma once

// Ambient 3-manifolds presented in a single global chart: a metric field
// g(x) on (a subset of) R^3, with Christoffel symbols, curvature tensors,
// geodesic distance, and wrap-aware displacement for periodic charts.
//
// Conventions, used consistently everywhere:
//   Gamma^k_{ij} = (1/2) g^{kl} (d_i g_{lj} + d_j g_{li} - d_l g_{ij})
//   R(X,Y)Z = nab_X nab_Y Z - nab_Y nab_X Z - nab_[X,Y] Z
//   riemann(a,b,c,d) = g( R(E_a, E_b) E_c , E_d )   (E_i the chart frame)
//   sectional(X,Y) = riemann(X,Y,Y,X) / (|X|^2 |Y|^2 - <X,Y>^2),
// so a round sphere has sectional curvature +1/r^2.

#include <array>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "a2flow/linalg.hpp"

namespace a2flow {

struct AmbientError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Fully lowered curvature tensor at a point.
struct RiemannTensor {
  std::array<double, 81> c{};
  double& operator()(int a, int b, int cc, int d) { return c[((a * 3 + b) * 3 + cc) * 3 + d]; }
  double operator()(int a, int b, int cc, int d) const { return c[((a * 3 + b) * 3 + cc) * 3 + d]; }
};

// Covariant derivative nab_e R_{abcd}.
struct RiemannDerivative {
  std::array<double, 243> c{};
  double& operator()(int e, int a, int b, int cc, int d) {
    return c[(((e * 3 + a) * 3 + b) * 3 + cc) * 3 + d];
  }
  double operator()(int e, int a, int b, int cc, int d) const {
    return c[(((e * 3 + a) * 3 + b) * 3 + cc) * 3 + d];
  }
};

struct CurvatureBounds {
  double sup_riemann = 0.0;        // sup |R|_g over samples (exact for built-ins)
  double sup_nabla_riemann = 0.0;  // sup |nab R|_g
  double inf_sectional = 0.0;      // inf over sampled tangent 2-planes
};

// Symmetric metric field tabulated on a regular grid; tricubic Catmull-Rom
// interpolation keeps the field C^1, which the derivative tape requires.
struct MetricGrid {
  Vec3d origin{};
  Vec3d spacing{1, 1, 1};
  int nx = 0, ny = 0, nz = 0;
  // Six components per node, order g11 g12 g13 g22 g23 g33, x fastest.
  std::vector<std::array<double, 6>> node;

  const std::array<double, 6>& at(int i, int j, int k) const {
    return node[(static_cast<size_t>(k) * ny + j) * nx + i];
  }

  static MetricGrid load(const std::string& path);  // throws AmbientError with line info
  void validate() const;                            // positive-definite at every node

  template <class T> Mat3<T> eval(const Vec3<T>& x) const;

  // Approximate geodesic distance: Dijkstra over the 26-connected node
  // lattice with edge weights measured in the midpoint metric.
  double lattice_distance(const Vec3d& a, const Vec3d& b) const;
};

class AmbientManifold {
 public:
  enum class Kind { Euclidean, Sphere, FlatTorus, ChartGrid, ChartFn, Scaled };

  static AmbientManifold euclidean();
  static AmbientManifold sphere(double radius);
  static AmbientManifold flat_torus(const Vec3d& periods);
  static AmbientManifold chart_grid(MetricGrid grid, std::string source_path = {});
  // Test hook: analytic metric callback, double path only, no distances.
  static AmbientManifold chart_fn(std::function<Mat3d(const Vec3d&)> fn);
  // Same point set with metric scaled to g/factor^2 (blowup rescaling).
  static AmbientManifold scaled(std::shared_ptr<const AmbientManifold> base, double factor);

  // Accepted forms: "euclidean", "sphere:r=<float>", "torus:L=<float>",
  // "chart:<path>".
  static AmbientManifold parse(const std::string& text);

  Kind kind() const { return kind_; }
  double sphere_radius() const { return radius_; }
  double scale_factor() const { return factor_; }
  bool periodic() const { return kind_ == Kind::FlatTorus; }
  Vec3d periods() const { return periods_; }
  bool flat() const;                  // identically zero curvature
  bool locally_symmetric() const;     // nab R == 0 (all built-ins)
  std::string describe() const;       // round-trips through parse for file kinds

  template <class T> Mat3<T> metric(const Vec3<T>& x) const;
  template <class T> std::array<Mat3<T>, 3> christoffels(const Vec3<T>& x) const;

  RiemannTensor riemann(const Vec3d& x) const;
  RiemannDerivative nabla_riemann(const Vec3d& x) const;

  double distance(const Vec3d& a, const Vec3d& b) const;

  // Chart-coordinate difference to - from, shifted by periods so each
  // component is the shortest representative. Identity off the torus.
  template <class T> Vec3<T> displacement(const Vec3<T>& from, const Vec3<T>& to) const;
  Vec3d wrap(const Vec3d& x) const;  // canonical representative in [0, L)

  CurvatureBounds curvature_bounds(const std::vector<Vec3d>& samples) const;

 private:
  Kind kind_ = Kind::Euclidean;
  double radius_ = 1.0;   // Sphere
  Vec3d periods_{};       // FlatTorus
  double factor_ = 1.0;   // Scaled
  std::shared_ptr<const MetricGrid> grid_;
  std::function<Mat3d(const Vec3d&)> fn_;
  std::shared_ptr<const AmbientManifold> base_;
  std::string chart_path_;

  template <class T> std::array<Mat3<T>, 3> christoffels_fd(const Vec3<T>& x) const;
  RiemannTensor riemann_fd(const Vec3d& x) const;
};

// Finite-difference steps for the chart-metric fallbacks. The Christoffel
// step differentiates the (smooth, interpolated) metric once; the curvature
// steps differentiate already-differenced data, so they are larger to
// balance truncation against roundoff amplification.
inline constexpr double kAmbientFdStep = 1e-4;
inline constexpr double kCurvatureFdStep = 2e-3;

// --- template implementations ---

template <class T> Mat3<T> MetricGrid::eval(const Vec3<T>& x) const {
  using std::floor;
  // Catmull-Rom weights; t is the fractional position inside the base cell.
  auto weights = [](const T& t) {
    T t2 = t * t, t3 = t2 * t;
    return std::array<T, 4>{
        (t2 + t2 - t - t3) * T(0.5),
        (T(3) * t3 - T(5) * t2 + T(2)) * T(0.5),
        (T(4) * t2 + t - T(3) * t3) * T(0.5),
        (t3 - t2) * T(0.5)};
  };
  int bi[3];
  T fr[3];
  const int dims[3] = {nx, ny, nz};
  for (int a = 0; a < 3; ++a) {
    T u = (x[a] - T(origin[a])) / T(spacing[a]);
    double uf = floor(value(u));
    // Clamp so the 4-point stencil stays inside the grid.
    int base = static_cast<int>(uf);
    if (base < 1) base = 1;
    if (base > dims[a] - 3) base = dims[a] - 3;
    bi[a] = base;
    fr[a] = u - T(static_cast<double>(base));
  }
  auto wx = weights(fr[0]), wy = weights(fr[1]), wz = weights(fr[2]);
  std::array<T, 6> g{};
  for (int dk = -1; dk <= 2; ++dk)
    for (int dj = -1; dj <= 2; ++dj)
      for (int di = -1; di <= 2; ++di) {
        T w = wx[di + 1] * wy[dj + 1] * wz[dk + 1];
        const auto& n = at(bi[0] + di, bi[1] + dj, bi[2] + dk);
        for (int cmp = 0; cmp < 6; ++cmp) g[cmp] += T(n[cmp]) * w;
      }
  Mat3<T> m;
  m(0, 0) = g[0]; m(0, 1) = g[1]; m(0, 2) = g[2];
  m(1, 0) = g[1]; m(1, 1) = g[3]; m(1, 2) = g[4];
  m(2, 0) = g[2]; m(2, 1) = g[4]; m(2, 2) = g[5];
  return m;
}

template <class T> Mat3<T> AmbientManifold::metric(const Vec3<T>& x) const {
  switch (kind_) {
    case Kind::Euclidean:
    case Kind::FlatTorus:
      return Mat3<T>::identity();
    case Kind::Sphere: {
      // Stereographic chart of the round 3-sphere of radius r:
      // g = phi^2 delta with phi = 2 r^2 / (r^2 + |x|^2).
      T r2 = T(radius_ * radius_);
      T phi = (r2 + r2) / (r2 + dot(x, x));
      T p2 = phi * phi;
      Mat3<T> m;
      m(0, 0) = p2; m(1, 1) = p2; m(2, 2) = p2;
      return m;
    }
    case Kind::ChartGrid:
      return grid_->eval(x);
    case Kind::ChartFn:
      if constexpr (std::is_same_v<T, double>) {
        return fn_(x);
      } else {
        throw AmbientError("chart-metric callback supports plain double evaluation only");
      }
    case Kind::Scaled: {
      Mat3<T> m = base_->metric(x);
      return m * T(1.0 / (factor_ * factor_));
    }
  }
  throw AmbientError("unreachable ambient kind");
}

template <class T> std::array<Mat3<T>, 3> AmbientManifold::christoffels_fd(const Vec3<T>& x) const {
  std::array<Mat3<T>, 3> dg;  // dg[a](i,j) = d_a g_ij
  for (int a = 0; a < 3; ++a) {
    Vec3<T> xp = x, xm = x;
    xp[a] += T(kAmbientFdStep);
    xm[a] -= T(kAmbientFdStep);
    dg[a] = (metric(xp) - metric(xm)) * T(0.5 / kAmbientFdStep);
  }
  Mat3<T> ginv = inverse(metric(x));
  std::array<Mat3<T>, 3> gam;
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) {
        T s{};
        for (int l = 0; l < 3; ++l)
          s += ginv(k, l) * (dg[i](l, j) + dg[j](l, i) - dg[l](i, j));
        gam[k](i, j) = s * T(0.5);
        gam[k](j, i) = gam[k](i, j);
      }
  return gam;
}

template <class T> std::array<Mat3<T>, 3> AmbientManifold::christoffels(const Vec3<T>& x) const {
  switch (kind_) {
    case Kind::Euclidean:
    case Kind::FlatTorus:
      return {};
    case Kind::Sphere: {
      // Conformal metric phi^2 delta: Gamma^k_ij = d_ik u_j + d_jk u_i - d_ij u_k
      // with u = ln phi, u_i = -2 x_i / (r^2 + |x|^2).
      T denom = T(radius_ * radius_) + dot(x, x);
      Vec3<T> u = x * (T(-2) / denom);
      std::array<Mat3<T>, 3> gam{};
      for (int k = 0; k < 3; ++k)
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) {
            T s{};
            if (i == k) s += u[j];
            if (j == k) s += u[i];
            if (i == j) s -= u[k];
            gam[k](i, j) = s;
          }
      return gam;
    }
    case Kind::ChartGrid:
    case Kind::ChartFn:
      return christoffels_fd(x);
    case Kind::Scaled:
      // Constant metric scaling leaves Christoffel symbols unchanged.
      return base_->christoffels(x);
  }
  throw AmbientError("unreachable ambient kind");
}

template <class T> Vec3<T> AmbientManifold::displacement(const Vec3<T>& from, const Vec3<T>& to) const {
  Vec3<T> d = to - from;
  const AmbientManifold* m = this;
  while (m->kind_ == Kind::Scaled) m = m->base_.get();
  if (m->kind_ == Kind::FlatTorus) {
    for (int a = 0; a < 3; ++a) {
      double L = m->periods_[a];
      double shift = std::floor(value(d[a]) / L + 0.5) * L;
      d[a] -= T(shift);
    }
  }
  return d;
}

}  // namespace a2flow
