#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>

#include "a2flow/ambient.hpp"
#include "a2flow/tape.hpp"

using namespace a2flow;

namespace {

// Analytic stereographic 3-sphere metric, used both directly as a callback
// chart and sampled onto a grid, so the chart paths can be checked against
// the exact built-in.
Mat3d sphere_metric_exact(const Vec3d& x, double r) {
  double phi = 2.0 * r * r / (r * r + dot(x, x));
  Mat3d g;
  g(0, 0) = g(1, 1) = g(2, 2) = phi * phi;
  return g;
}

MetricGrid sample_sphere_grid(double r, double lo, double hi, int n) {
  MetricGrid g;
  g.origin = {lo, lo, lo};
  double h = (hi - lo) / (n - 1);
  g.spacing = {h, h, h};
  g.nx = g.ny = g.nz = n;
  g.node.reserve(static_cast<size_t>(n) * n * n);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        Vec3d x{lo + i * h, lo + j * h, lo + k * h};
        Mat3d m = sphere_metric_exact(x, r);
        g.node.push_back({m(0, 0), m(0, 1), m(0, 2), m(1, 1), m(1, 2), m(2, 2)});
      }
  return g;
}

// Metric compatibility: d_a g_ij = Gamma^k_{ai} g_kj + Gamma^k_{aj} g_ik.
double compatibility_residual(const AmbientManifold& amb, const Vec3d& x) {
  double h = 1e-5;
  double worst = 0.0;
  auto gam = amb.christoffels(x);
  for (int a = 0; a < 3; ++a) {
    Vec3d xp = x, xm = x;
    xp[a] += h;
    xm[a] -= h;
    Mat3d dg = (amb.metric(xp) - amb.metric(xm)) * (0.5 / h);
    Mat3d g = amb.metric(x);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double rhs = 0.0;
        for (int k = 0; k < 3; ++k) rhs += gam[k](a, i) * g(k, j) + gam[k](a, j) * g(i, k);
        worst = std::max(worst, std::fabs(dg(i, j) - rhs));
      }
  }
  return worst;
}

}  // namespace

TEST_CASE("euclidean ambient is the identity chart") {
  auto amb = AmbientManifold::euclidean();
  Vec3d x{0.3, -1.0, 2.0};
  Mat3d g = amb.metric(x);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(g(i, j) == (i == j ? 1.0 : 0.0));
  CHECK(amb.distance({1, 2, 3}, {1, 2, 7}) == doctest::Approx(4.0));
  CHECK(amb.flat());
  auto b = amb.curvature_bounds({x});
  CHECK(b.sup_riemann == 0.0);
  CHECK(b.inf_sectional == 0.0);
}

TEST_CASE("sphere chart metric and Christoffels") {
  auto amb = AmbientManifold::sphere(1.0);
  Mat3d g0 = amb.metric(Vec3d{0, 0, 0});
  CHECK(g0(0, 0) == doctest::Approx(4.0));
  CHECK(g0(1, 1) == doctest::Approx(4.0));
  CHECK(g0(2, 2) == doctest::Approx(4.0));
  CHECK(g0(0, 1) == 0.0);
  // At |x| = 1 the conformal factor is 1.
  Mat3d g1 = amb.metric(Vec3d{1, 0, 0});
  CHECK(g1(0, 0) == doctest::Approx(1.0));

  for (Vec3d x : {Vec3d{0.2, -0.1, 0.4}, Vec3d{1.5, 0.3, -0.7}, Vec3d{-2, 1, 0.5}})
    CHECK(compatibility_residual(amb, x) < 1e-8);
}

TEST_CASE("sphere curvature tensor: symmetries, Bianchi, sectional") {
  auto amb = AmbientManifold::sphere(1.4);
  Vec3d x{0.5, -0.2, 0.8};
  RiemannTensor R = amb.riemann(x);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d) {
          CHECK(R(a, b, c, d) == doctest::Approx(-R(b, a, c, d)).epsilon(1e-12));
          CHECK(R(a, b, c, d) == doctest::Approx(-R(a, b, d, c)).epsilon(1e-12));
          CHECK(R(a, b, c, d) == doctest::Approx(R(c, d, a, b)).epsilon(1e-12));
          CHECK(R(a, b, c, d) + R(b, c, a, d) + R(c, a, b, d) ==
                doctest::Approx(0.0).epsilon(1e-12));
        }
  // Every tangent 2-plane has sectional curvature 1/r^2.
  Mat3d g = amb.metric(x);
  Vec3d X{1, 0.3, -0.2}, Y{0.1, -1, 0.6};
  double num = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d) num += R(a, b, c, d) * X[a] * Y[b] * Y[c] * X[d];
  double den = dot_g(g, X, X) * dot_g(g, Y, Y) - dot_g(g, X, Y) * dot_g(g, X, Y);
  CHECK(num / den == doctest::Approx(1.0 / (1.4 * 1.4)).epsilon(1e-10));
  CHECK(amb.nabla_riemann(x).c[13] == 0.0);
  CHECK(amb.locally_symmetric());
}

TEST_CASE("finite-difference curvature path matches the exact sphere") {
  double r = 1.2;
  auto exact = AmbientManifold::sphere(r);
  auto cb = AmbientManifold::chart_fn([r](const Vec3d& x) { return sphere_metric_exact(x, r); });
  Vec3d x{0.4, 0.1, -0.3};

  auto ge = exact.metric(x), gc = cb.metric(x);
  for (int i = 0; i < 9; ++i) CHECK(gc.m[i] == doctest::Approx(ge.m[i]).epsilon(1e-12));

  auto game = exact.christoffels(x);
  auto gamc = cb.christoffels(x);
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 9; ++i) CHECK(gamc[k].m[i] == doctest::Approx(game[k].m[i]).epsilon(1e-6));

  RiemannTensor Re = exact.riemann(x), Rc = cb.riemann(x);
  for (int i = 0; i < 81; ++i) CHECK(Rc.c[i] == doctest::Approx(Re.c[i]).epsilon(5e-4));

  // A locally symmetric space through the generic FD path: derivative small.
  RiemannDerivative D = cb.nabla_riemann(x);
  double worst = 0.0;
  for (double v : D.c) worst = std::max(worst, std::fabs(v));
  CHECK(worst < 5e-3);
}

TEST_CASE("sphere distances: line element and antipodes") {
  auto amb = AmbientManifold::sphere(1.0);
  // Near the chart origin the metric is 4*delta, so tiny chords double.
  double d = amb.distance({0, 0, 0}, {1e-4, 0, 0});
  CHECK(d == doctest::Approx(2e-4).epsilon(1e-6));
  // (1,0,0) lifts to the equator; its antipode is (-1,0,0).
  CHECK(amb.distance({1, 0, 0}, {-1, 0, 0}) == doctest::Approx(M_PI).epsilon(1e-12));
  // Chart origin lifts to the south pole; far chart points approach the north
  // pole, at distance pi * r from it.
  CHECK(amb.distance({0, 0, 0}, {1e8, 0, 0}) == doctest::Approx(M_PI).epsilon(1e-6));
}

TEST_CASE("flat torus wraps displacements and distances") {
  auto amb = AmbientManifold::flat_torus({2.0, 2.0, 2.0});
  Vec3d a{0.1, 0.0, 1.9}, b{1.9, 0.0, 0.1};
  Vec3d d = amb.displacement(a, b);
  CHECK(d.x == doctest::Approx(-0.2));
  CHECK(d.z == doctest::Approx(0.2));
  CHECK(amb.distance(a, b) == doctest::Approx(std::sqrt(0.08)));
  CHECK(amb.flat());
  Vec3d w = amb.wrap({-0.3, 4.5, 1.0});
  CHECK(w.x == doctest::Approx(1.7));
  CHECK(w.y == doctest::Approx(0.5));
  CHECK(w.z == doctest::Approx(1.0));
}

TEST_CASE("grid-sampled sphere metric reproduces the analytic chart") {
  double r = 1.0;
  MetricGrid grid = sample_sphere_grid(r, -1.6, 1.6, 33);
  auto amb = AmbientManifold::chart_grid(std::move(grid));
  auto exact = AmbientManifold::sphere(r);

  // Catmull-Rom interpolation error is O(h^3) on the smooth conformal
  // factor, and one order worse after differencing for the Christoffels.
  for (Vec3d x : {Vec3d{0.07, 0.02, -0.05}, Vec3d{0.31, -0.42, 0.18}, Vec3d{-0.9, 0.33, 0.55}}) {
    Mat3d ge = exact.metric(x), gg = amb.metric(x);
    for (int i = 0; i < 9; ++i) CHECK(gg.m[i] == doctest::Approx(ge.m[i]).epsilon(1e-3));
    auto game = exact.christoffels(x);
    auto gamg = amb.christoffels(x);
    for (int k = 0; k < 3; ++k)
      for (int i = 0; i < 9; ++i)
        CHECK(gamg[k].m[i] == doctest::Approx(game[k].m[i]).scale(1.0).epsilon(2e-2));
  }

  auto bounds = amb.curvature_bounds({{0.1, 0.0, 0.0}, {0.3, -0.2, 0.1}});
  auto exact_bounds = exact.curvature_bounds({});
  CHECK(bounds.inf_sectional == doctest::Approx(exact_bounds.inf_sectional).epsilon(0.05));
  CHECK(bounds.sup_riemann == doctest::Approx(exact_bounds.sup_riemann).epsilon(0.05));
}

TEST_CASE("grid file round trip and validation") {
  MetricGrid grid = sample_sphere_grid(1.0, -1.0, 1.0, 17);
  const char* path = "test_grid.a2g";
  {
    std::ofstream out(path);
    out << "a2flow-metric-grid 1\n";
    out << "origin " << grid.origin.x << " " << grid.origin.y << " " << grid.origin.z << "\n";
    out << "spacing " << grid.spacing.x << " " << grid.spacing.y << " " << grid.spacing.z << "\n";
    out << "dims " << grid.nx << " " << grid.ny << " " << grid.nz << "\n";
    out << "# node rows\n";
    out.precision(17);
    for (const auto& n : grid.node)
      out << n[0] << " " << n[1] << " " << n[2] << " " << n[3] << " " << n[4] << " " << n[5]
          << "\n";
  }
  auto amb = AmbientManifold::parse(std::string("chart:") + path);
  CHECK(amb.kind() == AmbientManifold::Kind::ChartGrid);
  CHECK(amb.describe() == std::string("chart:") + path);
  Mat3d g = amb.metric(Vec3d{0.05, -0.03, 0.11});
  Mat3d ge = sphere_metric_exact({0.05, -0.03, 0.11}, 1.0);
  for (int i = 0; i < 9; ++i) CHECK(g.m[i] == doctest::Approx(ge.m[i]).epsilon(5e-3));

  {
    std::ofstream out("bad_grid.a2g");
    out << "a2flow-metric-grid 1\norigin 0 0 0\nspacing 1 1 1\ndims 4 4 4\n";
    for (int i = 0; i < 64; ++i) out << "1 0 0 1 0 -1\n";  // not positive definite
  }
  CHECK_THROWS_AS(AmbientManifold::parse("chart:bad_grid.a2g"), AmbientError);
  CHECK_THROWS_AS(AmbientManifold::parse("chart:no_such_file.a2g"), AmbientError);
}

TEST_CASE("lattice distance approximates straight lines on a flat grid") {
  MetricGrid grid;
  grid.origin = {0, 0, 0};
  grid.spacing = {0.25, 0.25, 0.25};
  grid.nx = grid.ny = grid.nz = 17;
  for (int i = 0; i < 17 * 17 * 17; ++i) grid.node.push_back({1, 0, 0, 1, 0, 1});
  auto amb = AmbientManifold::chart_grid(std::move(grid));
  // Along a lattice axis the path is exact.
  CHECK(amb.distance({0.5, 0.5, 0.5}, {3.5, 0.5, 0.5}) == doctest::Approx(3.0).epsilon(1e-9));
  // Diagonals are overestimated by at most the 26-neighbor lattice
  // anisotropy, about 12% in the worst direction.
  double d = amb.distance({0.5, 0.5, 0.5}, {3.0, 2.0, 1.25});
  double exact = norm(Vec3d{2.5, 1.5, 0.75});
  CHECK(d >= exact - 1e-9);
  CHECK(d <= exact * 1.13);
}

TEST_CASE("ambient spec parsing") {
  CHECK(AmbientManifold::parse("euclidean").kind() == AmbientManifold::Kind::Euclidean);
  auto s = AmbientManifold::parse("sphere:r=2.5");
  CHECK(s.kind() == AmbientManifold::Kind::Sphere);
  CHECK(s.sphere_radius() == doctest::Approx(2.5));
  CHECK(s.describe() == "sphere:r=2.5");
  auto t = AmbientManifold::parse("torus:L=6.25");
  CHECK(t.periods().x == doctest::Approx(6.25));
  CHECK_THROWS_AS(AmbientManifold::parse("klein"), AmbientError);
  CHECK_THROWS_AS(AmbientManifold::parse("sphere:r=-1"), AmbientError);
  CHECK_THROWS_AS(AmbientManifold::parse("sphere:radius=1"), AmbientError);
  CHECK_THROWS_AS(AmbientManifold::parse("torus:L=0"), AmbientError);
}

TEST_CASE("metric scaling: blowup zoom") {
  auto base = std::make_shared<AmbientManifold>(AmbientManifold::sphere(1.0));
  double f = 0.1;  // zoom factor: distances divide by f, curvature shrinks
  auto zoom = AmbientManifold::scaled(base, f);
  Vec3d x{0.2, 0.1, 0.0};
  Mat3d gb = base->metric(x), gz = zoom.metric(x);
  for (int i = 0; i < 9; ++i) CHECK(gz.m[i] == doctest::Approx(gb.m[i] / (f * f)));
  CHECK(zoom.distance({0, 0, 0}, x) == doctest::Approx(base->distance({0, 0, 0}, x) / f));
  auto bb = base->curvature_bounds({x}), bz = zoom.curvature_bounds({x});
  CHECK(bz.inf_sectional == doctest::Approx(bb.inf_sectional * f * f));
  // Christoffels are scale-invariant.
  auto gamb = base->christoffels(x), gamz = zoom.christoffels(x);
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 9; ++i) CHECK(gamz[k].m[i] == doctest::Approx(gamb[k].m[i]));
}

TEST_CASE("taped ambient metric differentiates correctly") {
  auto amb = AmbientManifold::sphere(1.0);
  Vec3d x0{0.3, -0.5, 0.2};
  ad::Tape tape;
  ad::ScopedTape guard(tape);
  Vec3<ad::Var> x{ad::Var::input(x0.x), ad::Var::input(x0.y), ad::Var::input(x0.z)};
  ad::Var g00 = amb.metric(x)(0, 0);
  tape.backward(g00.id);
  double h = 1e-6;
  for (int a = 0; a < 3; ++a) {
    Vec3d xp = x0, xm = x0;
    xp[a] += h;
    xm[a] -= h;
    double fd = (amb.metric(xp)(0, 0) - amb.metric(xm)(0, 0)) / (2 * h);
    CHECK(tape.adjoint(a == 0 ? x.x.id : (a == 1 ? x.y.id : x.z.id)) ==
          doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("taped grid metric differentiates correctly") {
  MetricGrid grid = sample_sphere_grid(1.0, -1.2, 1.2, 25);
  auto amb = AmbientManifold::chart_grid(std::move(grid));
  Vec3d x0{0.13, -0.22, 0.31};
  ad::Tape tape;
  ad::ScopedTape guard(tape);
  Vec3<ad::Var> x{ad::Var::input(x0.x), ad::Var::input(x0.y), ad::Var::input(x0.z)};
  ad::Var g00 = amb.metric(x)(0, 0);
  tape.backward(g00.id);
  double h = 1e-6;
  for (int a = 0; a < 3; ++a) {
    Vec3d xp = x0, xm = x0;
    xp[a] += h;
    xm[a] -= h;
    double fd = (amb.metric(xp)(0, 0) - amb.metric(xm)(0, 0)) / (2 * h);
    CHECK(tape.adjoint(a == 0 ? x.x.id : (a == 1 ? x.y.id : x.z.id)) ==
          doctest::Approx(fd).epsilon(1e-5));
  }
}
