#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "a2flow/linalg.hpp"
#include "a2flow/tape.hpp"
#include "a2flow/threads.hpp"

using namespace a2flow;

TEST_CASE("vec3 and mat3 basics") {
  Vec3d a{1, 2, 3}, b{-2, 0.5, 4};
  CHECK(dot(a, b) == doctest::Approx(11.0));
  Vec3d c = cross(a, b);
  CHECK(dot(c, a) == doctest::Approx(0.0));
  CHECK(dot(c, b) == doctest::Approx(0.0));
  CHECK(norm(Vec3d{3, 4, 0}) == doctest::Approx(5.0));

  Mat3d m;
  m(0, 0) = 2; m(0, 1) = 1; m(0, 2) = 0;
  m(1, 0) = 1; m(1, 1) = 3; m(1, 2) = 1;
  m(2, 0) = 0; m(2, 1) = 1; m(2, 2) = 4;
  Mat3d mi = inverse(m);
  Mat3d prod = m * mi;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(prod(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));
  CHECK(det(m) == doctest::Approx(2 * 11 - 1 * 4));
}

TEST_CASE("metric cross product is metric-orthogonal and oriented") {
  Mat3d g;
  g(0, 0) = 4; g(0, 1) = 0.3; g(0, 2) = 0;
  g(1, 0) = 0.3; g(1, 1) = 2; g(1, 2) = -0.1;
  g(2, 0) = 0; g(2, 1) = -0.1; g(2, 2) = 1.5;
  Vec3d a{1, 0.2, -0.3}, b{-0.4, 1, 0.1};
  Vec3d c = cross_g(g, a, b);
  CHECK(dot_g(g, c, a) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(dot_g(g, c, b) == doctest::Approx(0.0).epsilon(1e-12));
  // Euclidean metric reduces to the ordinary cross product.
  Vec3d ce = cross_g(Mat3d::identity(), a, b);
  Vec3d ref = cross(a, b);
  CHECK(norm(ce - ref) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("spd 2x2 solve") {
  Mat2d a;
  a(0, 0) = 3; a(0, 1) = 1; a(1, 0) = 1; a(1, 1) = 2;
  auto x = solve_spd2(a, 5.0, 4.0);
  CHECK(3 * x[0] + 1 * x[1] == doctest::Approx(5.0));
  CHECK(1 * x[0] + 2 * x[1] == doctest::Approx(4.0));
}

namespace {

// Shared scalar-generic test function covering every recorded op.
template <class T> T sample_fn(const T& x, const T& y, const T& z) {
  using std::fabs;
  using std::sqrt;
  T a = x * y + sqrt(z) / (x + T(2));
  T b = a - y * T(0.5);
  T c = fabs(b) * b + T(1) / z;
  return c * c;
}

}  // namespace

TEST_CASE("tape adjoints match finite differences") {
  double x0 = 1.3, y0 = -0.7, z0 = 2.1;
  ad::Tape tape;
  ad::ScopedTape guard(tape);
  ad::Var x = ad::Var::input(x0), y = ad::Var::input(y0), z = ad::Var::input(z0);
  ad::Var out = sample_fn(x, y, z);
  CHECK(out.v == doctest::Approx(sample_fn(x0, y0, z0)));
  tape.backward(out.id);

  double h = 1e-6;
  double gx = (sample_fn(x0 + h, y0, z0) - sample_fn(x0 - h, y0, z0)) / (2 * h);
  double gy = (sample_fn(x0, y0 + h, z0) - sample_fn(x0, y0 - h, z0)) / (2 * h);
  double gz = (sample_fn(x0, y0, z0 + h) - sample_fn(x0, y0, z0 - h)) / (2 * h);
  CHECK(tape.adjoint(x.id) == doctest::Approx(gx).epsilon(1e-7));
  CHECK(tape.adjoint(y.id) == doctest::Approx(gy).epsilon(1e-7));
  CHECK(tape.adjoint(z.id) == doctest::Approx(gz).epsilon(1e-7));
}

TEST_CASE("tape works with vector kernels") {
  ad::Tape tape;
  ad::ScopedTape guard(tape);
  Vec3<ad::Var> v{ad::Var::input(0.4), ad::Var::input(-1.2), ad::Var::input(0.9)};
  ad::Var n = norm(v);
  tape.backward(n.id);
  Vec3d vd{0.4, -1.2, 0.9};
  Vec3d expected = vd / norm(vd);
  CHECK(tape.adjoint(v.x.id) == doctest::Approx(expected.x));
  CHECK(tape.adjoint(v.y.id) == doctest::Approx(expected.y));
  CHECK(tape.adjoint(v.z.id) == doctest::Approx(expected.z));
}

TEST_CASE("tape reuse after reset") {
  ad::Tape tape;
  for (int rep = 0; rep < 3; ++rep) {
    ad::ScopedTape guard(tape);
    ad::Var x = ad::Var::input(2.0 + rep);
    ad::Var y = x * x * x;
    tape.backward(y.id);
    CHECK(tape.adjoint(x.id) == doctest::Approx(3.0 * (2.0 + rep) * (2.0 + rep)));
  }
}

TEST_CASE("parallel_for covers the range once, any thread count") {
  for (int threads : {1, 4}) {
    set_thread_count(threads);
    std::vector<int> hits(257, 0);
    parallel_for(257, [&](int i) { hits[i] += 1; });
    for (int h : hits) CHECK(h == 1);
  }
  set_thread_count(1);
}
