#pragma once

// Small fixed-size linear algebra, templated on the scalar so the same
// kernels run on plain doubles and on tape-recorded variables.

#include <array>
#include <cmath>
#include <cstddef>

namespace a2flow {

// Plain-double overload of the tape accessor so templated kernels can take
// value(x) on either scalar type.
inline double value(double x) { return x; }

template <class T> struct Vec3 {
  T x{}, y{}, z{};

  T& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
  const T& operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator-() const { return {-x, -y, -z}; }
  Vec3 operator*(const T& s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(const T& s) const { return {x / s, y / s, z / s}; }
  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  Vec3& operator*=(const T& s) { x *= s; y *= s; z *= s; return *this; }
};

template <class T> Vec3<T> operator*(const T& s, const Vec3<T>& v) { return v * s; }

template <class T> T dot(const Vec3<T>& a, const Vec3<T>& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

template <class T> Vec3<T> cross(const Vec3<T>& a, const Vec3<T>& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

template <class T> T norm2(const Vec3<T>& v) { return dot(v, v); }

template <class T> T norm(const Vec3<T>& v) {
  using std::sqrt;
  return sqrt(dot(v, v));
}

template <class T> Vec3<T> normalized(const Vec3<T>& v) { return v / norm(v); }

// Row-major 3x3.
template <class T> struct Mat3 {
  std::array<T, 9> m{};

  T& operator()(int r, int c) { return m[3 * r + c]; }
  const T& operator()(int r, int c) const { return m[3 * r + c]; }

  static Mat3 identity() {
    Mat3 I;
    I(0, 0) = T(1); I(1, 1) = T(1); I(2, 2) = T(1);
    return I;
  }

  Mat3 operator+(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 9; ++i) r.m[i] = m[i] + o.m[i];
    return r;
  }
  Mat3 operator-(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 9; ++i) r.m[i] = m[i] - o.m[i];
    return r;
  }
  Mat3 operator*(const T& s) const {
    Mat3 r;
    for (int i = 0; i < 9; ++i) r.m[i] = m[i] * s;
    return r;
  }
  Vec3<T> operator*(const Vec3<T>& v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
            m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
  }
  Mat3 operator*(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        T s = (*this)(i, 0) * o(0, j);
        s = s + (*this)(i, 1) * o(1, j);
        s = s + (*this)(i, 2) * o(2, j);
        r(i, j) = s;
      }
    return r;
  }
  Mat3 transposed() const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
    return r;
  }
};

template <class T> T det(const Mat3<T>& a) {
  return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1))
       - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0))
       + a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
}

template <class T> Mat3<T> inverse(const Mat3<T>& a) {
  Mat3<T> r;
  r(0, 0) = a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1);
  r(0, 1) = a(0, 2) * a(2, 1) - a(0, 1) * a(2, 2);
  r(0, 2) = a(0, 1) * a(1, 2) - a(0, 2) * a(1, 1);
  r(1, 0) = a(1, 2) * a(2, 0) - a(1, 0) * a(2, 2);
  r(1, 1) = a(0, 0) * a(2, 2) - a(0, 2) * a(2, 0);
  r(1, 2) = a(0, 2) * a(1, 0) - a(0, 0) * a(1, 2);
  r(2, 0) = a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0);
  r(2, 1) = a(0, 1) * a(2, 0) - a(0, 0) * a(2, 1);
  r(2, 2) = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
  T d = det(a);
  for (int i = 0; i < 9; ++i) r.m[i] = r.m[i] / d;
  return r;
}

// Metric pairing x^T g y.
template <class T> T dot_g(const Mat3<T>& g, const Vec3<T>& a, const Vec3<T>& b) {
  return dot(a, g * b);
}

template <class T> T norm_g(const Mat3<T>& g, const Vec3<T>& a) {
  using std::sqrt;
  return sqrt(dot_g(g, a, a));
}

// Metric cross product: (a x_g b)^k = g^{kl} sqrt(det g) eps_{lmn} a^m b^n.
// Orthogonal to both arguments in g; right-handed w.r.t. the chart orientation.
template <class T> Vec3<T> cross_g(const Mat3<T>& g, const Vec3<T>& a, const Vec3<T>& b) {
  using std::sqrt;
  Vec3<T> c = cross(a, b) * sqrt(det(g));
  return inverse(g) * c;
}

// Row-major 2x2.
template <class T> struct Mat2 {
  std::array<T, 4> m{};

  T& operator()(int r, int c) { return m[2 * r + c]; }
  const T& operator()(int r, int c) const { return m[2 * r + c]; }

  static Mat2 identity() {
    Mat2 I;
    I(0, 0) = T(1); I(1, 1) = T(1);
    return I;
  }

  Mat2 operator+(const Mat2& o) const {
    Mat2 r;
    for (int i = 0; i < 4; ++i) r.m[i] = m[i] + o.m[i];
    return r;
  }
  Mat2 operator-(const Mat2& o) const {
    Mat2 r;
    for (int i = 0; i < 4; ++i) r.m[i] = m[i] - o.m[i];
    return r;
  }
  Mat2 operator*(const T& s) const {
    Mat2 r;
    for (int i = 0; i < 4; ++i) r.m[i] = m[i] * s;
    return r;
  }
  Mat2 operator*(const Mat2& o) const {
    Mat2 r;
    r(0, 0) = m[0] * o(0, 0) + m[1] * o(1, 0);
    r(0, 1) = m[0] * o(0, 1) + m[1] * o(1, 1);
    r(1, 0) = m[2] * o(0, 0) + m[3] * o(1, 0);
    r(1, 1) = m[2] * o(0, 1) + m[3] * o(1, 1);
    return r;
  }
};

template <class T> T det(const Mat2<T>& a) { return a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0); }

template <class T> T trace(const Mat2<T>& a) { return a(0, 0) + a(1, 1); }

template <class T> Mat2<T> inverse(const Mat2<T>& a) {
  T d = det(a);
  Mat2<T> r;
  r(0, 0) = a(1, 1) / d;
  r(0, 1) = T(0) - a(0, 1) / d;
  r(1, 0) = T(0) - a(1, 0) / d;
  r(1, 1) = a(0, 0) / d;
  return r;
}

// Solve the 2x2 SPD system A x = b (used by the least-squares normal fit).
template <class T> std::array<T, 2> solve_spd2(const Mat2<T>& a, const T& b0, const T& b1) {
  T d = det(a);
  return {(a(1, 1) * b0 - a(0, 1) * b1) / d, (a(0, 0) * b1 - a(1, 0) * b0) / d};
}

// In-place unpivoted Cholesky solve of the SPD system M x = b (M row-major).
// N stays tiny (the quadric-fit normal equations are 5x5), and the fixed
// operation order keeps taped and plain evaluations bitwise identical.
template <class T, int N>
std::array<T, N> solve_spd(std::array<T, N * N> M, std::array<T, N> b) {
  using std::sqrt;
  for (int j = 0; j < N; ++j) {
    T d = M[j * N + j];
    for (int k = 0; k < j; ++k) d = d - M[j * N + k] * M[j * N + k];
    T piv = sqrt(d);
    M[j * N + j] = piv;
    for (int i = j + 1; i < N; ++i) {
      T s = M[i * N + j];
      for (int k = 0; k < j; ++k) s = s - M[i * N + k] * M[j * N + k];
      M[i * N + j] = s / piv;
    }
  }
  for (int i = 0; i < N; ++i) {
    T s = b[i];
    for (int k = 0; k < i; ++k) s = s - M[i * N + k] * b[k];
    b[i] = s / M[i * N + i];
  }
  for (int i = N - 1; i >= 0; --i) {
    T s = b[i];
    for (int k = i + 1; k < N; ++k) s = s - M[k * N + i] * b[k];
    b[i] = s / M[i * N + i];
  }
  return b;
}

using Vec3d = Vec3<double>;
using Mat3d = Mat3<double>;
using Mat2d = Mat2<double>;

}  // namespace a2flow
