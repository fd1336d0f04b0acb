#pragma once

// Reverse-mode derivative tape. The curvature kernels are templated on the
// scalar type; instantiating them with ad::Var records every arithmetic op
// onto the active tape, and backward() then yields exact partial derivatives
// of the recorded output w.r.t. the registered inputs. Only the operations
// the energy pipeline needs are provided (+ - * / sqrt and value
// comparisons); branches taken on Var compare by value, which is correct for
// piecewise-smooth quantities like the clamped mixed dual areas.

#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

namespace a2flow::ad {

struct Tape {
  struct Node {
    double wa, wb;  // local partials w.r.t. the two parents
    int a, b;       // parent node ids, -1 for none
  };

  std::vector<Node> nodes;
  std::vector<double> adj;

  void reset() { nodes.clear(); }

  int push(double wa, int a, double wb, int b) {
    nodes.push_back({wa, wb, a, b});
    return static_cast<int>(nodes.size()) - 1;
  }

  // Seeds d(output)=1 and accumulates adjoints into adj[].
  void backward(int output) {
    adj.assign(nodes.size(), 0.0);
    adj[output] = 1.0;
    for (int i = output; i >= 0; --i) {
      double d = adj[i];
      if (d == 0.0) continue;
      const Node& n = nodes[i];
      if (n.a >= 0) adj[n.a] += n.wa * d;
      if (n.b >= 0) adj[n.b] += n.wb * d;
    }
  }

  double adjoint(int id) const { return adj[id]; }
};

namespace detail {
inline Tape*& active_tape() {
  thread_local Tape* t = nullptr;
  return t;
}
}  // namespace detail

struct ScopedTape {
  explicit ScopedTape(Tape& t) {
    prev = detail::active_tape();
    detail::active_tape() = &t;
    t.reset();
  }
  ~ScopedTape() { detail::active_tape() = prev; }
  Tape* prev;
};

struct Var {
  double v = 0.0;
  int id = -1;  // -1: constant, not on the tape

  Var() = default;
  Var(double c) : v(c) {}  // implicit: lets T(0), T(1) work in templates
  Var(double value, int node) : v(value), id(node) {}

  static Var input(double value) {
    Tape* t = detail::active_tape();
    return {value, t->push(0.0, -1, 0.0, -1)};
  }
};

inline Var record(double v, double wa, const Var& a, double wb, const Var& b) {
  if (a.id < 0 && b.id < 0) return {v};
  return {v, detail::active_tape()->push(wa, a.id, wb, b.id)};
}

inline Var record(double v, double wa, const Var& a) {
  if (a.id < 0) return {v};
  return {v, detail::active_tape()->push(wa, a.id, 0.0, -1)};
}

inline Var operator+(const Var& a, const Var& b) { return record(a.v + b.v, 1.0, a, 1.0, b); }
inline Var operator-(const Var& a, const Var& b) { return record(a.v - b.v, 1.0, a, -1.0, b); }
inline Var operator*(const Var& a, const Var& b) { return record(a.v * b.v, b.v, a, a.v, b); }
inline Var operator/(const Var& a, const Var& b) {
  // The value must be a plain division (not a*(1/b)) so taped evaluations
  // stay bitwise identical to the double instantiation of the same kernel.
  double q = a.v / b.v;
  double inv = 1.0 / b.v;
  return record(q, inv, a, -q * inv, b);
}
inline Var operator-(const Var& a) { return record(-a.v, -1.0, a); }
inline Var& operator+=(Var& a, const Var& b) { a = a + b; return a; }
inline Var& operator-=(Var& a, const Var& b) { a = a - b; return a; }
inline Var& operator*=(Var& a, const Var& b) { a = a * b; return a; }

inline Var sqrt(const Var& a) {
  double s = std::sqrt(a.v);
  return record(s, 0.5 / s, a);
}
inline Var fabs(const Var& a) { return record(std::fabs(a.v), a.v < 0.0 ? -1.0 : 1.0, a); }

inline bool operator<(const Var& a, const Var& b) { return a.v < b.v; }
inline bool operator>(const Var& a, const Var& b) { return a.v > b.v; }
inline bool operator<=(const Var& a, const Var& b) { return a.v <= b.v; }
inline bool operator>=(const Var& a, const Var& b) { return a.v >= b.v; }

inline double value(const Var& a) { return a.v; }
inline double value(double a) { return a; }

}  // namespace a2flow::ad
