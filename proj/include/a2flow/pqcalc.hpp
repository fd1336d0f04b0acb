#pragma once
// Structural term calculus for the curvature polynomials that organize the
// fourth-order evolution equation of the second fundamental form.
//
// Terms are equivalence classes, not tensor expressions:
//   P(k,l)      universal contractions of l covariant-derivative factors of
//               the second fundamental form A with total derivative count k.
//   Q(k,l;m)    one ambient-curvature factor times A-factors; k bounds the
//               total A-derivative count, k+l the total weight, m (when
//               present) the ambient-curvature derivative order.
//   QRR(k,l)    two ambient-curvature factors, same weight bookkeeping.
//   Sym(name)   an explicit leading operator kept symbolic (e.g. Lap^2 A).
//
// Three rewrite rules generate the calculus:
//   deriv-P:    nabla P(k,l)   -> P(k+1,l)
//   deriv-Q:    nabla Q(k,l;m) -> Q(k+1,l;m+1)      (QRR: k+1, same shape)
//   absorb-A:   X(k,l) * A     -> X(k,l+1)           (any kind)
//
// Derivations are replayed as scripted rewrite chains; every step is checked
// (weight k+l changes exactly as the rule prescribes) and logged to a trace,
// one line per rewrite. Reclassification steps (tightening a class label
// when the produced terms satisfy a stronger constraint than the generic
// rule guarantees) are explicit trace steps, never silent.

#include <stdexcept>
#include <string>
#include <vector>

namespace a2flow::pq {

struct PQError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Kind { P, Q, QRR, LeadingOp };

struct PQTerm {
  Kind kind = Kind::P;
  int k = 0;
  int l = 0;
  int m = -1;          // derivative order bound on the curvature factor; -1 = unstated
  std::string symbol;  // LeadingOp only

  // Shape invariants: k, l >= 0; m >= 0 when stated; only Q carries m;
  // LeadingOp carries a nonempty symbol and no grading. Throws PQError.
  void check() const;

  bool operator==(const PQTerm& o) const;
  bool operator<(const PQTerm& o) const;  // canonical order for normalization
  std::string str() const;                // "P(2,3)", "Q(2,1;1)", "QRR(0,1)", symbol
};

PQTerm P(int k, int l);
PQTerm Q(int k, int l, int m = -1);
PQTerm QRR(int k, int l);
PQTerm Sym(const std::string& symbol);

// Multiset of term classes. A universal linear combination absorbs repeats,
// so normalization sorts and deduplicates structurally equal terms.
struct PQSum {
  std::vector<PQTerm> terms;

  PQSum() = default;
  PQSum(std::initializer_list<PQTerm> ts) : terms(ts) {}

  PQSum& add(const PQTerm& t);
  PQSum& add(const PQSum& s);
  bool operator==(const PQSum& o) const;
  std::string str() const;  // " + "-joined canonical rendering
};

// Sort + dedupe; idempotent. Terms are validated first.
PQSum normalize(PQSum s);

// deriv-P / deriv-Q rules. LeadingOp input throws PQError.
PQSum nabla(const PQTerm& t);

// absorb-A rule: one more A factor. LeadingOp input throws PQError.
PQTerm contract_A(const PQTerm& t);

struct TraceLine {
  std::string rule;  // short rule tag
  std::string text;  // human-readable rewrite statement
};

struct Derivation {
  PQSum result;
  std::vector<TraceLine> trace;
  std::string render() const;  // one "rule | text" line per step + result line
};

// Second-derivative interchange on A: swapping the derivative pair against
// the tensor slots costs {P(0,3), Q(0,1;1)}; with a flat ambient every
// curvature class vanishes and only {P(0,3)} survives.
Derivation derive_commutator_2(bool flat = false);

// Fourth-order interchange on the traced second derivative of A: the paired
// swap costs {Q(2,1;1)} (empty in a flat ambient).
Derivation derive_commutator_4(bool flat = false);

// Structure of the time derivative of A along the energy descent flow:
// substitutes the gradient's structural form into the normal-variation
// formula and normalizes. Returns exactly
//   {Sym(Lap^2 A), P(2,3), P(0,5), Q(2,1;1), QRR(0,1)}
// and in flat mode {Sym(Lap^2 A), P(2,3), P(0,5)}.
Derivation derive_evolution_structure(bool flat = false);

}  // namespace a2flow::pq
