#pragma once

// Ideal structure of a bimodule over a multi-matrix algebra.
//
// Ideals of A = ⊕_i M_{n_i} are subsets of blocks.  A bimodule X induces a
// directed graph on the blocks: i → j when the i-th part of the left action
// sees the j-th part of the right structure, with multiplicity
// M(i,j) = rank(φ(p_i) restricted to block j) / n_i.  Invariance, fullness,
// saturation and the lattice of X-invariant ideals are all decided on this
// graph, and every graph-level decision is cross-checked against the
// defining inner-product conditions on the module itself.

#include <algorithm>
#include <functional>
#include <map>
#include <optional>

#include "hilbim/bimod.hpp"

namespace hilbim {

// ======================================================================
// Multiplicity data
// ======================================================================

// r(a): right multiplication by a as an operator on X = pA^k.
inline AMatrix right_mult(const HilbertModulePtr& m, const AlgebraElement& a) {
  return m->p * AMatrix::central_diagonal(a, m->k);
}

struct GraphData {
  std::vector<std::vector<int>> mult;   // M(i,j)
  std::vector<std::vector<bool>> adj;   // M(i,j) > 0
  int d = 0;

  bool edge(int i, int j) const { return adj[static_cast<size_t>(i)][static_cast<size_t>(j)]; }
};

// Extracts the multiplicity matrix of a bimodule.  The (i,j) entry counts
// the copies of the (i,j) rectangular-matrix bimodule inside X; adjacency is
// cross-checked against the norm criterion ‖φ(p_i)·r(p_j)‖ > 0.
inline GraphData graph_data(const BimodulePtr& b, double tol = kDefaultTol) {
  const auto& s = b->shape();
  const int d = s.num_blocks();
  GraphData g;
  g.d = d;
  g.mult.assign(static_cast<size_t>(d), std::vector<int>(static_cast<size_t>(d), 0));
  g.adj.assign(static_cast<size_t>(d), std::vector<bool>(static_cast<size_t>(d), false));
  for (int i = 0; i < d; ++i) {
    AMatrix li = b->phi.apply(AlgebraElement::central_projection(s, i));
    for (int j = 0; j < d; ++j) {
      // block j of the flattened φ(p_i) is a projection of rank M(i,j)·n_i
      const CMat& pj = li.blk[static_cast<size_t>(j)];
      int rank = detail::rank_psd(pj, std::max(tol, 1e-9) * 100);
      if (rank % s.blocks[static_cast<size_t>(i)] != 0)
        fail("InternalDisagreement", "graph_data: rank not divisible by n_i");
      g.mult[static_cast<size_t>(i)][static_cast<size_t>(j)] = rank / s.blocks[static_cast<size_t>(i)];
      AMatrix rj = right_mult(b->x, AlgebraElement::central_projection(s, j));
      bool normEdge = (li * rj).norm() > std::max(tol, 1e-9);
      if (normEdge != (g.mult[static_cast<size_t>(i)][static_cast<size_t>(j)] > 0))
        fail("InternalDisagreement", "graph_data: rank and norm adjacency disagree");
      g.adj[static_cast<size_t>(i)][static_cast<size_t>(j)] = normEdge;
    }
  }
  return g;
}

// ======================================================================
// Invariant ideals
// ======================================================================

// J is X-invariant when (X|JX) ⊆ J; on the graph this says out-edges from J
// stay inside J.  Both formulations are evaluated and must agree.
inline bool is_invariant(const BimodulePtr& b, const IdealMask& j, double tol = kDefaultTol) {
  const auto& s = b->shape();
  if (j.d != s.num_blocks()) fail("ShapeMismatch", "is_invariant");
  GraphData g = graph_data(b, tol);
  bool graphSays = true;
  for (int i = 0; i < g.d && graphSays; ++i) {
    if (!j.contains(i)) continue;
    for (int jj = 0; jj < g.d; ++jj)
      if (g.edge(i, jj) && !j.contains(jj)) {
        graphSays = false;
        break;
      }
  }
  // direct check: all inner products (x_a | p_i x_b), i ∈ J, lie in J
  bool directSays = true;
  auto us = frame(b->x);
  for (int i = 0; i < g.d && directSays; ++i) {
    if (!j.contains(i)) continue;
    AlgebraElement pi = AlgebraElement::central_projection(s, i);
    for (const auto& xa : us) {
      ModuleVector acted(b->x, b->phi.apply(pi) * xa.coords);
      for (const auto& xb : us) {
        AlgebraElement ip = inner(xb, acted);
        for (int m = 0; m < g.d; ++m)
          if (!j.contains(m) &&
              ip.blocks[static_cast<size_t>(m)].cwiseAbs().maxCoeff() > std::max(tol, 1e-9) * 10) {
            directSays = false;
          }
      }
      if (!directSays) break;
    }
  }
  if (graphSays != directSays)
    fail("InternalDisagreement", "is_invariant: graph and inner-product routes disagree");
  return graphSays;
}

// Largest ideal K with (X|KX) ⊆ J: on the graph, blocks all of whose
// out-edges stay in J.
inline IdealMask x_preimage_ideal(const BimodulePtr& b, const IdealMask& j,
                                  double tol = kDefaultTol) {
  GraphData g = graph_data(b, tol);
  IdealMask out = IdealMask::none(g.d);
  for (int i = 0; i < g.d; ++i) {
    bool allIn = true;
    for (int jj = 0; jj < g.d; ++jj)
      if (g.edge(i, jj) && !j.contains(jj)) allIn = false;
    if (allIn) out.add(i);
  }
  return out;
}

// J is saturated when it already contains every block forced into it by
// invariance: J_X ⊆ J where J_X = x_preimage_ideal(J).
inline bool is_saturated(const BimodulePtr& b, const IdealMask& j, double tol = kDefaultTol) {
  IdealMask pre = x_preimage_ideal(b, j, tol);
  for (int i = 0; i < j.d; ++i)
    if (pre.contains(i) && !j.contains(i)) return false;
  return true;
}

// All X-invariant ideals, by mask enumeration (d ≤ 20 guard).
inline std::vector<IdealMask> invariant_ideals(const BimodulePtr& b, double tol = kDefaultTol) {
  const int d = b->shape().num_blocks();
  if (d > 20) fail("TooManyBlocks", "invariant_ideals: enumeration over 2^d masks");
  GraphData g = graph_data(b, tol);
  std::vector<IdealMask> out;
  for (uint32_t bits = 0; bits < (1u << d); ++bits) {
    IdealMask j;
    j.bits = bits;
    j.d = d;
    bool inv = true;
    for (int i = 0; i < d && inv; ++i) {
      if (!j.contains(i)) continue;
      for (int jj = 0; jj < d; ++jj)
        if (g.edge(i, jj) && !j.contains(jj)) {
          inv = false;
          break;
        }
    }
    if (inv) out.push_back(j);
  }
  return out;
}

// X-simplicity: no invariant ideals besides 0 and A.  Equivalent to the
// irreducibility of the multiplicity graph; the equivalence is asserted.
inline bool is_x_simple(const BimodulePtr& b, double tol = kDefaultTol) {
  auto ideals = invariant_ideals(b, tol);
  bool byEnumeration = ideals.size() == 2;
  GraphData g = graph_data(b, tol);
  // irreducibility: every vertex reaches every vertex
  bool irreducible = true;
  for (int src = 0; src < g.d && irreducible; ++src) {
    std::vector<bool> seen(static_cast<size_t>(g.d), false);
    std::vector<int> stack{src};
    seen[static_cast<size_t>(src)] = true;
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (int w = 0; w < g.d; ++w)
        if (g.edge(v, w) && !seen[static_cast<size_t>(w)]) {
          seen[static_cast<size_t>(w)] = true;
          stack.push_back(w);
        }
    }
    for (int w = 0; w < g.d; ++w)
      if (!seen[static_cast<size_t>(w)]) irreducible = false;
  }
  if (byEnumeration != irreducible)
    fail("InternalDisagreement", "is_x_simple: enumeration and irreducibility disagree");
  return byEnumeration;
}

// ======================================================================
// Condition (I): aperiodicity of the multiplicity graph
// ======================================================================

// Condition (I) fails exactly when the multiplicity graph contains a cycle
// of vertices with total out-multiplicity one: the periodic word supported
// on such a cycle is an isolated point of the edge shift, and conversely an
// isolated point forces such a cycle.
struct ConditionIReport {
  bool holds = false;
  std::vector<int> permutation_cycle;  // witness cycle when (I) fails
};

inline ConditionIReport condition_I(const GraphData& g) {
  ConditionIReport rep;
  // functional subgraph: vertices with exactly one out-edge counted with
  // multiplicity; a cycle inside it is an isolated periodic orbit
  std::vector<int> next(static_cast<size_t>(g.d), -1);
  for (int i = 0; i < g.d; ++i) {
    int total = 0, target = -1;
    for (int j = 0; j < g.d; ++j) {
      total += g.mult[static_cast<size_t>(i)][static_cast<size_t>(j)];
      if (g.mult[static_cast<size_t>(i)][static_cast<size_t>(j)] > 0) target = j;
    }
    if (total == 1) next[static_cast<size_t>(i)] = target;
  }
  // find a cycle within the functional subgraph
  for (int start = 0; start < g.d; ++start) {
    std::vector<int> path;
    std::vector<int> where(static_cast<size_t>(g.d), -1);
    int v = start;
    while (v >= 0 && where[static_cast<size_t>(v)] < 0) {
      where[static_cast<size_t>(v)] = static_cast<int>(path.size());
      path.push_back(v);
      v = next[static_cast<size_t>(v)];
    }
    if (v >= 0) {
      rep.holds = false;
      rep.permutation_cycle.assign(path.begin() + where[static_cast<size_t>(v)], path.end());
      return rep;
    }
  }
  rep.holds = true;
  return rep;
}

inline ConditionIReport condition_I(const BimodulePtr& b, double tol = kDefaultTol) {
  return condition_I(graph_data(b, tol));
}

// Exhaustive oracle for small graphs: a vertex chain is "rigid" when only
// one admissible word of each length passes through it.  Condition (I)
// holds iff no vertex carries exactly one admissible word of every length
// up to the bound (the failure mode is an isolated infinite path).
inline bool condition_I_bruteforce(const GraphData& g, int maxLen = 12) {
  // count admissible words (edge paths weighted by multiplicity) from each
  // vertex; a vertex with exactly one length-maxLen continuation that also
  // returns to itself periodically witnesses failure
  for (int start = 0; start < g.d; ++start) {
    // paths counted with multiplicity
    std::vector<long long> cnt(static_cast<size_t>(g.d), 0);
    cnt[static_cast<size_t>(start)] = 1;
    long long total = 1;
    bool single = true;
    for (int step = 0; step < maxLen && single; ++step) {
      std::vector<long long> nxt(static_cast<size_t>(g.d), 0);
      total = 0;
      for (int i = 0; i < g.d; ++i)
        for (int j = 0; j < g.d; ++j)
          nxt[static_cast<size_t>(j)] +=
              cnt[static_cast<size_t>(i)] * g.mult[static_cast<size_t>(i)][static_cast<size_t>(j)];
      for (long long c : nxt) total += c;
      cnt = nxt;
      if (total != 1) single = false;
    }
    if (single) return false;  // exactly one infinite continuation: isolated point
  }
  return true;
}

// Admissible words of a given length in the multiplicity graph, as block
// index sequences (edges repeated per multiplicity are not distinguished).
inline std::vector<std::vector<int>> subshift_words(const GraphData& g, int len) {
  std::vector<std::vector<int>> words;
  std::vector<int> cur;
  std::function<void(int)> rec = [&](int remaining) {
    if (remaining == 0) {
      words.push_back(cur);
      return;
    }
    for (int j = 0; j < g.d; ++j) {
      if (!cur.empty() && !g.edge(cur.back(), j)) continue;
      cur.push_back(j);
      rec(remaining - 1);
      cur.pop_back();
    }
  };
  rec(len);
  return words;
}

// ======================================================================
// Quotient bimodule X/XJ over A/J
// ======================================================================

struct QuotientBimodule {
  BimodulePtr bimodule;       // the quotient, over A/J
  QuotientMap map;            // A → A/J
  IdealMask kernel_of_phi;    // blocks of A/J killed by the quotient left action
};

// Drops the blocks of an invariant ideal J.  Requires J saturated: when
// J_X ≠ J the quotient left action is not injective and the construction
// refuses (callers can pass the saturation J_X instead).
inline QuotientBimodule quotient_bimodule(const BimodulePtr& b, const IdealMask& j,
                                          double tol = kDefaultTol) {
  if (!is_invariant(b, j, tol)) fail("NotInvariant", "quotient_bimodule");
  if (j.full()) fail("FullIdeal", "quotient_bimodule: nothing left");
  IdealMask pre = x_preimage_ideal(b, j, tol);
  IdealMask extra = IdealMask::none(j.d);
  for (int i = 0; i < j.d; ++i)
    if (pre.contains(i) && !j.contains(i)) extra.add(i);
  if (!extra.empty())
    fail("NotSaturated",
         "quotient_bimodule: left action on the quotient would not be injective; saturate first");

  QuotientMap q = quotient(b->shape(), j);
  AMatrix pq = q.apply(b->x->p);
  auto mod = make_module(q.target, b->x->k, pq);
  PhiMap phi;
  phi.domain = q.target;
  phi.ambient = b->x->k;
  for (int jj = 0; jj < q.target.num_blocks(); ++jj) {
    int src = q.kept[static_cast<size_t>(jj)];
    int n = q.target.blocks[static_cast<size_t>(jj)];
    std::vector<AMatrix> row;
    for (int a = 0; a < n; ++a)
      for (int c = 0; c < n; ++c) row.push_back(q.apply(b->phi.unit_block(src, a, c)));
    phi.img.push_back(std::move(row));
  }
  QuotientBimodule out;
  out.map = q;
  out.kernel_of_phi = IdealMask::none(q.target.num_blocks());
  // the quotient module can be zero on some blocks; record them
  for (int jj = 0; jj < q.target.num_blocks(); ++jj) {
    AlgebraElement pj = AlgebraElement::central_projection(q.target, jj);
    if (phi.apply(pj).norm() <= std::max(tol, 1e-9) * 10) out.kernel_of_phi.add(jj);
  }
  if (!out.kernel_of_phi.empty())
    fail("NotSaturated", "quotient_bimodule: quotient left action has a kernel");
  out.bimodule = make_bimodule(mod, phi, tol);
  return out;
}

// ======================================================================
// Simplicity verdict
// ======================================================================

enum class Simplicity { Simple, NotSimple, Undecided };

struct SimplicityReport {
  Simplicity verdict = Simplicity::Undecided;
  bool x_simple = false;
  bool condition_i = false;
  std::string certified_by;   // route that produced the certificate
  std::vector<IdealMask> ideal_lattice;
  std::vector<int> permutation_cycle;  // populated when condition (I) fails
};

// Structural verdict from the invariant-ideal lattice and condition (I).
// A proper invariant ideal certifies non-simplicity.  X-simplicity together
// with the aperiodicity certificate gives simplicity.  An X-simple
// permutation bimodule stays undecided at this level (the algebra is a
// matrix algebra over a circle action fixed point; witness routes may still
// decide it).
inline SimplicityReport simplicity_verdict(const BimodulePtr& b, double tol = kDefaultTol) {
  SimplicityReport rep;
  rep.ideal_lattice = invariant_ideals(b, tol);
  rep.x_simple = is_x_simple(b, tol);
  ConditionIReport ci = condition_I(b, tol);
  rep.condition_i = ci.holds;
  rep.permutation_cycle = ci.permutation_cycle;
  if (!rep.x_simple) {
    rep.verdict = Simplicity::NotSimple;
    rep.certified_by = "ideal_correspondence";
    return rep;
  }
  if (ci.holds) {
    rep.verdict = Simplicity::Simple;
    rep.certified_by = "irreducible_aperiodic_multigraph";
    return rep;
  }
  rep.verdict = Simplicity::Undecided;
  rep.certified_by = "";
  return rep;
}

}  // namespace hilbim
