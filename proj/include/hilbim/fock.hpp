#pragma once

// Truncated Fock module F_N = ⊕_{m=0}^N X^{⊗m} and its operator calculus.
//
// The truncated Fock space is presented as a single Hilbert module
// Q·A^K with Q = diag(P_0, ..., P_N), so every Fock operator is an
// honest ModuleOperator and norms are exact block spectral norms.
// Creation maps level m to m+1 for m < N and annihilates the top level;
// with that rule the Toeplitz relation T_x*T_y = ρ((x|y)) holds exactly
// below the cut and the covering sum Σ_u T_u T_u* equals 1 − P_0, so the
// bottom and top defects locate precisely the relations that only hold in
// the quotient picture.  The gauge action is the diagonal unitary t^m and
// the degree-0 average is computed as a genuine discrete circle average,
// which Fourier orthogonality makes equal to block extraction for
// degree-bounded operators.

#include <cmath>
#include <map>
#include <memory>
#include <vector>

#include "hilbim/bimod.hpp"

namespace hilbim {

// ======================================================================
// The truncated Fock module
// ======================================================================

struct TruncatedFock {
  BimodulePtr base;
  int n = 4;                   // truncation level N
  HilbertModulePtr space;      // F_N = Q·A^K, Q = diag(P_0..P_N)
  std::vector<int> offsets;    // offsets[m] = first ambient slot of level m
  std::vector<int> ambients;   // ambients[m] = ambient size of X^{⊗m}
  int total = 0;               // K = Σ ambients

  int levels() const { return n + 1; }
};

using FockPtr = std::shared_ptr<const TruncatedFock>;

inline FockPtr truncated_fock(const BimodulePtr& b, int n = 4, int dim_guard = 20000) {
  if (n < 0) fail("BadLevel", "truncated_fock: negative truncation level");
  TruncatedFock f;
  f.base = b;
  f.n = n;
  int cdim = 0;
  for (int m = 0; m <= n; ++m) {
    const auto& lv = b->level(m);
    f.offsets.push_back(f.total);
    f.ambients.push_back(lv.phi.ambient);
    f.total += lv.phi.ambient;
    cdim += lv.module->complex_dim();
    if (cdim > dim_guard)
      fail("FockTooLarge", "truncated_fock: " + std::to_string(cdim) +
                               " complex dimensions exceed the guard at level " +
                               std::to_string(m));
  }
  const auto& s = b->shape();
  AMatrix q = AMatrix::zero(s, f.total, f.total);
  for (int m = 0; m <= n; ++m) {
    const AMatrix& p = b->level(m).module->p;
    for (size_t i = 0; i < q.blk.size(); ++i) {
      int nb = s.blocks[i];
      q.blk[i].block(f.offsets[static_cast<size_t>(m)] * nb, f.offsets[static_cast<size_t>(m)] * nb,
                     f.ambients[static_cast<size_t>(m)] * nb,
                     f.ambients[static_cast<size_t>(m)] * nb) = p.blk[i];
    }
  }
  f.space = make_module_unchecked(s, f.total, std::move(q));
  return std::make_shared<TruncatedFock>(std::move(f));
}

namespace detail {

inline void fock_place(AMatrix& big, const TruncatedFock& f, int to, int from, const AMatrix& m) {
  for (size_t i = 0; i < big.blk.size(); ++i) {
    int nb = big.shape.blocks[i];
    big.blk[i].block(f.offsets[static_cast<size_t>(to)] * nb,
                     f.offsets[static_cast<size_t>(from)] * nb,
                     f.ambients[static_cast<size_t>(to)] * nb,
                     f.ambients[static_cast<size_t>(from)] * nb) += m.blk[i];
  }
}

inline AMatrix fock_extract(const AMatrix& big, const TruncatedFock& f, int to, int from) {
  AMatrix out(big.shape, f.ambients[static_cast<size_t>(to)], f.ambients[static_cast<size_t>(from)]);
  for (size_t i = 0; i < out.blk.size(); ++i) {
    int nb = big.shape.blocks[i];
    out.blk[i] = big.blk[i].block(f.offsets[static_cast<size_t>(to)] * nb,
                                  f.offsets[static_cast<size_t>(from)] * nb,
                                  f.ambients[static_cast<size_t>(to)] * nb,
                                  f.ambients[static_cast<size_t>(from)] * nb);
  }
  return out;
}

}  // namespace detail

// ======================================================================
// Fock operators
// ======================================================================

struct FockOperator {
  FockPtr fock;
  ModuleOperator op;  // dom = cod = fock->space

  FockOperator(FockPtr f, ModuleOperator o) : fock(std::move(f)), op(std::move(o)) {
    if (!same_module(*op.dom, *fock->space) || !same_module(*op.cod, *fock->space))
      fail("ModuleMismatch", "FockOperator: operator does not act on F_N");
  }

  double norm() const { return op.norm(); }
  FockOperator adjoint() const { return {fock, op.adjoint()}; }

  FockOperator operator+(const FockOperator& o) const {
    require_same_fock(o, "operator+");
    return {fock, op + o.op};
  }
  FockOperator operator-(const FockOperator& o) const {
    require_same_fock(o, "operator-");
    return {fock, op - o.op};
  }
  friend FockOperator operator*(Complex c, const FockOperator& t) { return {t.fock, c * t.op}; }
  FockOperator operator*(const FockOperator& o) const {
    require_same_fock(o, "operator*");
    return {fock, op * o.op};
  }

  // The (to, from) level block, a k_to × k_from matrix over A.
  AMatrix level_block(int to, int from) const {
    if (to < 0 || from < 0 || to > fock->n || from > fock->n)
      fail("BadLevel", "FockOperator::level_block");
    return detail::fock_extract(op.block, *fock, to, from);
  }

  void require_same_fock(const FockOperator& o, const char* where) const {
    if (fock.get() != o.fock.get()) fail("ModuleMismatch", where);
  }
};

inline FockOperator fock_zero(const FockPtr& f) {
  return {f, ModuleOperator::zero(f->space, f->space)};
}

inline FockOperator fock_identity(const FockPtr& f) {
  return {f, ModuleOperator::identity(f->space)};
}

// Projection onto level m.
inline FockOperator level_projection(const FockPtr& f, int m) {
  if (m < 0 || m > f->n) fail("BadLevel", "level_projection");
  AMatrix big = AMatrix::zero(f->base->shape(), f->total, f->total);
  detail::fock_place(big, *f, m, m, f->base->level(m).module->p);
  return {f, ModuleOperator(f->space, f->space, std::move(big))};
}

// Projection onto levels 0..m-1 (strictly below the cut when m = N).
inline FockOperator below_projection(const FockPtr& f, int m) {
  FockOperator out = fock_zero(f);
  for (int l = 0; l < m && l <= f->n; ++l) out = out + level_projection(f, l);
  return out;
}

// Canonical truncated representation of a graded operator: π(T) = Σ_j T⊗1^{⊗j}
// placed at every level pair it reaches inside F_N.  Blocks that would land
// above the cut are dropped, matching the creation truncation rule.
inline FockOperator represent(const FockPtr& f, const GradedOperator& t) {
  if (t.base.get() != f->base.get()) fail("ModuleMismatch", "represent: wrong base bimodule");
  if (t.r > f->n || t.s > f->n)
    fail("DegreeOverflow", "represent: graded operator lives above the truncation");
  AMatrix big = AMatrix::zero(f->base->shape(), f->total, f->total);
  GradedOperator ext = t;
  for (int j = 0; t.r + j <= f->n && t.s + j <= f->n; ++j) {
    if (j > 0) ext = right_extend(ext);
    detail::fock_place(big, *f, ext.s, ext.r, ext.block);
  }
  return {f, ModuleOperator(f->space, f->space, std::move(big))};
}

// Diagonal action of the coefficient algebra: ρ(a) = ⊕_m φ_m(a).
inline FockOperator fock_action(const FockPtr& f, const AlgebraElement& a) {
  return represent(f, GradedOperator{f->base, 0, 0, AMatrix::from_element(a), ""});
}

// Creation T_x: level m ↦ m+1 below the cut, level N ↦ 0.
inline FockOperator creation(const FockPtr& f, const ModuleVector& x) {
  if (!same_module(*x.module, *f->base->x)) fail("ModuleMismatch", "creation: vector not in X");
  return represent(f, creation(f->base, x, 0));
}

// ======================================================================
// Gauge action and degree calculus
// ======================================================================

// U(t) = ⊕_m t^m P_m; unitary on F_N when |t| = 1.
inline FockOperator gauge(const FockPtr& f, Complex t) {
  AMatrix big = AMatrix::zero(f->base->shape(), f->total, f->total);
  Complex pw = 1.0;
  for (int m = 0; m <= f->n; ++m) {
    detail::fock_place(big, *f, m, m, pw * f->base->level(m).module->p);
    pw *= t;
  }
  return {f, ModuleOperator(f->space, f->space, std::move(big))};
}

// Exact degree-d part: the blocks (m+d, m).
inline FockOperator degree_component(const FockOperator& t, int d) {
  const TruncatedFock& f = *t.fock;
  AMatrix big = AMatrix::zero(f.base->shape(), f.total, f.total);
  for (int m = 0; m <= f.n; ++m) {
    int to = m + d;
    if (to < 0 || to > f.n) continue;
    detail::fock_place(big, f, to, m, t.level_block(to, m));
  }
  return {t.fock, ModuleOperator(f.space, f.space, std::move(big))};
}

// Degrees whose blocks carry mass above tol (relative to the operator norm).
inline std::vector<int> degree_support(const FockOperator& t, double tol = 1e-12) {
  std::vector<int> out;
  double scale = std::max(1.0, t.norm());
  for (int d = -t.fock->n; d <= t.fock->n; ++d)
    if (degree_component(t, d).norm() > tol * scale) out.push_back(d);
  return out;
}

// m_0(T) as the discrete average of gauge conjugates over 2·maxdeg+1 roots
// of unity.  Fourier orthogonality kills every degree d with 0 < |d| ≤ maxdeg
// exactly, so the average equals the degree-0 block extraction whenever the
// support really is bounded by maxdeg; a larger support is rejected rather
// than aliased.
inline FockOperator degree_average(const FockPtr& f, const FockOperator& t, int maxdeg) {
  if (t.fock.get() != f.get()) fail("ModuleMismatch", "degree_average");
  if (maxdeg < 0) fail("BadLevel", "degree_average: negative degree bound");
  for (int d : degree_support(t, 1e-11))
    if (std::abs(d) > maxdeg)
      fail("DegreeOverflow", "degree_average: support contains degree " + std::to_string(d) +
                                 " beyond the declared bound " + std::to_string(maxdeg));
  const int q = 2 * maxdeg + 1;
  FockOperator acc = fock_zero(f);
  for (int j = 0; j < q; ++j) {
    double th = 2.0 * 3.14159265358979323846 * static_cast<double>(j) / static_cast<double>(q);
    Complex tj(std::cos(th), std::sin(th));
    FockOperator u = gauge(f, tj);
    acc = acc + u * t * u.adjoint();
  }
  return (1.0 / static_cast<double>(q)) * acc;
}

// ======================================================================
// Relation residuals
// ======================================================================

// All residuals are operator norms on F_N.  The Toeplitz relation is exact
// below the cut and fails by design at the top level; the covering relation
// Σ_u T_u T_u* = 1 fails by design at the bottom.  Both defects are
// reported, not hidden.
struct FockRelationReport {
  double toeplitz_below_cut = 0.0;   // ‖(T_x*T_y − ρ((x|y)))·P_{<N}‖
  double toeplitz_top_defect = 0.0;  // ‖(T_x*T_y − ρ((x|y)))·P_N‖
  double covering_residual = 0.0;    // ‖Σ_u T_u T_u* − (1 − P_0 − D_top)‖
  double covering_top_defect = 0.0;  // ‖D_top‖, D_top = P_N(1 − P_0 − Σ T_u T_u*)P_N
  double bottom_defect = 0.0;        // ‖P_0‖ (the covering relation's unavoidable loss)
  double cross_relation = 0.0;       // max_a ‖ρ(a)T_x − Σ_u T_u ρ((u|φ(a)x))‖
};

inline FockRelationReport relation_residuals(const FockPtr& f, const ModuleVector& x,
                                             const ModuleVector& y) {
  FockRelationReport rep;
  FockOperator tx = creation(f, x);
  FockOperator ty = creation(f, y);
  FockOperator rho_xy = fock_action(f, inner(x, y));
  FockOperator gap = tx.adjoint() * ty - rho_xy;
  rep.toeplitz_below_cut = (gap * below_projection(f, f->n)).norm();
  rep.toeplitz_top_defect = (gap * level_projection(f, f->n)).norm();

  FockOperator covering = fock_zero(f);
  for (const auto& u : frame(f->base->x)) {
    FockOperator tu = creation(f, u);
    covering = covering + tu * tu.adjoint();
  }
  FockOperator p0 = level_projection(f, 0);
  FockOperator pn = level_projection(f, f->n);
  FockOperator dtop = pn * (fock_identity(f) - p0 - covering) * pn;
  rep.covering_top_defect = dtop.norm();
  rep.covering_residual = (covering - (fock_identity(f) - p0 - dtop)).norm();
  rep.bottom_defect = p0.norm();

  const auto& s = f->base->shape();
  const auto us = frame(f->base->x);
  for (int j = 0; j < s.num_blocks(); ++j) {
    int nb = s.blocks[static_cast<size_t>(j)];
    for (int a = 0; a < nb; ++a)
      for (int b = 0; b < nb; ++b) {
        AlgebraElement e = AlgebraElement::matrix_unit(s, j, a, b);
        ModuleVector ex(f->base->x, f->base->phi.apply(e) * x.coords);
        FockOperator lhs = fock_action(f, e) * tx;
        FockOperator rhs = fock_zero(f);
        for (const auto& u : us) rhs = rhs + creation(f, u) * fock_action(f, inner(u, ex));
        rep.cross_relation = std::max(rep.cross_relation, (lhs - rhs).norm());
      }
  }
  return rep;
}

// ======================================================================
// Graded norm report
// ======================================================================

// Assembles B = Σ_d π(B_d), compares ‖m_0(B)‖ against ‖B‖ (the average of
// unitary conjugates can only lose norm), and, when a commutant witness W
// is supplied, conjugates by π(σ^p(W)) round after round.  Conjugation by a
// shifted intertwiner preserves each degree, and the running conjugator
// after p rounds is σ(W)···σ^p(W), so the degree-d parts of the running
// operator are governed by the nested products W·σ(W)···; the off-diagonal
// norms recorded per round track exactly that contraction.
struct GradedNormReport {
  double norm_total = 0.0;
  double norm_averaged = 0.0;
  bool inequality_holds = false;
  double contraction_bound = 0.0;          // ‖W*σ(W)‖ when a witness is given
  std::vector<double> conjugated_norms;    // ‖π(σ^p(W))* B π(σ^p(W))‖, p = 1..rounds
  std::vector<double> offdiagonal_norms;   // running off-diagonal norm, index 0 = before any round
};

inline GradedNormReport graded_inequality_check(const FockPtr& f,
                                                const std::map<int, GradedOperator>& coefficients,
                                                const GradedOperator* witness = nullptr,
                                                int rounds = 3) {
  FockOperator b = fock_zero(f);
  for (const auto& [d, c] : coefficients) {
    if (c.degree() != d)
      fail("DegreeMismatch", "graded_inequality_check: coefficient at key " + std::to_string(d) +
                                 " has degree " + std::to_string(c.degree()));
    b = b + represent(f, c);
  }
  int maxdeg = 0;
  for (const auto& [d, c] : coefficients) maxdeg = std::max(maxdeg, std::abs(d));

  GradedNormReport rep;
  rep.norm_total = b.norm();
  rep.norm_averaged = degree_average(f, b, maxdeg).norm();
  rep.inequality_holds = rep.norm_averaged <= rep.norm_total + 1e-9 * std::max(1.0, rep.norm_total);

  if (witness != nullptr && rounds > 0) {
    GradedOperator shifted = sigma_shift(*witness);  // also validates the commutant property
    rep.contraction_bound = graded_compose(witness->adjoint(), shifted).norm();

    auto offdiag = [&](const FockOperator& t) {
      FockOperator off = t - degree_component(t, 0);
      return off.norm();
    };
    rep.offdiagonal_norms.push_back(offdiag(b));
    FockOperator running = b;
    for (int p = 1; p <= rounds; ++p) {
      GradedOperator wp = sigma_shift_pow(*witness, p);
      if (wp.s > f->n) break;  // σ^p(W) has left the truncated window
      FockOperator wrep = represent(f, wp);
      rep.conjugated_norms.push_back((wrep.adjoint() * b * wrep).norm());
      running = wrep.adjoint() * running * wrep;
      rep.offdiagonal_norms.push_back(offdiag(running));
    }
  }
  return rep;
}

}  // namespace hilbim
