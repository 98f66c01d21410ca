#pragma once

// Freeness witnesses for the shift endomorphism of a bimodule.
//
// A witness is a graded operator u in the relative commutant whose shifted
// overlaps u*σ^j(u) are strictly contractive for j = 1..order while u keeps
// full norm on every central summand of A.  Witnesses certify that the
// gauge shift acts freely enough for the ideal correspondence to close, so
// together with X-simplicity they certify simplicity of the generated
// algebra.  Three constructions are provided:
//
//   real_witness       from a (anti-)symmetric conjugate vector R ∈ X ⊗ X
//   jones_witness      from a Jones projection of an expectation bimodule
//   ck_witness         from cylinder projections of the multiplicity graph
//
// plus amplification: a single strict gap is boosted below any requested
// epsilon by the product u·σ^m(u)···σ^{qm}(u) with stride m past the
// witness width.

#include "hilbim/ideal_graph.hpp"

namespace hilbim {

inline constexpr double kGapMargin = 1e-9;

enum class WitnessKind { Isometry, Projection };

struct Witness {
  WitnessKind kind = WitnessKind::Isometry;
  GradedOperator op;
  int order = 1;      // overlaps verified for shifts 1..order
  std::string route;  // construction that produced it
};

// ‖u*σ^j(u)‖; for projection witnesses u* = u so this is ‖u·σ^j(u)‖.
inline double witness_overlap(const Witness& w, int j) {
  GradedOperator shifted = sigma_shift_pow(w.op, j);
  return graded_compose(w.op.adjoint(), shifted).norm();
}

struct WitnessCheck {
  bool ok = false;
  double commutant_residual = 0.0;
  double structural_defect = 0.0;  // contraction defect / projection defect
  double support_defect = 0.0;     // max_i |1 − ‖φ_r(p_i)·u*u‖|
  double max_overlap = 0.0;
  std::vector<double> overlaps;    // index j-1 holds the shift-j overlap
};

// The support criterion: u*u (a positive contraction commuting with φ_r)
// must have norm one in every central summand.  Norm-one on the i-th
// summand of a complete contraction forces norm one on all matrix
// amplifications over that summand, so this blockwise test is the complete
// version of the isometry condition.
inline double support_defect(const GradedOperator& u) {
  const auto& s = u.base->shape();
  AMatrix g = u.block.adjoint() * u.block;
  const PhiMap& phir = u.base->level(u.r).phi;
  double defect = 0.0;
  for (int i = 0; i < s.num_blocks(); ++i) {
    AMatrix gi = phir.apply(AlgebraElement::central_projection(s, i)) * g;
    defect = std::max(defect, std::abs(1.0 - gi.norm()));
  }
  return defect;
}

inline WitnessCheck verify_witness(const Witness& w, double tol = 1e-7) {
  WitnessCheck c;
  double scale = std::max(1.0, w.op.norm());
  c.commutant_residual = commutant_residual(w.op) / scale;
  if (w.kind == WitnessKind::Isometry) {
    c.structural_defect = std::max(0.0, w.op.norm() - 1.0);
  } else {
    if (w.op.r != w.op.s) fail("DegreeMismatch", "projection witness must have degree 0");
    AMatrix q = w.op.block;
    c.structural_defect = std::max((q * q - q).norm(), (q - q.adjoint()).norm());
  }
  c.support_defect = support_defect(w.op);
  for (int j = 1; j <= w.order; ++j) {
    double o = witness_overlap(w, j);
    c.overlaps.push_back(o);
    c.max_overlap = std::max(c.max_overlap, o);
  }
  c.ok = c.commutant_residual <= tol && c.structural_defect <= tol * 10 &&
         c.support_defect <= tol * 100 && c.max_overlap <= 1.0 - kGapMargin && w.order >= 1;
  return c;
}

// Minimal q ≥ 1 with ν^{q+1} < ε.
inline int amplification_steps(double nu, double eps) {
  if (!(eps > 0.0) || nu >= 1.0 - kGapMargin)
    fail("MarginTooSmall", "amplification_steps: no strict gap to amplify");
  int q = 1;
  double pw = nu * nu;
  while (pw >= eps) {
    pw *= nu;
    ++q;
    if (q > 64) fail("MarginTooSmall", "amplification_steps: gap too weak for target epsilon");
  }
  return q;
}

// u′ = u·σ^m(u)···σ^{qm}(u) with stride m = (upper grade of u) + 1: the
// shifted factors occupy disjoint slot ranges, so each overlap contributes
// its own contraction and the total drops below epsilon.  The resulting
// inequalities are re-verified numerically and MarginTooSmall is raised if
// the target is not met.
inline Witness amplify_witness(const Witness& w, double epsilon, double tol = 1e-7) {
  WitnessCheck base = verify_witness(w, tol);
  if (!base.ok) fail("MarginTooSmall", "amplify_witness: input witness does not verify");
  if (base.max_overlap < epsilon) return w;
  int q = amplification_steps(base.max_overlap, epsilon);
  const int stride = w.op.s + 1;
  GradedOperator acc = w.op;
  for (int i = 1; i <= q; ++i) acc = graded_compose(acc, sigma_shift_pow(w.op, i * stride));
  Witness out{w.kind, acc, w.order, w.route};
  for (int j = 1; j <= out.order; ++j) {
    double o = witness_overlap(out, j);
    if (o >= epsilon)
      fail("MarginTooSmall", "amplify_witness: overlap " + std::to_string(o) +
                                 " at shift " + std::to_string(j) + " missed target");
  }
  return out;
}

// ======================================================================
// Route 1: conjugate (real/pseudoreal) structure
// ======================================================================

// A central vector R ∈ X ⊗ X with (R* ⊗ 1)(1 ⊗ R) = sign·1, sign = ±1.
struct ConjugateDatum {
  BimodulePtr base;
  GradedOperator v;  // (0,2) column of R
  int sign = +1;
  double index = 0.0;  // ‖(R|R)‖
};

inline ConjugateDatum make_conjugate(const BimodulePtr& b, const AMatrix& coords, int sign,
                                     double tol = 1e-7) {
  if (sign != 1 && sign != -1) fail("BadConjugate", "sign must be ±1");
  const auto& l2 = b->level(2);
  if (coords.rows != l2.phi.ambient || coords.cols != 1)
    fail("ShapeMismatch", "make_conjugate: R must be a level-2 column");
  ConjugateDatum d;
  d.base = b;
  d.v = {b, 0, 2, l2.module->p * coords, ""};
  double scale = std::max(1.0, d.v.norm());
  if (commutant_residual(d.v) > tol * scale)
    fail("BadConjugate", "make_conjugate: R is not central for the left action");
  GradedOperator eq = graded_compose(d.v.adjoint(), sigma_shift(d.v));
  GradedOperator id1 = graded_identity(b, 1);
  double res = (eq - GradedOperator{b, 1, 1,
                                    Complex(static_cast<double>(sign)) * id1.block, ""})
                   .norm();
  if (res > 100 * tol * std::max(1.0, scale * scale))
    fail("BadConjugate", "make_conjugate: conjugate equation fails, residual " +
                             std::to_string(res));
  d.sign = sign;
  d.index = (d.v.block.adjoint() * d.v.block).norm();
  return d;
}

// Witness from a conjugate vector: S = R·(R|R)^{-1/2} gives an isometric
// column whose single-shift overlap is the inverse index.  Longer witnesses
// nest copies of S between the halves of the previous one, keeping the
// coordinate pattern aperiodic; stacking copies side by side would realign
// under even shifts and lose the gap.
inline Witness real_witness(const BimodulePtr& b, const ConjugateDatum& d, int order = 1,
                            double tol = 1e-7) {
  if (d.base.get() != b.get()) fail("ModuleMismatch", "real_witness");
  // (R|R) as an algebra element (level-0 corner is 1×1 over A)
  AMatrix gram = d.v.block.adjoint() * d.v.block;
  AlgebraElement g = AlgebraElement::zero(b->shape());
  for (size_t i = 0; i < g.blocks.size(); ++i) g.blocks[i] = gram.blk[i];
  AlgebraElement ginvsqrt;
  try {
    ginvsqrt = g.psd_inv_sqrt(std::max(tol, 1e-10));
  } catch (const Error&) {
    fail("IndexTooSmall", "real_witness: (R|R) is degenerate");
  }
  GradedOperator vs{b, 0, 2, d.v.block * AMatrix::from_element(ginvsqrt), ""};
  double firstOverlap = graded_compose(vs.adjoint(), sigma_shift(vs)).norm();
  if (firstOverlap >= 1.0 - kGapMargin)
    fail("IndexTooSmall", "real_witness: conjugate overlap has no gap (index too small)");
  // W_{j+1} = rext^j(σ^j(v_S))·W_j inserts a copy of S in the middle; the
  // nested witness of width 2c keeps every shift up to 2c−1 contractive
  int copies = (order + 2) / 2;
  GradedOperator w = vs;
  for (int j = 1; j < copies; ++j) w = graded_compose(sigma_shift_pow(vs, j), w);
  return {WitnessKind::Isometry, w, order, "real_structure"};
}

// ======================================================================
// Route 1b: conjugate vector from an antilinear module involution
// ======================================================================

// F is given by v(F(x)) = C_F · conj(v(x)) on the stacked coordinates
// v(x) = ⊕_i vec(x.blk[i]).  Requirements: F intertwines the two actions
// antilinearly (F(φ(a)·x·b) = φ(b*)·F(x)·a*) and F² = c·1 with c real and
// nonzero.  After normalizing by √|c| the conjugate vector is
// R = Σ_i F(u_i) ⊗ u_i over any frame, with sign(c) as the conjugate sign.
struct AntilinearMap {
  BimodulePtr base;
  CMat c_f;  // D×D on stacked coordinates, D = k·Σ n_i²
};

namespace detail {

inline int stacked_dim(const HilbertModule& m) {
  int d = 0;
  for (int n : m.shape.blocks) d += m.k * n * n;
  return d;
}

inline CVec stack_coords(const AMatrix& coords) {
  int total = 0;
  for (size_t i = 0; i < coords.blk.size(); ++i) total += static_cast<int>(coords.blk[i].size());
  CVec v(total);
  int at = 0;
  for (const auto& blkmat : coords.blk) {
    Eigen::Map<const CVec> flat(blkmat.data(), blkmat.size());
    v.segment(at, blkmat.size()) = flat;
    at += static_cast<int>(blkmat.size());
  }
  return v;
}

inline AMatrix unstack_coords(const AlgebraShape& s, int k, const CVec& v) {
  AMatrix out(s, k, 1);
  int at = 0;
  for (size_t i = 0; i < out.blk.size(); ++i) {
    int n = s.blocks[i];
    Eigen::Map<CVec>(out.blk[i].data(), out.blk[i].size()) =
        v.segment(at, static_cast<Eigen::Index>(k * n) * n);
    at += k * n * n;
  }
  return out;
}

// matrix of the linear map coords ↦ coords·a on stacked coordinates
inline CMat right_action_matrix(const HilbertModule& m, const AlgebraElement& a) {
  int dim = stacked_dim(m);
  CMat out = CMat::Zero(dim, dim);
  int at = 0;
  for (size_t i = 0; i < m.shape.blocks.size(); ++i) {
    int n = m.shape.blocks[i];
    int rows = m.k * n;
    // vec(X·a) = (a^T ⊗ I) vec(X)
    CMat block = kron(a.blocks[i].transpose(), CMat::Identity(rows, rows));
    out.block(at, at, rows * n, rows * n) = block;
    at += rows * n;
  }
  return out;
}

// matrix of coords ↦ L·coords (grid-level left multiplication)
inline CMat left_action_matrix(const HilbertModule& m, const AMatrix& l) {
  int dim = stacked_dim(m);
  CMat out = CMat::Zero(dim, dim);
  int at = 0;
  for (size_t i = 0; i < m.shape.blocks.size(); ++i) {
    int n = m.shape.blocks[i];
    int rows = m.k * n;
    CMat block = kron(CMat::Identity(n, n), l.blk[i]);
    out.block(at, at, rows * n, rows * n) = block;
    at += rows * n;
  }
  return out;
}

}  // namespace detail

inline ModuleVector apply_antilinear(const AntilinearMap& f, const ModuleVector& x) {
  if (!same_module(*x.module, *f.base->x)) fail("ModuleMismatch", "apply_antilinear");
  CVec v = detail::stack_coords(x.coords);
  CVec out = f.c_f * v.conjugate();
  return ModuleVector(f.base->x, detail::unstack_coords(f.base->shape(), f.base->x->k, out));
}

inline AntilinearMap make_antilinear(const BimodulePtr& b, const CMat& cf, double tol = 1e-7) {
  const auto& m = *b->x;
  int dim = detail::stacked_dim(m);
  if (cf.rows() != dim || cf.cols() != dim)
    fail("ShapeMismatch", "make_antilinear: expected a " + std::to_string(dim) +
                              "-dimensional stacked matrix");
  AntilinearMap f{b, cf};
  double scale = std::max(1.0, cf.norm());
  // all conditions are required on the module only: restrict by the
  // (conjugated) stacked projector of the presentation
  CMat pmod = detail::left_action_matrix(m, m.p);
  CMat pbar = pmod.conjugate();
  if (((CMat::Identity(dim, dim) - pmod) * f.c_f * pbar).norm() > 100 * tol * scale)
    fail("BadF", "make_antilinear: F does not preserve the module");
  // antilinear intertwining over the matrix units: C_F conj(R_e) = L_{φ(e*)} C_F
  // and C_F conj(L_{φ(e)}) = R_{e*} C_F
  const auto& s = b->shape();
  for (int j = 0; j < s.num_blocks(); ++j) {
    int n = s.blocks[static_cast<size_t>(j)];
    for (int a = 0; a < n; ++a)
      for (int c = 0; c < n; ++c) {
        AlgebraElement e = AlgebraElement::matrix_unit(s, j, a, c);
        AlgebraElement estar = AlgebraElement::matrix_unit(s, j, c, a);
        CMat re = detail::right_action_matrix(m, e);
        CMat lphi = detail::left_action_matrix(m, b->phi.apply(estar));
        if (((f.c_f * re.conjugate() - lphi * f.c_f) * pbar).norm() > 100 * tol * scale)
          fail("BadF", "make_antilinear: F does not carry the right action to the left one");
        CMat lphie = detail::left_action_matrix(m, b->phi.apply(e));
        CMat restar = detail::right_action_matrix(m, estar);
        if (((f.c_f * lphie.conjugate() - restar * f.c_f) * pbar).norm() > 100 * tol * scale)
          fail("BadF", "make_antilinear: F does not carry the left action to the right one");
      }
  }
  return f;
}

struct NormalizedAntilinear {
  AntilinearMap f;
  int sign = +1;
};

// Checks F² = c·1 on the module (c real, nonzero), returns F/√|c| and
// sign(c).
inline NormalizedAntilinear normalize_antilinear(const AntilinearMap& f, double tol = 1e-7) {
  const auto& m = *f.base->x;
  CMat pmod = detail::left_action_matrix(m, m.p);
  CMat fsq = f.c_f * f.c_f.conjugate();  // matrix of the linear map F²
  CMat restricted = pmod * fsq * pmod;
  double denom = std::real(pmod.trace());
  if (denom <= 0) fail("BadF", "normalize_antilinear: zero module");
  Complex c = restricted.trace() / denom;
  if (std::abs(c) <= tol) fail("BadF", "normalize_antilinear: F² vanishes");
  if (std::abs(c.imag()) > 100 * tol * std::abs(c))
    fail("BadF", "normalize_antilinear: F² is not a real multiple of the identity");
  if ((restricted - c * pmod).norm() > 100 * tol * std::abs(c) * std::sqrt(denom))
    fail("BadF", "normalize_antilinear: F² is not scalar on the module");
  NormalizedAntilinear out{{f.base, f.c_f / std::sqrt(std::abs(c))}, c.real() > 0 ? 1 : -1};
  return out;
}

// R = Σ_i F(u_i) ⊗ u_i over a frame; frame independence is canonical for
// antilinear F.  Raises ConstructionFailed when the resulting vector does
// not satisfy the conjugate equation.
inline ConjugateDatum conjugate_from_F(const BimodulePtr& b, const AntilinearMap& raw,
                                       double tol = 1e-7) {
  NormalizedAntilinear nf = normalize_antilinear(raw, tol);
  auto us = frame(b->x);
  AMatrix acc = AMatrix::zero(b->shape(), b->level(2).phi.ambient, 1);
  for (const auto& u : us) {
    ModuleVector fu = apply_antilinear(nf.f, u);
    GradedOperator cfu = creation(b, fu, 1);  // F(u) ⊗ (·) on level 1
    acc = acc + cfu.block * u.coords;
  }
  try {
    return make_conjugate(b, acc, nf.sign, tol);
  } catch (const Error& e) {
    fail("ConstructionFailed",
         std::string("conjugate_from_F: assembled vector rejected: ") + e.what());
  }
}

// ======================================================================
// Route 2: Jones projection chain
// ======================================================================

// From a rank-one-type projection e implementing a conditional expectation
// on the module (grade (1,1), in the commutant), build
// q = e ⊗ e ⊗ ... ⊗ e ⊗ (1−e) with `order` leading e-factors.  Shifted
// copies then meet q in a slot where e and 1−e collide, so
// q·σ^j(q) = 0 exactly for j = 1..order.
inline Witness jones_witness(const BimodulePtr& b, const GradedOperator& e, int order = 1,
                             double tol = 1e-7) {
  if (e.base.get() != b.get() || e.r != 1 || e.s != 1)
    fail("ShapeMismatch", "jones_witness: e must be a grade (1,1) operator");
  if ((e.block * e.block - e.block).norm() > tol * 10 ||
      (e.block - e.block.adjoint()).norm() > tol * 10)
    fail("NotProjection", "jones_witness: e is not a projection");
  if (commutant_residual(e) > tol * 10)
    fail("NotIntertwiner", "jones_witness: e is not in the relative commutant");
  GradedOperator one = graded_identity(b, 1);
  GradedOperator comp = one - e;
  if (comp.norm() <= tol) fail("TrivialIndex", "jones_witness: e is the identity");
  const auto& s = b->shape();
  for (int i = 0; i < s.num_blocks(); ++i) {
    AMatrix pi = b->phi.apply(AlgebraElement::central_projection(s, i));
    if ((pi * comp.block).norm() <= tol * 10)
      fail("DegenerateIdealNonzero",
           "jones_witness: 1−e vanishes on central block " + std::to_string(i) +
               "; the degeneracy ideal is nonzero");
  }
  GradedOperator w = comp;  // W_1 = 1 − e
  for (int j = 1; j <= order; ++j)
    w = graded_compose(right_extend(e, j), sigma_shift(w));
  return {WitnessKind::Projection, w, order, "jones_projection"};
}

// ======================================================================
// Route 3: cylinder projections from the multiplicity graph
// ======================================================================

// Cylinder of a block word (w_1..w_p): the product over slots t of the
// shifted right multiplications by the central projections p_{w_t}.
inline GradedOperator cylinder_projection(const BimodulePtr& b, const std::vector<int>& word) {
  const int p = static_cast<int>(word.size());
  if (p < 1) fail("BadShape", "cylinder_projection: empty word");
  GradedOperator acc = graded_identity(b, p);
  for (int t = 1; t <= p; ++t) {
    AlgebraElement pj = AlgebraElement::central_projection(b->shape(), word[static_cast<size_t>(t - 1)]);
    GradedOperator slot{b, 1, 1, right_mult(b->x, pj), ""};
    GradedOperator placed = right_extend(sigma_shift_pow(slot, t - 1), p - t);
    acc = {b, p, p, acc.block * placed.block, ""};
  }
  return acc;
}

// Word combinatorics used by the search: q = Σ_w C_w has vanishing overlap
// at shift j iff no word in the set reappears as a shifted segment.
namespace detail {

inline bool words_shift_clash(const std::vector<int>& u, const std::vector<int>& v, int j) {
  // true when C_u · σ^j(C_v) ≠ 0: all overlapping slots agree
  const int p = static_cast<int>(u.size());
  for (int t = 0; t + j < p; ++t)
    if (u[static_cast<size_t>(t + j)] != v[static_cast<size_t>(t)]) return false;
  return true;
}

}  // namespace detail

// Searches for a union of cylinder projections witnessing freeness of
// order `order`.  Words must (a) avoid every mutual shift clash up to the
// order and (b) jointly cover all central blocks on the left.  Single
// words are tried in lexicographic order, then greedy multi-word covers.
// SearchExhausted is raised when no cover exists up to the depth cap
// (permutation graphs genuinely have none).
inline Witness ck_witness(const BimodulePtr& b, int order = 1, int depth_cap = 8,
                          double tol = 1e-7) {
  GraphData g = graph_data(b, tol);
  auto coversAll = [&](const std::vector<std::vector<int>>& ws) {
    for (int i = 0; i < g.d; ++i) {
      bool ok = false;
      for (const auto& w : ws)
        if (g.mult[static_cast<size_t>(i)][static_cast<size_t>(w[0])] > 0) ok = true;
      if (!ok) return false;
    }
    return true;
  };
  auto shiftFree = [&](const std::vector<std::vector<int>>& ws) {
    for (int j = 1; j <= order; ++j)
      for (const auto& u : ws)
        for (const auto& v : ws)
          if (detail::words_shift_clash(u, v, j)) return false;
    return true;
  };
  auto assemble = [&](const std::vector<std::vector<int>>& ws) {
    GradedOperator q = cylinder_projection(b, ws[0]);
    for (size_t i = 1; i < ws.size(); ++i) q = q + cylinder_projection(b, ws[i]);
    Witness out{WitnessKind::Projection, q, order, "cylinder_search"};
    return out;
  };

  for (int p = std::max(order + 1, 1); p <= depth_cap; ++p) {
    auto words = subshift_words(g, p);
    // single-word pass, lexicographic
    for (const auto& w : words) {
      std::vector<std::vector<int>> ws{w};
      if (!shiftFree(ws) || !coversAll(ws)) continue;
      Witness cand = assemble(ws);
      if (verify_witness(cand, tol).ok) return cand;
    }
    // greedy multi-word: seed with the first shift-free word, then extend
    // coverage block by block
    for (size_t seed = 0; seed < words.size(); ++seed) {
      std::vector<std::vector<int>> ws{words[seed]};
      if (!shiftFree(ws)) continue;
      bool stuck = false;
      while (!coversAll(ws) && !stuck) {
        stuck = true;
        for (const auto& w : words) {
          std::vector<std::vector<int>> trial = ws;
          trial.push_back(w);
          if (!shiftFree(trial)) continue;
          // must improve coverage
          int before = 0, after = 0;
          for (int i = 0; i < g.d; ++i) {
            bool cb = false, ca = false;
            for (const auto& x : ws)
              if (g.mult[static_cast<size_t>(i)][static_cast<size_t>(x[0])] > 0) cb = true;
            for (const auto& x : trial)
              if (g.mult[static_cast<size_t>(i)][static_cast<size_t>(x[0])] > 0) ca = true;
            before += cb ? 1 : 0;
            after += ca ? 1 : 0;
          }
          if (after > before) {
            ws = trial;
            stuck = false;
            break;
          }
        }
      }
      if (coversAll(ws) && shiftFree(ws)) {
        Witness cand = assemble(ws);
        if (verify_witness(cand, tol).ok) return cand;
      }
    }
  }
  fail("SearchExhausted",
       "ck_witness: no cylinder witness up to depth " + std::to_string(depth_cap));
}

}  // namespace hilbim
