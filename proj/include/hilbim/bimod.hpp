#pragma once

// Hilbert A-A bimodules and their balanced tensor powers.
//
// A bimodule is a module X = p·A^k together with a unital injective
// *-homomorphism φ: A → L_A(X) = p·M_k(A)·p.  Tensor powers are realized by
// projection amplification: X ⊗ Y sits inside A^{k·m} as the range of the
// projection [φ_Y(p_{ab})]_{ab}, with simple tensors mapped by
// x ⊗ y ↦ (φ_Y(x_a)·y)_a.  With slots ordered lexicographically the
// association maps become identities, so the chain
// X^{⊗(r+1)} = X ⊗ X^{⊗r} = X^{⊗r} ⊗ X holds as an equality of presented
// modules and all structure maps below are exact (no Gram kernels, no
// spectral cutoffs):
//
//   left action   φ_{r+1}(a) = [φ_r(φ(a)_{bc})]_{bc}
//   extension     T ⊗ 1_X    = [φ(T_{uv})]_{uv}
//   shift         1_X ⊗ T    = compress(diag_k(T))           (intertwiners)
//   creation      c_x^{(r)}  = (c_x^{(0)} ⊗ 1_X^{⊗r}),  c_x^{(0)} = x·(·)
//
// On the relative commutant the frame-built completely positive map
// σ(T) = Σ_i c_{u_i} T c_{u_i}^* coincides with 1 ⊗ T; elsewhere it is
// frame-dependent and the result records the frame that produced it.

#include <deque>
#include <mutex>

#include "hilbim/hmod.hpp"
#include "hilbim/random.hpp"

namespace hilbim {

// ======================================================================
// PhiMap: a *-homomorphism A → corner of M_k(A), given on matrix units
// ======================================================================

struct PhiMap {
  AlgebraShape domain;
  int ambient = 0;                     // k
  std::vector<std::vector<AMatrix>> img;  // img[j][s*n_j + t] = image of e^{(j)}_{st}

  const AMatrix& unit_block(int j, int s, int t) const {
    return img[static_cast<size_t>(j)][static_cast<size_t>(s * domain.blocks[static_cast<size_t>(j)] + t)];
  }

  AMatrix apply(const AlgebraElement& a) const {
    if (a.shape != domain) fail("ShapeMismatch", "PhiMap::apply");
    AMatrix out = AMatrix::zero(domain, ambient, ambient);
    for (int j = 0; j < domain.num_blocks(); ++j) {
      int n = domain.blocks[static_cast<size_t>(j)];
      for (int s = 0; s < n; ++s)
        for (int t = 0; t < n; ++t) {
          Complex c = a.blocks[static_cast<size_t>(j)](s, t);
          if (c != 0.0) out = out + c * unit_block(j, s, t);
        }
    }
    return out;
  }

  AMatrix unit_image() const { return apply(AlgebraElement::identity(domain)); }
};

// Entrywise application of a PhiMap to a matrix over A: the (u,v) entry of
// the result grid is φ(S_{uv}).  Computed per flattened block as
// Σ_{j,s,t} slice_{s,t}(S_j) ⊗ φ(e^{(j)}_{st})_i.
inline AMatrix amplify(const AMatrix& s, const PhiMap& phi) {
  if (s.shape != phi.domain) fail("ShapeMismatch", "amplify");
  const int k = phi.ambient;
  AMatrix out(s.shape, s.rows * k, s.cols * k);
  for (int j = 0; j < s.shape.num_blocks(); ++j) {
    const int nj = s.shape.blocks[static_cast<size_t>(j)];
    for (int a = 0; a < nj; ++a)
      for (int b = 0; b < nj; ++b) {
        CMat slice(s.rows, s.cols);
        for (int u = 0; u < s.rows; ++u)
          for (int v = 0; v < s.cols; ++v)
            slice(u, v) = s.blk[static_cast<size_t>(j)](u * nj + a, v * nj + b);
        if (slice.cwiseAbs().maxCoeff() == 0.0) continue;
        const AMatrix& im = phi.unit_block(j, a, b);
        for (int i = 0; i < s.shape.num_blocks(); ++i) {
          if (im.blk[static_cast<size_t>(i)].cwiseAbs().maxCoeff() == 0.0) continue;
          out.blk[static_cast<size_t>(i)] += detail::kron(slice, im.blk[static_cast<size_t>(i)]);
        }
      }
  }
  return out;
}

// ======================================================================
// Bimodule with cached tensor powers
// ======================================================================

struct TensorLevel {
  int r = 0;
  HilbertModulePtr module;  // X^{⊗r} = P_r · A^{k^r}
  PhiMap phi;               // left action at level r
};

inline constexpr double kTensorEntryGuard = 4e7;

class Bimodule {
public:
  HilbertModulePtr x;  // level-1 module
  PhiMap phi;          // left action on X

  Bimodule(HilbertModulePtr x_, PhiMap phi_) : x(std::move(x_)), phi(std::move(phi_)) {
    TensorLevel l0;
    l0.r = 0;
    l0.module = make_module(x->shape, 1, AMatrix::identity(x->shape, 1));
    l0.phi.domain = x->shape;
    l0.phi.ambient = 1;
    for (int j = 0; j < x->shape.num_blocks(); ++j) {
      int n = x->shape.blocks[static_cast<size_t>(j)];
      std::vector<AMatrix> row;
      for (int s = 0; s < n; ++s)
        for (int t = 0; t < n; ++t)
          row.push_back(AMatrix::from_element(AlgebraElement::matrix_unit(x->shape, j, s, t)));
      l0.phi.img.push_back(std::move(row));
    }
    levels_.push_back(std::move(l0));
    TensorLevel l1;
    l1.r = 1;
    l1.module = x;
    l1.phi = phi;
    levels_.push_back(std::move(l1));
  }

  const AlgebraShape& shape() const { return x->shape; }

  // Tensor power X^{⊗r}; levels are built once and cached append-only.
  // The returned reference stays valid for the bimodule's lifetime: the
  // cache is a deque, so later growth never relocates existing levels and
  // callers may hold level(r) across a level(s) call with s > r.
  const TensorLevel& level(int r) const {
    if (r < 0) fail("BadLevel", "tensor power of negative order");
    std::lock_guard<std::mutex> lock(mu_);
    while (static_cast<int>(levels_.size()) <= r) {
      const TensorLevel& prev = levels_.back();
      TensorLevel next;
      next.r = prev.r + 1;
      long long amb = static_cast<long long>(x->k) * prev.phi.ambient;
      double entries = 0;
      for (int n : shape().blocks) entries += static_cast<double>(amb * n) * static_cast<double>(amb * n);
      if (entries > kTensorEntryGuard)
        fail("TensorTooLarge", "tensor power " + std::to_string(next.r) + " exceeds the size guard");
      next.phi.domain = shape();
      next.phi.ambient = static_cast<int>(amb);
      // φ_{r+1}(e) = [φ_r(φ(e)_{bc})]: amplify the level-1 image through φ_r.
      for (int j = 0; j < shape().num_blocks(); ++j) {
        int n = shape().blocks[static_cast<size_t>(j)];
        std::vector<AMatrix> row;
        for (int s = 0; s < n; ++s)
          for (int t = 0; t < n; ++t) row.push_back(amplify(phi.unit_block(j, s, t), prev.phi));
        next.phi.img.push_back(std::move(row));
      }
      next.module = make_module_unchecked(shape(), next.phi.ambient, next.phi.unit_image());
      levels_.push_back(std::move(next));
    }
    return levels_[static_cast<size_t>(r)];
  }

private:
  mutable std::mutex mu_;
  mutable std::deque<TensorLevel> levels_;
};

using BimodulePtr = std::shared_ptr<const Bimodule>;

// Validates that phi is a unital injective *-homomorphism into the corner
// p·M_k(A)·p before constructing the bimodule.
inline BimodulePtr make_bimodule(const HilbertModulePtr& x, const PhiMap& phi,
                                 double tol = kDefaultTol) {
  if (phi.domain != x->shape || phi.ambient != x->k)
    fail("ShapeMismatch", "make_bimodule: phi does not act on the presentation");
  const auto& s = x->shape;
  double scale = std::max(1.0, x->p.norm());
  double t = std::max(tol, 1e-12) * 100 * scale;
  for (int j = 0; j < s.num_blocks(); ++j) {
    int n = s.blocks[static_cast<size_t>(j)];
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        const AMatrix& e = phi.unit_block(j, a, b);
        if ((x->p * e * x->p - e).norm() > t)
          fail("NotCompressed", "make_bimodule: phi image leaves the corner");
        if ((e.adjoint() - phi.unit_block(j, b, a)).norm() > t)
          fail("NotStarMap", "make_bimodule: phi(e_ab)* != phi(e_ba)");
        // Products within the block and across blocks.
        for (int j2 = 0; j2 < s.num_blocks(); ++j2) {
          int n2 = s.blocks[static_cast<size_t>(j2)];
          for (int c = 0; c < n2; ++c)
            for (int d = 0; d < n2; ++d) {
              AMatrix prod = e * phi.unit_block(j2, c, d);
              AMatrix want = (j == j2 && b == c) ? phi.unit_block(j, a, d)
                                                 : AMatrix::zero(s, x->k, x->k);
              if ((prod - want).norm() > t)
                fail("NotHomomorphism", "make_bimodule: phi breaks the matrix-unit relations");
            }
        }
      }
  }
  if ((phi.unit_image() - x->p).norm() > t)
    fail("NotUnital", "make_bimodule: phi(1) != p");
  for (int j = 0; j < s.num_blocks(); ++j)
    if (phi.apply(AlgebraElement::central_projection(s, j)).norm() <= t)
      fail("NotInjective", "make_bimodule: phi kills central block " + std::to_string(j));
  return std::make_shared<Bimodule>(x, phi);
}

// ======================================================================
// Graded operators T ∈ K_A(X^{⊗r}, X^{⊗s})
// ======================================================================

struct GradedOperator {
  BimodulePtr base;
  int r = 0, s = 0;  // domain and codomain levels
  AMatrix block;     // k_s × k_r over A, compressed between P_s and P_r
  std::string provenance;  // set when an output is frame-dependent

  int degree() const { return s - r; }
  double norm() const { return block.norm(); }

  GradedOperator adjoint() const { return {base, s, r, block.adjoint(), provenance}; }
  GradedOperator operator+(const GradedOperator& o) const {
    require_same_degrees(o, "operator+");
    return {base, r, s, block + o.block, provenance};
  }
  GradedOperator operator-(const GradedOperator& o) const {
    require_same_degrees(o, "operator-");
    return {base, r, s, block - o.block, provenance};
  }
  friend GradedOperator operator*(Complex c, const GradedOperator& t) {
    return {t.base, t.r, t.s, c * t.block, t.provenance};
  }

  void require_same_degrees(const GradedOperator& o, const char* op) const {
    if (base.get() != o.base.get() || r != o.r || s != o.s) fail("DegreeMismatch", op);
  }
};

inline GradedOperator graded_identity(const BimodulePtr& b, int r) {
  return {b, r, r, b->level(r).module->p, ""};
}

inline GradedOperator graded_compress(const BimodulePtr& b, int r, int s, const AMatrix& raw) {
  return {b, r, s, b->level(s).module->p * raw * b->level(r).module->p, ""};
}

// T ⊗ 1_X^{⊗j}: entrywise φ-amplification, repeated j times.
inline GradedOperator right_extend(const GradedOperator& t, int j = 1) {
  if (j < 0) fail("BadLevel", "right_extend");
  GradedOperator out = t;
  for (int i = 0; i < j; ++i) {
    out.base->level(out.s + 1);  // ensure cached (also runs the size guard)
    out = {out.base, out.r + 1, out.s + 1, amplify(out.block, out.base->phi), out.provenance};
  }
  return out;
}

// Product in the graded algebra ⁰O_X: operands are right-extended to a
// common matching level first, so any pair of graded operators composes.
inline GradedOperator graded_compose(const GradedOperator& a, const GradedOperator& b) {
  if (a.base.get() != b.base.get()) fail("ModuleMismatch", "graded_compose");
  GradedOperator s = a, t = b;
  if (t.s >= s.r)
    s = right_extend(s, t.s - s.r);
  else
    t = right_extend(t, s.r - t.s);
  return {a.base, t.r, s.s, s.block * t.block,
          a.provenance.empty() ? b.provenance : a.provenance};
}

// Creation by x ∈ X at level r: the map X^{⊗r} → X^{⊗(r+1)}, w ↦ x ⊗ w,
// which is c_x^{(0)} ⊗ 1^{⊗r} in the chain's coordinates.
inline GradedOperator creation(const BimodulePtr& b, const ModuleVector& x, int r = 0) {
  if (!same_module(*x.module, *b->x)) fail("ModuleMismatch", "creation: vector not in X");
  GradedOperator c0{b, 0, 1, x.coords, ""};
  return right_extend(c0, r);
}

// ======================================================================
// σ and the relative commutant
// ======================================================================

// Residual of the intertwiner property φ_s(a)T = Tφ_r(a) over a normalized
// matrix-unit basis of A.
inline double commutant_residual(const GradedOperator& t) {
  const auto& shape = t.base->shape();
  const PhiMap& pr = t.base->level(t.r).phi;
  const PhiMap& ps = t.base->level(t.s).phi;
  double res = 0.0;
  for (int j = 0; j < shape.num_blocks(); ++j) {
    int n = shape.blocks[static_cast<size_t>(j)];
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        res = std::max(res,
                       (ps.unit_block(j, a, b) * t.block - t.block * pr.unit_block(j, a, b)).norm());
  }
  return res;
}

// (I_k ⊗ T)·B computed groupwise, without forming the Kronecker factor.
inline AMatrix block_diag_apply(int k, const AMatrix& t, const AMatrix& b) {
  if (t.shape != b.shape || b.rows != k * t.cols) fail("ShapeMismatch", "block_diag_apply");
  AMatrix out(b.shape, k * t.rows, b.cols);
  for (size_t i = 0; i < out.blk.size(); ++i) {
    int n = b.shape.blocks[i];
    for (int g = 0; g < k; ++g)
      out.blk[i].middleRows(g * t.rows * n, t.rows * n) =
          t.blk[i] * b.blk[i].middleRows(g * t.cols * n, t.cols * n);
  }
  return out;
}

// 1 ⊗ T for an intertwiner T: block-diagonal amplification in the first
// slot, compressed to the corner.  For intertwiners the two-sided
// compression collapses to (I_k ⊗ T)·P_{r+1}, which is what is computed.
// Rejects inputs outside the relative commutant (where 1 ⊗ T is not well
// defined on the balanced tensor).
inline GradedOperator sigma_shift(const GradedOperator& t, double tol = 1e-7) {
  double res = commutant_residual(t);
  if (res > tol * std::max(1.0, t.norm()))
    fail("NotIntertwiner", "sigma_shift: input is not in the relative commutant, residual " +
                               std::to_string(res));
  const int k = t.base->x->k;
  AMatrix shifted = block_diag_apply(k, t.block, t.base->level(t.r + 1).module->p);
  return {t.base, t.r + 1, t.s + 1, std::move(shifted), t.provenance};
}

inline GradedOperator sigma_shift_pow(const GradedOperator& t, int m, double tol = 1e-7) {
  GradedOperator out = t;
  for (int i = 0; i < m; ++i) out = sigma_shift(out, tol);
  return out;
}

// Frame realization σ(T) = Σ_i c_{u_i} T c_{u_i}^*.  Defined for every T;
// agrees with sigma_shift exactly on the relative commutant, and is
// frame-dependent outside it (the provenance notes the frame in that case).
inline GradedOperator cp_sigma(const GradedOperator& t,
                               const std::vector<ModuleVector>* frame_opt = nullptr) {
  std::vector<ModuleVector> us = frame_opt ? *frame_opt : frame(t.base->x);
  GradedOperator out{t.base, t.r + 1, t.s + 1,
                     AMatrix::zero(t.base->shape(), t.base->level(t.s + 1).phi.ambient,
                                   t.base->level(t.r + 1).phi.ambient),
                     t.provenance};
  for (const auto& u : us) {
    GradedOperator cu_s = creation(t.base, u, t.s);
    GradedOperator cu_r = creation(t.base, u, t.r);
    out = out + GradedOperator{t.base, t.r + 1, t.s + 1,
                               cu_s.block * t.block * cu_r.block.adjoint(), ""};
  }
  if (commutant_residual(t) > 1e-7 * std::max(1.0, t.norm()))
    out.provenance = frame_opt ? "cp_sigma[custom frame]" : "cp_sigma[canonical frame]";
  return out;
}

// Conditional expectation onto the relative commutant
// φ_s(A)'-intertwiners: E(T) = Σ_j (1/n_j) Σ_{s,t} φ_s(e_st) T φ_r(e_ts).
// Exact projection; used to generate commutant elements without solving
// linear systems.
inline GradedOperator project_to_commutant(const GradedOperator& t) {
  const auto& shape = t.base->shape();
  const PhiMap& pr = t.base->level(t.r).phi;
  const PhiMap& ps = t.base->level(t.s).phi;
  AMatrix acc = AMatrix::zero(shape, t.block.rows, t.block.cols);
  for (int j = 0; j < shape.num_blocks(); ++j) {
    int n = shape.blocks[static_cast<size_t>(j)];
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        acc = acc + (1.0 / n) * (ps.unit_block(j, a, b) * t.block * pr.unit_block(j, b, a));
  }
  return {t.base, t.r, t.s, acc, t.provenance};
}

// Orthonormal basis (blockwise HS inner product) of the relative commutant
// A' ∩ K_A(X^{⊗r}, X^{⊗s}).  Cost grows with the square of the corner
// dimension; guarded.
inline std::vector<GradedOperator> relative_commutant_basis(const BimodulePtr& b, int r, int s,
                                                            double tol = kDefaultTol) {
  const auto& lr = b->level(r);
  const auto& ls = b->level(s);
  long long dim = 0;
  for (int n : b->shape().blocks)
    dim += static_cast<long long>(ls.phi.ambient * n) * (lr.phi.ambient * n);
  if (dim > 20000) fail("TensorTooLarge", "relative_commutant_basis: corner too large");

  // Twirl a spanning set of the corner, then orthonormalize.
  std::vector<AMatrix> cand;
  const auto& shape = b->shape();
  for (int i = 0; i < shape.num_blocks(); ++i) {
    int ni = shape.blocks[static_cast<size_t>(i)];
    int rows = ls.phi.ambient * ni, cols = lr.phi.ambient * ni;
    for (int a = 0; a < rows; ++a)
      for (int c = 0; c < cols; ++c) {
        AMatrix e = AMatrix::zero(shape, ls.phi.ambient, lr.phi.ambient);
        e.blk[static_cast<size_t>(i)](a, c) = 1.0;
        GradedOperator g = project_to_commutant(
            graded_compress(b, r, s, e));
        if (g.norm() > 1e-12) cand.push_back(g.block);
      }
  }
  std::vector<double> w(static_cast<size_t>(shape.num_blocks()), 1.0);
  std::vector<GradedOperator> basis;
  for (const auto& c : cand) {
    AMatrix x = c;
    for (const auto& e : basis) {
      Complex ip = weighted_trace(e.block.adjoint() * x, w);
      x = x - ip * e.block;
    }
    double nrm = std::sqrt(std::abs(weighted_trace(x.adjoint() * x, w)));
    if (nrm > std::max(tol, 1e-10) * 100) basis.push_back({b, r, s, (1.0 / nrm) * x, ""});
  }
  return basis;
}

// ======================================================================
// Left inverse of σ from a unit multiplet (first-slot compression)
// ======================================================================

// Φ_ŷ(T) = Σ_i c_{y_i}^* T c_{y_i} with Σ_i (y_i|y_i) = 1; a unital
// completely positive left inverse of sigma_shift.
class PhiInverse {
public:
  PhiInverse(BimodulePtr base, std::vector<ModuleVector> multiplet, double tol = kDefaultTol)
      : base_(std::move(base)), ys_(std::move(multiplet)) {
    AlgebraElement sum = AlgebraElement::zero(base_->shape());
    for (const auto& y : ys_) {
      if (!same_module(*y.module, *base_->x)) fail("ModuleMismatch", "PhiInverse: multiplet");
      sum = sum + inner(y, y);
    }
    if ((sum - AlgebraElement::identity(base_->shape())).norm() > std::max(tol, 1e-10) * 100)
      fail("BadMultiplet", "PhiInverse: Σ (y|y) != 1");
  }

  GradedOperator operator()(const GradedOperator& t) const {
    if (t.base.get() != base_.get()) fail("ModuleMismatch", "PhiInverse::operator()");
    if (t.r < 1 || t.s < 1) fail("BadLevel", "PhiInverse: needs levels >= 1");
    GradedOperator out{base_, t.r - 1, t.s - 1,
                       AMatrix::zero(base_->shape(), base_->level(t.s - 1).phi.ambient,
                                     base_->level(t.r - 1).phi.ambient),
                       t.provenance};
    for (const auto& y : ys_) {
      GradedOperator cs = creation(base_, y, t.s - 1);
      GradedOperator cr = creation(base_, y, t.r - 1);
      out = out + GradedOperator{base_, t.r - 1, t.s - 1,
                                 cs.block.adjoint() * t.block * cr.block, ""};
    }
    return out;
  }

  const std::vector<ModuleVector>& multiplet() const { return ys_; }

private:
  BimodulePtr base_;
  std::vector<ModuleVector> ys_;
};

// ======================================================================
// Word relation σ^m(T)·x = x·T (x acting by creation from A into X^{⊗m})
// ======================================================================

inline double intertwine_residual(const GradedOperator& t, const AMatrix& word_coords) {
  if (t.r != t.s) fail("DegreeMismatch", "intertwine_residual: degree-0 input required");
  const int m = t.r;
  GradedOperator cw{t.base, 0, m, t.base->level(m).module->p * word_coords, ""};
  GradedOperator lhs = graded_compose(sigma_shift_pow(t, m), cw);
  GradedOperator rhs = graded_compose(cw, t);
  return (lhs.block - rhs.block).norm();
}

// ======================================================================
// Canonical bimodules with prescribed multiplicity matrix
// ======================================================================

// Builds the direct sum ⊕_{i,j} M(i,j)·(rectangular-matrix bimodule from
// block i to block j).  Each edge copy contributes n_i ambient slots whose
// presentation projection is the rank-one unit E_11 of block j; the left
// action rotates the slots by a_i.  Optionally conjugated by a random
// unitary to exercise generic presentations.
inline BimodulePtr multiplicity_bimodule(const AlgebraShape& shape,
                                         const std::vector<std::vector<int>>& mult,
                                         Rng* rng = nullptr) {
  const int d = shape.num_blocks();
  int k = 0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) k += mult[static_cast<size_t>(i)][static_cast<size_t>(j)] * shape.blocks[static_cast<size_t>(i)];
  if (k == 0) fail("BadShape", "multiplicity_bimodule: empty module");

  AMatrix p = AMatrix::zero(shape, k, k);
  // slot layout: for each (i, j, copy) a group of n_i slots
  struct Group {
    int i, j, offset;
  };
  std::vector<Group> groups;
  {
    int off = 0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int c = 0; c < mult[static_cast<size_t>(i)][static_cast<size_t>(j)]; ++c) {
          groups.push_back({i, j, off});
          off += shape.blocks[static_cast<size_t>(i)];
        }
  }
  for (const auto& g : groups) {
    AlgebraElement e11 = AlgebraElement::matrix_unit(shape, g.j, 0, 0);
    for (int s = 0; s < shape.blocks[static_cast<size_t>(g.i)]; ++s) p.set(g.offset + s, g.offset + s, e11);
  }

  PhiMap phi;
  phi.domain = shape;
  phi.ambient = k;
  for (int jb = 0; jb < d; ++jb) {
    int n = shape.blocks[static_cast<size_t>(jb)];
    std::vector<AMatrix> row;
    for (int s = 0; s < n; ++s)
      for (int t = 0; t < n; ++t) {
        AMatrix im = AMatrix::zero(shape, k, k);
        for (const auto& g : groups) {
          if (g.i != jb) continue;
          // a acts on the slot group by its block-jb matrix, landing in E_11 corners.
          im.set(g.offset + s, g.offset + t, AlgebraElement::matrix_unit(shape, g.j, 0, 0));
        }
        row.push_back(std::move(im));
      }
    phi.img.push_back(std::move(row));
  }

  if (rng) {
    AMatrix u = rng->unitary_matrix(shape, k);
    p = u * p * u.adjoint();
    // Round off the conjugated projection to keep the presentation exact.
    p = 0.5 * (p + p.adjoint());
    for (auto& row : phi.img)
      for (auto& im : row) im = u * im * u.adjoint();
  }
  auto mod = make_module(shape, k, p);
  return make_bimodule(mod, phi);
}

// 0-1 graph bimodule: multiplicity matrix equals the adjacency matrix, all
// blocks one-dimensional.
inline BimodulePtr graph_bimodule(const std::vector<std::vector<int>>& adjacency,
                                  Rng* rng = nullptr) {
  AlgebraShape s;
  s.blocks.assign(adjacency.size(), 1);
  return multiplicity_bimodule(s, adjacency, rng);
}

}  // namespace hilbim
