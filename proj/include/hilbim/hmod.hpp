#pragma once

// Finitely generated projective right Hilbert A-modules, always kept in the
// projection presentation X = p·A^k.  Module vectors are columns x ∈ A^k with
// p·x = x; the canonical frame is the set of columns of p, for which the
// reconstruction x = Σ_i u_i (u_i|x)_A holds exactly.

#include <memory>
#include <optional>

#include "hilbim/mmalg.hpp"

namespace hilbim {

struct HilbertModule {
  AlgebraShape shape;
  int k = 0;
  AMatrix p;  // projection in M_k(A)

  HilbertModule(AlgebraShape s, int k_, AMatrix p_) : shape(std::move(s)), k(k_), p(std::move(p_)) {}

  // Complex dimension: block i of a module vector is a (k·n_i)×n_i matrix
  // with columns constrained to range(p̂_i).
  int complex_dim(double cutoff = kDefaultTol) const {
    int d = 0;
    auto ranks = p.block_ranks(cutoff);
    for (size_t i = 0; i < ranks.size(); ++i) d += ranks[i] * shape.blocks[i];
    return d;
  }
};

using HilbertModulePtr = std::shared_ptr<const HilbertModule>;

inline HilbertModulePtr make_module(const AlgebraShape& shape, int k, const AMatrix& p,
                                    double tol = 1e-7) {
  shape.validate();
  if (p.shape != shape || p.rows != k || p.cols != k)
    fail("ShapeMismatch", "make_module: presentation matrix");
  if (!p.is_projection(tol)) fail("NotProjection", "make_module: p must satisfy p = p* = p^2");
  return std::make_shared<HilbertModule>(shape, k, p);
}

// Trusted constructor for presentations that are projections by
// construction (tensor chain levels, amplified corners); skips the O(k^3)
// re-validation of make_module.
inline HilbertModulePtr make_module_unchecked(const AlgebraShape& shape, int k, AMatrix p) {
  shape.validate();
  if (p.shape != shape || p.rows != k || p.cols != k)
    fail("ShapeMismatch", "make_module_unchecked: presentation matrix");
  return std::make_shared<HilbertModule>(shape, k, std::move(p));
}

inline bool same_module(const HilbertModule& a, const HilbertModule& b, double tol = 1e-8) {
  if (&a == &b) return true;
  return a.shape == b.shape && a.k == b.k && (a.p - b.p).entry_norm() <= tol;
}

// ======================================================================
// Module vectors
// ======================================================================

struct ModuleVector {
  HilbertModulePtr module;
  AMatrix coords;  // k×1 over A

  ModuleVector(HilbertModulePtr m, AMatrix c) : module(std::move(m)), coords(std::move(c)) {
    if (coords.rows != module->k || coords.cols != 1)
      fail("ShapeMismatch", "ModuleVector: coordinate column");
    if ((module->p * coords - coords).norm() > 1e-7 * std::max(1.0, coords.norm()))
      fail("InvalidVector", "ModuleVector: coordinates leave the range of p");
  }

  static ModuleVector project(const HilbertModulePtr& m, const AMatrix& raw) {
    return ModuleVector(m, m->p * raw);
  }
  static ModuleVector zero(const HilbertModulePtr& m) {
    return ModuleVector(m, AMatrix::zero(m->shape, m->k, 1));
  }

  ModuleVector operator+(const ModuleVector& o) const { return {module, coords + o.coords}; }
  ModuleVector operator-(const ModuleVector& o) const { return {module, coords - o.coords}; }
  friend ModuleVector operator*(Complex c, const ModuleVector& x) {
    return {x.module, c * x.coords};
  }
  // Right action x·a.
  ModuleVector acted(const AlgebraElement& a) const {
    return {module, coords * AMatrix::from_element(a)};
  }
};

inline AlgebraElement inner(const ModuleVector& x, const ModuleVector& y) {
  if (!same_module(*x.module, *y.module)) fail("ModuleMismatch", "inner");
  return (x.coords.adjoint() * y.coords).at(0, 0);
}

inline double vec_norm(const ModuleVector& x) { return std::sqrt(inner(x, x).norm()); }

// Canonical frame: the columns of p.
inline std::vector<ModuleVector> frame(const HilbertModulePtr& m) {
  std::vector<ModuleVector> us;
  us.reserve(static_cast<size_t>(m->k));
  for (int i = 0; i < m->k; ++i) {
    AMatrix col(m->shape, m->k, 1);
    for (size_t b = 0; b < col.blk.size(); ++b) {
      int n = m->shape.blocks[b];
      col.blk[b] = m->p.blk[b].middleCols(i * n, n);
    }
    us.emplace_back(m, std::move(col));
  }
  return us;
}

// A general frame {v_i}: any family with Σ_i v_i (v_i|x) = x, equivalently
// Σ_i v_i v_i^* = p.
inline bool is_frame(const HilbertModulePtr& m, const std::vector<ModuleVector>& vs,
                     double tol = 1e-8) {
  AMatrix s = AMatrix::zero(m->shape, m->k, m->k);
  for (const auto& v : vs) s = s + v.coords * v.coords.adjoint();
  return (s - m->p).norm() <= tol;
}

// Frames obtained by rotating the canonical one: columns of p·U.
inline std::vector<ModuleVector> rotated_frame(const HilbertModulePtr& m, const AMatrix& unitary) {
  AMatrix pu = m->p * unitary;
  std::vector<ModuleVector> us;
  us.reserve(static_cast<size_t>(m->k));
  for (int i = 0; i < m->k; ++i) {
    AMatrix col(m->shape, m->k, 1);
    for (size_t b = 0; b < col.blk.size(); ++b) {
      int n = m->shape.blocks[b];
      col.blk[b] = pu.blk[b].middleCols(i * n, n);
    }
    us.emplace_back(m, std::move(col));
  }
  return us;
}

inline ModuleVector reconstruct(const std::vector<ModuleVector>& frame_vecs,
                                const ModuleVector& x) {
  ModuleVector y = ModuleVector::zero(x.module);
  for (const auto& u : frame_vecs) y = y + u.acted(inner(u, x));
  return y;
}

// Orthogonality is a property of a particular generating family, not of the
// presentation; detected, never assumed.
inline bool is_orthogonal_family(const std::vector<ModuleVector>& vs, double tol = kDefaultTol) {
  for (size_t i = 0; i < vs.size(); ++i)
    for (size_t j = i + 1; j < vs.size(); ++j)
      if (!inner(vs[i], vs[j]).is_zero(tol)) return false;
  return true;
}

// ======================================================================
// Adjointable (= compact, in finite dimension) operators between modules
// ======================================================================

struct ModuleOperator {
  HilbertModulePtr dom;
  HilbertModulePtr cod;
  AMatrix block;  // cod.k × dom.k over A, compressed: q·block·p = block

  ModuleOperator(HilbertModulePtr d, HilbertModulePtr c, AMatrix b)
      : dom(std::move(d)), cod(std::move(c)), block(std::move(b)) {
    if (block.rows != cod->k || block.cols != dom->k || block.shape != dom->shape)
      fail("ShapeMismatch", "ModuleOperator: block");
    double scale = std::max(1.0, block.norm());
    if ((cod->p * block * dom->p - block).norm() > 1e-7 * scale)
      fail("NotCompressed", "ModuleOperator: block must live in the corner q·M·p");
  }

  static ModuleOperator compress(HilbertModulePtr d, HilbertModulePtr c, const AMatrix& raw) {
    AMatrix b = c->p * raw * d->p;
    return ModuleOperator(std::move(d), std::move(c), std::move(b));
  }
  static ModuleOperator identity(const HilbertModulePtr& m) {
    return ModuleOperator(m, m, m->p);
  }
  static ModuleOperator zero(const HilbertModulePtr& d, const HilbertModulePtr& c) {
    return ModuleOperator(d, c, AMatrix::zero(d->shape, c->k, d->k));
  }

  ModuleOperator adjoint() const { return ModuleOperator(cod, dom, block.adjoint()); }
  ModuleOperator operator+(const ModuleOperator& o) const {
    require_same_spaces(o, "operator+");
    return ModuleOperator(dom, cod, block + o.block);
  }
  ModuleOperator operator-(const ModuleOperator& o) const {
    require_same_spaces(o, "operator-");
    return ModuleOperator(dom, cod, block - o.block);
  }
  friend ModuleOperator operator*(Complex c, const ModuleOperator& t) {
    return ModuleOperator(t.dom, t.cod, c * t.block);
  }
  // Composition this ∘ o.
  ModuleOperator operator*(const ModuleOperator& o) const {
    if (!same_module(*dom, *o.cod)) fail("ModuleMismatch", "operator*: composition");
    return ModuleOperator(o.dom, cod, block * o.block);
  }
  ModuleVector operator()(const ModuleVector& x) const {
    if (!same_module(*dom, *x.module)) fail("ModuleMismatch", "operator(): application");
    return ModuleVector(cod, block * x.coords);
  }

  double norm() const { return block.norm(); }

  void require_same_spaces(const ModuleOperator& o, const char* op) const {
    if (!same_module(*dom, *o.dom) || !same_module(*cod, *o.cod)) fail("ModuleMismatch", op);
  }
};

inline ModuleOperator theta(const ModuleVector& x, const ModuleVector& y) {
  return ModuleOperator(y.module, x.module, x.coords * y.coords.adjoint());
}

inline ModuleOperator theta_sum(const std::vector<ModuleVector>& xs,
                                const std::vector<ModuleVector>& ys) {
  if (xs.empty() || xs.size() != ys.size()) fail("SizeMismatch", "theta_sum");
  ModuleOperator t = theta(xs[0], ys[0]);
  for (size_t i = 1; i < xs.size(); ++i) t = t + theta(xs[i], ys[i]);
  return t;
}

// Norm of Σ_i θ_{x_i, y_i} from the two Gram matrices over A:
// ‖Σ θ_{x_i,y_i}‖ = ‖G_x^{1/2} · G_y^{1/2}‖ with (G_z)_{ab} = (z_a|z_b)_A.
inline double op_norm_via_gram(const std::vector<ModuleVector>& xs,
                               const std::vector<ModuleVector>& ys, double tol = kDefaultTol) {
  if (xs.empty() || xs.size() != ys.size()) fail("SizeMismatch", "op_norm_via_gram");
  const auto& shape = xs[0].module->shape;
  const int n = static_cast<int>(xs.size());
  AMatrix gx(shape, n, n), gy(shape, n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      gx.set(a, b, inner(xs[static_cast<size_t>(a)], xs[static_cast<size_t>(b)]));
      gy.set(a, b, inner(ys[static_cast<size_t>(a)], ys[static_cast<size_t>(b)]));
    }
  return (gx.psd_sqrt(tol * std::max(1.0, gx.norm())) *
          gy.psd_sqrt(tol * std::max(1.0, gy.norm())))
      .norm();
}

// ======================================================================
// Fullness and unit multiplets
// ======================================================================

// X is full iff the inner products generate A, i.e. every block of p is
// nonzero (each M_{n_i} is simple).
inline bool is_full(const HilbertModule& m, double tol = kDefaultTol) {
  for (const auto& b : m.p.blk)
    if (detail::spectral_norm(b) <= tol) return false;
  return true;
}

// A finite family {y_c} with Σ_c (y_c|y_c)_A = 1 exactly.  Existence needs
// fullness; the family is built blockwise from one unit vector in the range
// of each flattened block of p, giving n_i vectors for block i.
inline std::vector<ModuleVector> unit_multiplet(const HilbertModulePtr& m,
                                                double tol = kDefaultTol) {
  std::vector<ModuleVector> ys;
  for (size_t i = 0; i < m->p.blk.size(); ++i) {
    const int n = m->shape.blocks[i];
    Eigen::SelfAdjointEigenSolver<CMat> es(m->p.blk[i]);
    const Eigen::Index top = es.eigenvalues().size() - 1;
    if (top < 0 || es.eigenvalues()[top] < 0.5)
      fail("NotFull", "unit_multiplet: block " + std::to_string(i) + " is not touched");
    CVec v = es.eigenvectors().col(top);
    for (int c = 0; c < n; ++c) {
      AMatrix col(m->shape, m->k, 1);
      col.blk[i].col(c) = v;
      ys.emplace_back(m, std::move(col));
    }
  }
  AlgebraElement s = AlgebraElement::zero(m->shape);
  for (const auto& y : ys) s = s + inner(y, y);
  if ((s - AlgebraElement::identity(m->shape)).norm() > std::max(tol, 1e-10) * 100)
    fail("BadMultiplet", "unit_multiplet: Σ (y|y) != 1");
  return ys;
}

// ======================================================================
// Center of L_A(X) = p·M_k(A)·p
// ======================================================================

struct CenterData {
  std::vector<AMatrix> basis;        // orthonormal w.r.t. blockwise HS inner product
  bool equals_central_right_mults;   // matches {x ↦ x·a : a ∈ Z(A)}
  double containment_residual;
};

namespace detail {

// Kernel of the stacked commutation constraints [T, B_l] = 0 via the normal
// matrix H = Σ_l C_l^† C_l, C_l = I⊗B_l − B_l^T⊗I.
inline std::vector<CMat> commutant_kernel(const std::vector<CMat>& gens, int m, double tol) {
  if (m == 0) return {};
  const int mm = m * m;
  CMat h = CMat::Zero(mm, mm);
  for (const auto& b : gens) {
    CMat c = kron(CMat::Identity(m, m), b) - kron(b.transpose(), CMat::Identity(m, m));
    h += c.adjoint() * c;
  }
  Eigen::SelfAdjointEigenSolver<CMat> es(h);
  double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  std::vector<CMat> out;
  for (Eigen::Index j = 0; j < es.eigenvalues().size(); ++j) {
    if (es.eigenvalues()[j] > tol * scale) continue;
    CMat t(m, m);
    for (int col = 0; col < m; ++col) t.col(col) = es.eigenvectors().col(j).segment(col * m, m);
    out.push_back(t);
  }
  return out;
}

// Isometry whose columns span the range of a projection.
inline CMat range_isometry(const CMat& proj, double cutoff) {
  Eigen::SelfAdjointEigenSolver<CMat> es(proj);
  int r = 0;
  for (Eigen::Index j = 0; j < es.eigenvalues().size(); ++j)
    if (es.eigenvalues()[j] > cutoff) ++r;
  CMat v(proj.rows(), r);
  int c = 0;
  for (Eigen::Index j = 0; j < es.eigenvalues().size(); ++j)
    if (es.eigenvalues()[j] > cutoff) v.col(c++) = es.eigenvectors().col(j);
  return v;
}

}  // namespace detail

// Solves the commutation equations inside each flattened corner of
// p·M_k(A)·p and cross-checks the resulting center basis against the right
// multiplications by central elements of A.
inline CenterData center_of_endomorphisms(const HilbertModulePtr& m, double tol = kDefaultTol) {
  CenterData out;
  const int d = m->shape.num_blocks();
  for (int i = 0; i < d; ++i) {
    CMat v = detail::range_isometry(m->p.blk[static_cast<size_t>(i)], 0.5);
    const int mi = static_cast<int>(v.cols());
    if (mi == 0) continue;
    // Compressed corner is all of M_{m_i}; its matrix units generate it.
    std::vector<CMat> gens;
    gens.reserve(static_cast<size_t>(mi * mi));
    for (int a = 0; a < mi; ++a)
      for (int b = 0; b < mi; ++b) {
        CMat e = CMat::Zero(mi, mi);
        e(a, b) = 1.0;
        gens.push_back(e);
      }
    for (const auto& t : detail::commutant_kernel(gens, mi, tol)) {
      AMatrix z = AMatrix::zero(m->shape, m->k, m->k);
      CMat zi = v * t * v.adjoint();
      z.blk[static_cast<size_t>(i)] = zi / std::max(1e-300, zi.norm());
      out.basis.push_back(std::move(z));
    }
  }

  // Cross-check against {x ↦ x·a : a central}.  Span containment both ways.
  std::vector<AMatrix> rmults;
  for (int i = 0; i < d; ++i) {
    AMatrix r = m->p * AMatrix::central_diagonal(AlgebraElement::central_projection(m->shape, i),
                                                 m->k);
    if (r.norm() > tol) rmults.push_back(std::move(r));
  }
  auto project_residual = [&](const AMatrix& x, const std::vector<AMatrix>& span) {
    // Residual of x against span w.r.t. the HS inner product.
    const int n = static_cast<int>(span.size());
    if (n == 0) return x.norm();
    CMat g(n, n);
    CVec rhs(n);
    std::vector<double> w(static_cast<size_t>(d), 1.0);
    for (int a = 0; a < n; ++a) {
      rhs(a) = weighted_trace(span[static_cast<size_t>(a)].adjoint() * x, w);
      for (int b = 0; b < n; ++b)
        g(a, b) =
            weighted_trace(span[static_cast<size_t>(a)].adjoint() * span[static_cast<size_t>(b)], w);
    }
    CVec c = g.completeOrthogonalDecomposition().solve(rhs);
    AMatrix y = x;
    for (int a = 0; a < n; ++a) y = y - c(a) * span[static_cast<size_t>(a)];
    return y.norm();
  };
  double resid = 0.0;
  for (const auto& b : out.basis) resid = std::max(resid, project_residual(b, rmults));
  for (const auto& r : rmults) resid = std::max(resid, project_residual(r, out.basis));
  out.containment_residual = resid;
  out.equals_central_right_mults =
      resid <= std::max(tol, 1e-9) * 100 && out.basis.size() == rmults.size();
  return out;
}

// ======================================================================
// Presentation from a spanning set with prescribed Gram matrix
// ======================================================================

// Given the Gram matrix G_{ab} = (w_a|w_b)_A of a spanning family of some
// abstract module W, the map w = Σ w_a ξ_a ↦ G^{1/2}·ξ is a unitary onto
// q·A^m (q the spectral support of G): the Gram kernel is exactly the space
// of null combinations, quotiented here by the spectral cutoff.
struct GramPresentation {
  HilbertModulePtr module;  // q·A^m
  AMatrix sqrt;             // G^{1/2}
  AMatrix pinv_sqrt;        // G^{-1/2} on the support

  ModuleVector embed(const AMatrix& coeffs) const {  // coeffs: m×1 over A
    return ModuleVector(module, sqrt * coeffs);
  }
};

inline GramPresentation present_from_gram(const AlgebraShape& shape, const AMatrix& gram,
                                          double cutoff = kDefaultTol) {
  if (gram.rows != gram.cols || gram.shape != shape)
    fail("ShapeMismatch", "present_from_gram");
  double scale = std::max(1.0, gram.norm());
  GramPresentation pr;
  pr.sqrt = gram.psd_sqrt(cutoff * scale);
  pr.pinv_sqrt = gram.psd_pinv_sqrt(cutoff * scale);
  AMatrix q = gram.support_projection(cutoff * scale);
  pr.module = make_module(shape, gram.rows, q);
  return pr;
}

}  // namespace hilbim
