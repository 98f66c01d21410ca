#pragma once

// Finite-index inclusions A ⊆ B of multi-matrix algebras.
//
// An inclusion is a unital injective *-homomorphism embed: A → B together
// with a conditional expectation E: B → A.  From that data we build:
//   * the Hilbert bimodule X = B viewed over A with (x|y) = E(x*y),
//   * a quasi-basis {u_i} and the index element Σ u_i u_i* ∈ Z(B),
//   * the Jones projection e_A ∈ L(X) fixing ι(1),
//   * a left A-valued inner product of finite type on any bimodule,
//     with its left index r-Ind[X] ∈ Z(A),
//   * the expectation chain E_r^{r+k}: L(X^{⊗(r+k)}) → L(X^{⊗r}).
//
// Everything here is exact linear algebra over the block coordinates; the
// only tolerances are the ones guarding internal consistency checks.

#include <string>
#include <utility>
#include <vector>

#include "hilbim/bimod.hpp"

namespace hilbim {

inline int algebra_dim(const AlgebraShape& s) {
  int d = 0;
  for (int n : s.blocks) d += n * n;
  return d;
}

// Matrix units in lexicographic (block, row, col) order; every AlgebraMap
// below stores its images in this order.
inline std::vector<AlgebraElement> matrix_unit_basis(const AlgebraShape& s) {
  std::vector<AlgebraElement> out;
  out.reserve(static_cast<size_t>(algebra_dim(s)));
  for (int i = 0; i < s.num_blocks(); ++i) {
    int n = s.blocks[static_cast<size_t>(i)];
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) out.push_back(AlgebraElement::matrix_unit(s, i, r, c));
  }
  return out;
}

namespace detail {

// Entries of a in the matrix-unit order above.
inline std::vector<Complex> unit_coefficients(const AlgebraElement& a) {
  std::vector<Complex> out;
  out.reserve(static_cast<size_t>(algebra_dim(a.shape)));
  for (const auto& blk : a.blocks)
    for (int r = 0; r < blk.rows(); ++r)
      for (int c = 0; c < blk.cols(); ++c) out.push_back(blk(r, c));
  return out;
}

}  // namespace detail

// A C-linear map between multi-matrix algebras, stored by its values on the
// matrix units of the domain.
struct AlgebraMap {
  AlgebraShape domain;
  AlgebraShape codomain;
  std::vector<AlgebraElement> img;

  static AlgebraMap identity(const AlgebraShape& s) { return {s, s, matrix_unit_basis(s)}; }

  AlgebraElement apply(const AlgebraElement& a) const {
    if (a.shape != domain) fail("ShapeMismatch", "AlgebraMap::apply: element not in the domain");
    if (img.size() != static_cast<size_t>(algebra_dim(domain)))
      fail("ShapeMismatch", "AlgebraMap::apply: wrong number of basis images");
    AlgebraElement out = AlgebraElement::zero(codomain);
    size_t idx = 0;
    for (const auto& blk : a.blocks)
      for (int r = 0; r < blk.rows(); ++r)
        for (int c = 0; c < blk.cols(); ++c, ++idx) {
          Complex z = blk(r, c);
          if (z != Complex(0.0)) out = out + z * img[idx];
        }
    return out;
  }
};

// A ⊆ B with a conditional expectation E: B → A.
struct Inclusion {
  AlgebraShape a;
  AlgebraShape b;
  AlgebraMap embed;   // A → B, unital injective *-homomorphism
  AlgebraMap expect;  // B → A, unital A-bimodule retraction
};

namespace detail {

// A-valued Gram kernel of the matrix units of B: K(α,β) = E(f_α* f_β).
// Positivity of this kernel is complete positivity of E; the same kernel
// presents B as a right Hilbert A-module.
inline AMatrix expectation_gram(const Inclusion& inc) {
  auto fb = matrix_unit_basis(inc.b);
  const int m = static_cast<int>(fb.size());
  AMatrix k = AMatrix::zero(inc.a, m, m);
  for (int al = 0; al < m; ++al)
    for (int be = 0; be < m; ++be)
      k.set(al, be, inc.expect.apply(fb[static_cast<size_t>(al)].adjoint() * fb[static_cast<size_t>(be)]));
  return k;
}

}  // namespace detail

inline Inclusion make_inclusion(const AlgebraMap& embed, const AlgebraMap& expect,
                                double tol = kDefaultTol) {
  if (embed.codomain != expect.domain || embed.domain != expect.codomain)
    fail("ShapeMismatch", "make_inclusion: embed and E do not pair A with B");
  Inclusion inc{embed.domain, embed.codomain, embed, expect};
  if (embed.img.size() != static_cast<size_t>(algebra_dim(inc.a)) ||
      expect.img.size() != static_cast<size_t>(algebra_dim(inc.b)))
    fail("ShapeMismatch", "make_inclusion: wrong number of basis images");

  auto ea = matrix_unit_basis(inc.a);
  auto fb = matrix_unit_basis(inc.b);

  if ((embed.apply(AlgebraElement::identity(inc.a)) - AlgebraElement::identity(inc.b)).norm() > tol)
    fail("NotUnital", "make_inclusion: embed(1) != 1");
  std::vector<AlgebraElement> eimg;
  eimg.reserve(ea.size());
  for (const auto& e : ea) eimg.push_back(embed.apply(e));
  for (size_t p = 0; p < ea.size(); ++p) {
    if ((eimg[p].adjoint() - embed.apply(ea[p].adjoint())).norm() > tol)
      fail("NotStarMap", "make_inclusion: embed does not preserve adjoints");
    for (size_t q = 0; q < ea.size(); ++q)
      if ((eimg[p] * eimg[q] - embed.apply(ea[p] * ea[q])).norm() > tol)
        fail("NotHomomorphism", "make_inclusion: embed is not multiplicative");
  }
  for (int i = 0; i < inc.a.num_blocks(); ++i)
    if (embed.apply(AlgebraElement::central_projection(inc.a, i)).norm() <= tol)
      fail("NotInjective", "make_inclusion: embed kills central block " + std::to_string(i));

  if ((expect.apply(AlgebraElement::identity(inc.b)) - AlgebraElement::identity(inc.a)).norm() > tol)
    fail("NotExpectation", "make_inclusion: E(1) != 1");
  for (size_t p = 0; p < ea.size(); ++p)
    if ((expect.apply(eimg[p]) - ea[p]).norm() > tol)
      fail("NotExpectation", "make_inclusion: E does not restrict to the identity on A");
  for (size_t p = 0; p < ea.size(); ++p)
    for (size_t q = 0; q < ea.size(); ++q)
      for (size_t g = 0; g < fb.size(); ++g) {
        AlgebraElement lhs = expect.apply(eimg[p] * fb[g] * eimg[q]);
        AlgebraElement rhs = ea[p] * expect.apply(fb[g]) * ea[q];
        if ((lhs - rhs).norm() > tol)
          fail("NotExpectation", "make_inclusion: E is not an A-bimodule map");
      }

  AMatrix gram = detail::expectation_gram(inc);
  double scale = std::max(1.0, gram.norm());
  for (const auto& blk : gram.blk) {
    Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (blk + blk.adjoint()));
    if (es.eigenvalues().minCoeff() < -100 * tol * scale)
      fail("NotPositive", "make_inclusion: E is not completely positive");
  }
  return inc;
}

// B presented as the Hilbert A-bimodule X = B with (x|y) = E(x*y) and left
// action x ↦ embed(a)·x.  ι: B → X is the identity in these coordinates.
struct InclusionModule {
  Inclusion inc;
  BimodulePtr bimodule;
  GramPresentation pres;
  std::vector<AlgebraElement> b_units;

  ModuleVector iota(const AlgebraElement& x) const {
    if (x.shape != inc.b) fail("ShapeMismatch", "InclusionModule::iota: element not in B");
    auto c = detail::unit_coefficients(x);
    AMatrix coeffs = AMatrix::zero(inc.a, static_cast<int>(c.size()), 1);
    for (size_t al = 0; al < c.size(); ++al)
      if (c[al] != Complex(0.0))
        coeffs.set(static_cast<int>(al), 0, c[al] * AlgebraElement::identity(inc.a));
    return pres.embed(coeffs);
  }

  AlgebraElement iota_inv(const ModuleVector& v) const {
    if (!same_module(*v.module, *bimodule->x))
      fail("ModuleMismatch", "InclusionModule::iota_inv: vector not in X");
    AMatrix xi = pres.pinv_sqrt * v.coords;
    AlgebraElement out = AlgebraElement::zero(inc.b);
    for (size_t al = 0; al < b_units.size(); ++al)
      out = out + b_units[al] * inc.embed.apply(xi.at(static_cast<int>(al), 0));
    return out;
  }
};

inline InclusionModule present_module(const Inclusion& inc, double tol = kDefaultTol) {
  InclusionModule im;
  im.inc = inc;
  im.b_units = matrix_unit_basis(inc.b);
  const int m = static_cast<int>(im.b_units.size());

  AMatrix gram = detail::expectation_gram(inc);
  im.pres = present_from_gram(inc.a, gram);

  // The presented module carries dim_C B exactly when E is faithful; a rank
  // drop means E(x*x) = 0 for some nonzero x.
  int mdim = 0;
  auto ranks = im.pres.module->p.block_ranks(0.5);
  for (int i = 0; i < inc.a.num_blocks(); ++i)
    mdim += ranks[static_cast<size_t>(i)] * inc.a.blocks[static_cast<size_t>(i)];
  if (mdim != algebra_dim(inc.b))
    fail("DegenerateExpectation", "present_module: E is not faithful, the module drops rank");

  // Left action: structure constants of left multiplication by embed(e) on
  // the matrix units of B, conjugated into the presented coordinates.
  auto lambda_grid = [&](const AlgebraElement& e) {
    AMatrix lam = AMatrix::zero(inc.a, m, m);
    for (int al = 0; al < m; ++al) {
      auto c = detail::unit_coefficients(inc.embed.apply(e) * im.b_units[static_cast<size_t>(al)]);
      for (size_t be = 0; be < c.size(); ++be)
        if (c[be] != Complex(0.0))
          lam.set(static_cast<int>(be), al, c[be] * AlgebraElement::identity(inc.a));
    }
    return lam;
  };
  PhiMap phi;
  phi.domain = inc.a;
  phi.ambient = m;
  for (int j = 0; j < inc.a.num_blocks(); ++j) {
    int n = inc.a.blocks[static_cast<size_t>(j)];
    std::vector<AMatrix> row;
    row.reserve(static_cast<size_t>(n) * static_cast<size_t>(n));
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c)
        row.push_back(im.pres.sqrt * lambda_grid(AlgebraElement::matrix_unit(inc.a, j, r, c)) *
                      im.pres.pinv_sqrt);
    phi.img.push_back(std::move(row));
  }
  im.bimodule = make_bimodule(im.pres.module, phi, std::max(tol, 1e-8));

  // ι must be a unitary of Hilbert modules: (ι(f_α)|ι(f_β)) = E(f_α* f_β).
  for (int al = 0; al < m; ++al) {
    ModuleVector va = im.iota(im.b_units[static_cast<size_t>(al)]);
    for (int be = 0; be < m; ++be) {
      ModuleVector vb = im.iota(im.b_units[static_cast<size_t>(be)]);
      if ((inner(va, vb) - gram.at(al, be)).norm() > 1e-8 * std::max(1.0, gram.norm()))
        fail("InternalDisagreement", "present_module: iota is not inner-product preserving");
    }
  }
  return im;
}

// Quasi-basis {u_i} ⊂ B with x = Σ u_i embed(E(u_i* x)), and the index
// element Index E = Σ u_i u_i*, central in B, at least 1, independent of the
// chosen quasi-basis.
struct QuasiBasis {
  std::vector<AlgebraElement> basis;
  AlgebraElement index;
};

namespace detail {

inline AlgebraElement index_of_frame(const InclusionModule& im,
                                     const std::vector<ModuleVector>& fr) {
  AlgebraElement s = AlgebraElement::zero(im.inc.b);
  for (const auto& v : fr) {
    AlgebraElement u = im.iota_inv(v);
    s = s + u * u.adjoint();
  }
  return s;
}

}  // namespace detail

inline QuasiBasis quasi_basis(const InclusionModule& im, double tol = kDefaultTol) {
  QuasiBasis qb;
  auto fr = frame(im.bimodule->x);
  qb.basis.reserve(fr.size());
  for (const auto& v : fr) qb.basis.push_back(im.iota_inv(v));
  qb.index = detail::index_of_frame(im, fr);
  double scale = std::max(1.0, qb.index.norm());

  for (const auto& f : im.b_units) {
    AlgebraElement rec = AlgebraElement::zero(im.inc.b);
    for (const auto& u : qb.basis)
      rec = rec + u * im.inc.embed.apply(im.inc.expect.apply(u.adjoint() * f));
    if ((rec - f).norm() > 1e-8 * scale)
      fail("InternalDisagreement", "quasi_basis: reconstruction identity fails");
  }
  for (const auto& f : im.b_units)
    if ((qb.index * f - f * qb.index).norm() > 100 * tol * scale)
      fail("InternalDisagreement", "quasi_basis: index element is not central");
  if (qb.index.min_eigenvalue() < 1.0 - 1e-7)
    fail("InternalDisagreement", "quasi_basis: index element is below 1");

  // Basis independence: any frame of X yields the same element.
  Rng rng(737);
  auto rot = rotated_frame(im.bimodule->x, rng.unitary_matrix(im.inc.a, im.bimodule->x->k));
  if ((detail::index_of_frame(im, rot) - qb.index).norm() > 1e-8 * scale)
    fail("InternalDisagreement", "quasi_basis: index depends on the frame");
  return qb;
}

// Jones projection e_A ∈ L(X): ι(x) ↦ ι(embed(E(x))).  Commutes with the
// left action and fixes ι(1).
inline ModuleOperator jones_projection(const InclusionModule& im, double tol = kDefaultTol) {
  const int m = static_cast<int>(im.b_units.size());
  AMatrix mu = AMatrix::zero(im.inc.a, m, m);
  for (int al = 0; al < m; ++al) {
    auto c = detail::unit_coefficients(
        im.inc.embed.apply(im.inc.expect.apply(im.b_units[static_cast<size_t>(al)])));
    for (size_t be = 0; be < c.size(); ++be)
      if (c[be] != Complex(0.0))
        mu.set(static_cast<int>(be), al, c[be] * AlgebraElement::identity(im.inc.a));
  }
  AMatrix e = im.pres.sqrt * mu * im.pres.pinv_sqrt;
  if ((e * e - e).norm() > 100 * tol || (e - e.adjoint()).norm() > 100 * tol)
    fail("InternalDisagreement", "jones_projection: image is not a projection");
  GradedOperator g{im.bimodule, 1, 1, e, "jones_projection"};
  if (commutant_residual(g) > 100 * tol)
    fail("InternalDisagreement", "jones_projection: does not commute with the left action");
  ModuleVector one = im.iota(AlgebraElement::identity(im.inc.b));
  if ((e * one.coords - one.coords).norm() > 100 * tol * std::max(1.0, one.coords.norm()))
    fail("InternalDisagreement", "jones_projection: does not fix iota(1)");
  return ModuleOperator(im.bimodule->x, im.bimodule->x, e);
}

inline GradedOperator jones_graded(const InclusionModule& im, double tol = kDefaultTol) {
  return {im.bimodule, 1, 1, jones_projection(im, tol).block, "jones_projection"};
}

inline QuasiBasis quasi_basis(const Inclusion& inc, double tol = kDefaultTol) {
  return quasi_basis(present_module(inc, tol), tol);
}

inline ModuleOperator jones_projection(const Inclusion& inc, double tol = kDefaultTol) {
  return jones_projection(present_module(inc, tol), tol);
}

// Left A-valued inner product of finite type on X^{⊗level}.
//
// raw(x,y) = φ^{-1}(E_φ(θ_{x,y})) where E_φ is the weighted-trace expectation
// onto φ(A); the left inner product is A(x|y) = c·raw(x,y) with c ∈ Z(A)
// positive, normalized so that x = Σ_j φ(A(x|u_j))·u_j over any frame.  The
// left index is r-Ind = Σ_j A(u_j|u_j), central and frame independent.
struct FiniteTypeStructure {
  BimodulePtr base;
  int level = 1;
  std::vector<double> weights;
  AlgebraElement scale_c;  // central positive normalization
  AlgebraElement r_ind;    // Σ_j A(u_j|u_j)
  std::vector<ModuleVector> left_frame;

  // Trace pairing data for E_phi on the chosen level.
  std::vector<AlgebraElement> a_units;
  std::vector<AMatrix> phi_units;
  CMat phi_gram_pinv;

  AlgebraElement raw_inner(const ModuleVector& x, const ModuleVector& y) const {
    AMatrix th = x.coords * y.coords.adjoint();
    CVec rhs(static_cast<Eigen::Index>(phi_units.size()));
    for (size_t be = 0; be < phi_units.size(); ++be)
      rhs(static_cast<Eigen::Index>(be)) = weighted_trace(phi_units[be].adjoint() * th, weights);
    CVec c = phi_gram_pinv * rhs;
    AlgebraElement out = AlgebraElement::zero(base->shape());
    for (size_t be = 0; be < a_units.size(); ++be)
      if (c(static_cast<Eigen::Index>(be)) != Complex(0.0))
        out = out + c(static_cast<Eigen::Index>(be)) * a_units[be];
    return out;
  }

  // A(x|y): linear in x, conjugate linear in y.
  AlgebraElement left_inner(const ModuleVector& x, const ModuleVector& y) const {
    return scale_c * raw_inner(x, y);
  }
};

inline FiniteTypeStructure finite_type_structure(const BimodulePtr& b,
                                                 std::vector<double> weights = {}, int level = 1,
                                                 double tol = 1e-8) {
  if (level < 1) fail("BadShape", "finite_type_structure: level must be at least 1");
  FiniteTypeStructure f;
  f.base = b;
  f.level = level;
  const AlgebraShape& s = b->shape();
  if (weights.empty()) weights.assign(static_cast<size_t>(s.num_blocks()), 1.0);
  if (static_cast<int>(weights.size()) != s.num_blocks())
    fail("BadWeights", "finite_type_structure: one weight per block");
  for (double w : weights)
    if (!(w > 0.0)) fail("BadWeights", "finite_type_structure: weights must be positive");
  f.weights = std::move(weights);

  const TensorLevel& lv = b->level(level);
  f.a_units = matrix_unit_basis(s);
  f.phi_units.reserve(f.a_units.size());
  for (const auto& e : f.a_units) f.phi_units.push_back(lv.phi.apply(e));
  const int da = static_cast<int>(f.a_units.size());
  CMat h(da, da);
  for (int be = 0; be < da; ++be)
    for (int ga = 0; ga < da; ++ga)
      h(be, ga) = weighted_trace(f.phi_units[static_cast<size_t>(be)].adjoint() *
                                     f.phi_units[static_cast<size_t>(ga)],
                                 f.weights);
  f.phi_gram_pinv = Eigen::CompleteOrthogonalDecomposition<CMat>(h).pseudoInverse();
  f.scale_c = AlgebraElement::identity(s);
  f.left_frame = frame(lv.module);

  // Normalize per central block: on φ(p_i)X the raw reconstruction
  // Rec(z) = Σ_j φ(raw(z|u_j))u_j must be a positive scalar t_i; c_i = 1/t_i.
  // Rec is C-linear, so scalarity is certified on a C-spanning probe set of
  // each φ(p_i)X; probing only the frame columns is not enough.
  auto reconstruct = [&](const ModuleVector& z) {
    AMatrix acc = AMatrix::zero(s, lv.module->k, 1);
    for (const auto& u : f.left_frame) acc = acc + lv.phi.apply(f.raw_inner(z, u)) * u.coords;
    return acc;
  };
  std::vector<AMatrix> probes;
  for (int t = 0; t < s.num_blocks(); ++t) {
    int nt = s.blocks[static_cast<size_t>(t)];
    for (int row = 0; row < lv.module->k * nt; ++row)
      for (int col = 0; col < nt; ++col) {
        AMatrix z = AMatrix::zero(s, lv.module->k, 1);
        z.blk[static_cast<size_t>(t)](row, col) = 1.0;
        AMatrix pz = lv.module->p * z;
        if (pz.norm() > 1e-12) probes.push_back(std::move(pz));
      }
  }
  std::vector<Complex> cvals(static_cast<size_t>(s.num_blocks()));
  for (int i = 0; i < s.num_blocks(); ++i) {
    AMatrix pim = lv.phi.apply(AlgebraElement::central_projection(s, i));
    bool found = false;
    Complex ti = 0.0;
    for (const auto& pr : probes) {
      AMatrix zc = pim * pr;
      double zn = zc.norm();
      if (zn <= 1e-12) continue;
      ModuleVector z(lv.module, zc);
      AMatrix rec = reconstruct(z);
      Complex num = 0.0, den = 0.0;
      for (size_t bb = 0; bb < zc.blk.size(); ++bb) {
        num += (zc.blk[bb].adjoint() * rec.blk[bb]).trace();
        den += (zc.blk[bb].adjoint() * zc.blk[bb]).trace();
      }
      Complex t = num / den;
      if ((rec - t * zc).norm() > tol * zn)
        fail("NotFiniteType", "finite_type_structure: reconstruction is not scalar on block " +
                                  std::to_string(i));
      if (found && std::abs(t - ti) > tol * std::max(1.0, std::abs(ti)))
        fail("NotFiniteType",
             "finite_type_structure: inconsistent normalization on block " + std::to_string(i));
      ti = t;
      found = true;
    }
    if (!found)
      fail("NotFiniteType", "finite_type_structure: block " + std::to_string(i) +
                                " does not meet the module");
    if (std::abs(ti.imag()) > tol || ti.real() <= tol)
      fail("NotFiniteType",
           "finite_type_structure: normalization is not positive on block " + std::to_string(i));
    cvals[static_cast<size_t>(i)] = 1.0 / ti.real();
  }
  f.scale_c = AlgebraElement::central(s, cvals);

  // Axioms, checked on the frame: hermitian symmetry, positivity, left
  // reconstruction, central frame-independent index.
  double fscale = 1.0;
  for (const auto& u : f.left_frame) fscale = std::max(fscale, u.coords.norm());
  for (const auto& u : f.left_frame) {
    for (const auto& v : f.left_frame) {
      AlgebraElement uv = f.left_inner(u, v);
      if ((uv - f.left_inner(v, u).adjoint()).norm() > tol * fscale * fscale)
        fail("NotFiniteType", "finite_type_structure: inner product is not hermitian");
    }
    if (f.left_inner(u, u).min_eigenvalue() < -tol * fscale * fscale)
      fail("NotFiniteType", "finite_type_structure: inner product is not positive");
    AMatrix rec = AMatrix::zero(s, lv.module->k, 1);
    for (const auto& w : f.left_frame) rec = rec + lv.phi.apply(f.left_inner(u, w)) * w.coords;
    if ((rec - u.coords).norm() > tol * std::max(1.0, fscale))
      fail("NotFiniteType", "finite_type_structure: left reconstruction fails");
  }
  AlgebraElement rind = AlgebraElement::zero(s);
  for (const auto& u : f.left_frame) rind = rind + f.left_inner(u, u);
  if (!rind.is_central(1e-7 * std::max(1.0, rind.norm())))
    fail("NotFiniteType", "finite_type_structure: left index is not central");
  f.r_ind = rind;

  Rng rng(739);
  auto rot = rotated_frame(lv.module, rng.unitary_matrix(s, lv.module->k));
  AlgebraElement rind2 = AlgebraElement::zero(s);
  for (const auto& u : rot) rind2 = rind2 + f.left_inner(u, u);
  if ((rind2 - rind).norm() > 1e-8 * std::max(1.0, rind.norm()))
    fail("InternalDisagreement", "finite_type_structure: left index depends on the frame");
  return f;
}

// E_r^{r+k}: L(X^{⊗(r+k)}) → L(X^{⊗r}), the expectation that integrates out
// the last k tensor slots against the left inner product:
//   E(θ_{x1⊗y1, x2⊗y2}) = r-Ind^{-1} · θ_{x1·A(y1|y2), x2}.
// For r = 0 this is the trace-like map G onto A itself.
struct ExpectationChain {
  BimodulePtr base;
  int r = 0;
  int k = 1;
  FiniteTypeStructure fts;  // at level k
  AlgebraElement inv_rind;
  std::vector<ModuleVector> ur;  // frame of X^{⊗r}
  std::vector<ModuleVector> vk;  // frame of X^{⊗k}
  std::vector<AMatrix> uext;     // amplify(u_a.coords, φ_k)

  GradedOperator operator()(const GradedOperator& t) const {
    if (t.base.get() != base.get()) fail("ModuleMismatch", "expectation_chain: wrong bimodule");
    if (t.r != r + k || t.s != r + k)
      fail("DegreeMismatch", "expectation_chain: operator must have grade (" +
                                 std::to_string(r + k) + "," + std::to_string(r + k) + ")");
    if (k == 0) return {base, r, r, t.block, "expectation_chain"};
    const HilbertModulePtr& mr = base->level(r).module;
    const HilbertModulePtr& mrk = base->level(r + k).module;
    AMatrix out = AMatrix::zero(base->shape(), mr->k, mr->k);
    for (size_t a = 0; a < ur.size(); ++a)
      for (size_t bi = 0; bi < vk.size(); ++bi) {
        ModuleVector w(mrk, uext[a] * vk[bi].coords);
        ModuleVector tw(mrk, t.block * w.coords);
        for (size_t a2 = 0; a2 < ur.size(); ++a2)
          for (size_t b2 = 0; b2 < vk.size(); ++b2) {
            ModuleVector w2(mrk, uext[a2] * vk[b2].coords);
            AlgebraElement z = inner(w2, tw);
            AlgebraElement al = inv_rind * fts.left_inner(vk[b2].acted(z), vk[bi]);
            out = out + ur[a2].acted(al).coords * ur[a].coords.adjoint();
          }
      }
    return {base, r, r, out, "expectation_chain"};
  }
};

inline ExpectationChain expectation_chain(const BimodulePtr& b, const FiniteTypeStructure& fts,
                                          int r, int k) {
  if (r < 0 || k < 0) fail("BadShape", "expectation_chain: negative grade");
  ExpectationChain ch;
  ch.base = b;
  ch.r = r;
  ch.k = k;
  if (k == 0) {
    ch.inv_rind = AlgebraElement::identity(b->shape());
    return ch;
  }
  ch.fts = (fts.level == k && fts.base.get() == b.get())
               ? fts
               : finite_type_structure(b, fts.weights, k);
  auto vals = ch.fts.r_ind.central_values();
  std::vector<Complex> inv(vals.size());
  for (size_t i = 0; i < vals.size(); ++i) {
    if (std::abs(vals[i]) <= 1e-9)
      fail("SingularIndex", "expectation_chain: left index vanishes on block " + std::to_string(i));
    inv[i] = 1.0 / vals[i];
  }
  ch.inv_rind = AlgebraElement::central(b->shape(), inv);
  ch.ur = frame(b->level(r).module);
  ch.vk = frame(b->level(k).module);
  ch.uext.reserve(ch.ur.size());
  for (const auto& u : ch.ur) ch.uext.push_back(amplify(u.coords, b->level(k).phi));

  // Conditional-expectation spot checks: units map to units and E undoes the
  // right extension.  The recursive tower property is left to
  // verify_expectation_chain, which builds the intermediate chains.
  GradedOperator one = ch(graded_identity(b, r + k));
  if ((one.block - graded_identity(b, r).block).norm() > 1e-7)
    fail("InternalDisagreement", "expectation_chain: E(1) != 1");
  Rng rng(741);
  const TensorLevel& lr = b->level(r);
  AMatrix raw = rng.matrix(b->shape(), lr.phi.ambient, lr.phi.ambient);
  GradedOperator s0 = graded_compress(b, r, r, raw);
  if ((ch(right_extend(s0, k)).block - s0.block).norm() >
      1e-7 * std::max(1.0, s0.block.norm()))
    fail("InternalDisagreement", "expectation_chain: E does not undo the right extension");
  return ch;
}

// Full axiom check for a chain: bimodule property over rext, positivity,
// contractivity, idempotence of rext∘E, and tower compatibility.
inline void verify_expectation_chain(const ExpectationChain& ch, double tol = 1e-8) {
  if (ch.k == 0) return;
  const BimodulePtr& b = ch.base;
  const int r = ch.r, k = ch.k;
  Rng rng(743);
  auto rnd = [&](int lev) {
    const TensorLevel& l = b->level(lev);
    return graded_compress(b, lev, lev, rng.matrix(b->shape(), l.phi.ambient, l.phi.ambient));
  };
  for (int trial = 0; trial < 3; ++trial) {
    GradedOperator t = rnd(r + k);
    GradedOperator s = rnd(r);
    double scale = std::max(1.0, t.block.norm()) * std::max(1.0, s.block.norm());
    GradedOperator lhs = ch(graded_compose(right_extend(s, k), t));
    GradedOperator rhs = graded_compose(s, ch(t));
    if ((lhs.block - rhs.block).norm() > tol * scale)
      fail("InternalDisagreement", "expectation_chain: not a left module map over rext");
    lhs = ch(graded_compose(t, right_extend(s, k)));
    rhs = graded_compose(ch(t), s);
    if ((lhs.block - rhs.block).norm() > tol * scale)
      fail("InternalDisagreement", "expectation_chain: not a right module map over rext");
    GradedOperator pos = ch(graded_compose(t.adjoint(), t));
    AMatrix herm = 0.5 * (pos.block + pos.block.adjoint());
    for (const auto& blk : herm.blk) {
      Eigen::SelfAdjointEigenSolver<CMat> es(blk);
      if (es.eigenvalues().minCoeff() < -tol * std::max(1.0, pos.block.norm()))
        fail("InternalDisagreement", "expectation_chain: not positive");
    }
    if (ch(t).norm() > t.norm() + tol * std::max(1.0, t.norm()))
      fail("InternalDisagreement", "expectation_chain: not contractive");
    GradedOperator again = ch(right_extend(ch(t), k));
    if ((again.block - ch(t).block).norm() > tol * std::max(1.0, t.block.norm()))
      fail("InternalDisagreement", "expectation_chain: rext∘E is not idempotent");
  }
  if (k >= 2) {
    ExpectationChain upper = expectation_chain(b, ch.fts, r + 1, k - 1);
    ExpectationChain lower = expectation_chain(b, ch.fts, r, 1);
    for (int trial = 0; trial < 2; ++trial) {
      GradedOperator t = rnd(r + k);
      GradedOperator via = lower(upper(t));
      if ((via.block - ch(t).block).norm() > tol * std::max(1.0, t.block.norm()))
        fail("InternalDisagreement", "expectation_chain: tower compatibility fails");
    }
  }
}

// Full expectation onto A: apply E_0^{r} to a grade-(r,r) operator and read
// off the resulting element of A.
inline AlgebraElement expectation_to_base(const BimodulePtr& b, const FiniteTypeStructure& fts,
                                          const GradedOperator& t) {
  if (t.r != t.s) fail("DegreeMismatch", "expectation_to_base: operator must be grade preserving");
  ExpectationChain ch = expectation_chain(b, fts, 0, t.r);
  return ch(t).block.at(0, 0);
}

}  // namespace hilbim
