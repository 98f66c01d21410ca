#pragma once

// Finite multi-matrix C*-algebras A = ⊕_i M_{n_i}(C) and matrices over them.
//
// Everything in this library decomposes blockwise over the central summands
// of A.  A rows×cols matrix over A is stored per summand i as one dense
// complex matrix of size (rows·n_i)×(cols·n_i); entry (r,c) occupies the
// sub-block at (r·n_i, c·n_i).  That flattening is a *-isomorphism
// M_n(A) ≅ ⊕_i M_{n·n_i}(C), so norms, products, adjoints, functional
// calculus and positivity are all computed on the flattened blocks.

#include <Eigen/Dense>
#include <algorithm>
#include <complex>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hilbim {

using Complex = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

inline constexpr double kDefaultTol = 1e-9;

// Every contract violation carries a stable code string used by the CLI to
// map failures onto exit codes and by tests to pin the failure mode.
class Error : public std::runtime_error {
public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(code + ": " + what), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

private:
  std::string code_;
};

[[noreturn]] inline void fail(const std::string& code, const std::string& what) {
  throw Error(code, what);
}

// ======================================================================
// Shapes and ideals
// ======================================================================

struct AlgebraShape {
  std::vector<int> blocks;  // n_i >= 1

  int num_blocks() const { return static_cast<int>(blocks.size()); }
  int block_dim(int i) const { return blocks[static_cast<size_t>(i)]; }
  int total_dim() const {
    int s = 0;
    for (int n : blocks) s += n * n;
    return s;
  }
  bool operator==(const AlgebraShape& o) const { return blocks == o.blocks; }
  bool operator!=(const AlgebraShape& o) const { return !(*this == o); }

  void validate() const {
    if (blocks.empty()) fail("EmptyShape", "algebra needs at least one block");
    for (int n : blocks)
      if (n < 1) fail("BadShape", "block sizes must be positive");
  }
};

// Ideals of A are exactly the sums of central summands, so an ideal is a
// subset of block indices.  Enumeration is guarded at d <= 20.
struct IdealMask {
  std::uint32_t bits = 0;
  int d = 0;

  static IdealMask none(int d) { return {0, d}; }
  static IdealMask all(int d) { return {d >= 32 ? 0u : ((1u << d) - 1u), d}; }
  bool contains(int i) const { return (bits >> i) & 1u; }
  IdealMask& add(int i) {
    bits |= (1u << i);
    return *this;
  }
  int count() const {
    int c = 0;
    for (int i = 0; i < d; ++i) c += contains(i);
    return c;
  }
  bool empty() const { return bits == 0; }
  bool full() const { return bits == all(d).bits; }
  bool operator==(const IdealMask& o) const { return bits == o.bits && d == o.d; }
  std::vector<int> members() const {
    std::vector<int> v;
    for (int i = 0; i < d; ++i)
      if (contains(i)) v.push_back(i);
    return v;
  }
  std::vector<int> complement() const {
    std::vector<int> v;
    for (int i = 0; i < d; ++i)
      if (!contains(i)) v.push_back(i);
    return v;
  }
};

// ======================================================================
// Scalar-level spectral helpers
// ======================================================================

namespace detail {

inline double spectral_norm(const CMat& m) {
  if (m.size() == 0) return 0.0;
  // Largest singular value via the Hermitian eigenproblem on the smaller Gram.
  if (m.rows() <= m.cols()) {
    Eigen::SelfAdjointEigenSolver<CMat> es(m * m.adjoint());
    return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
  }
  Eigen::SelfAdjointEigenSolver<CMat> es(m.adjoint() * m);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

inline bool is_hermitian(const CMat& m, double tol) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol * std::max(1.0, m.cwiseAbs().maxCoeff());
}

// Spectral map of a Hermitian matrix.  Eigenvalues in [-tol, 0) are clamped
// to 0 before `f` is applied; eigenvalues below -tol trip `NotPositive` when
// require_psd is set.
template <typename F>
CMat hermitian_calculus(const CMat& m, double tol, bool require_psd, F&& f,
                        const char* op_name) {
  if (m.size() == 0) return m;
  if (!is_hermitian(m, std::max(tol, 1e-12)))
    fail("NotSelfAdjoint", std::string(op_name) + " needs a self-adjoint input");
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (m + m.adjoint()));
  Eigen::VectorXd ev = es.eigenvalues();
  for (Eigen::Index j = 0; j < ev.size(); ++j) {
    if (ev[j] < 0.0) {
      if (require_psd && ev[j] < -tol)
        fail("NotPositive", std::string(op_name) + ": eigenvalue " + std::to_string(ev[j]));
      if (ev[j] >= -tol) ev[j] = 0.0;
    }
    ev[j] = f(ev[j]);
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

inline CMat psd_sqrt_mat(const CMat& m, double tol) {
  return hermitian_calculus(m, tol, true, [](double x) { return std::sqrt(x); }, "psd_sqrt");
}

// Pseudo-inverse square root: eigenvalues <= cutoff map to 0.
inline CMat psd_pinv_sqrt_mat(const CMat& m, double cutoff) {
  return hermitian_calculus(
      m, cutoff, true, [cutoff](double x) { return x > cutoff ? 1.0 / std::sqrt(x) : 0.0; },
      "psd_pinv_sqrt");
}

// Orthogonal projection onto the range of a PSD matrix, eigenvalue cutoff.
inline CMat support_projection(const CMat& m, double cutoff) {
  return hermitian_calculus(
      m, cutoff, true, [cutoff](double x) { return x > cutoff ? 1.0 : 0.0; },
      "support_projection");
}

inline int rank_psd(const CMat& m, double cutoff) {
  if (m.size() == 0) return 0;
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (m + m.adjoint()));
  int r = 0;
  for (Eigen::Index j = 0; j < es.eigenvalues().size(); ++j)
    if (es.eigenvalues()[j] > cutoff) ++r;
  return r;
}

inline CMat kron(const CMat& a, const CMat& b) {
  CMat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace detail

// ======================================================================
// AlgebraElement: one element of A = ⊕_i M_{n_i}(C)
// ======================================================================

struct AlgebraElement {
  AlgebraShape shape;
  std::vector<CMat> blocks;

  AlgebraElement() = default;
  explicit AlgebraElement(AlgebraShape s) : shape(std::move(s)) {
    shape.validate();
    blocks.reserve(shape.blocks.size());
    for (int n : shape.blocks) blocks.push_back(CMat::Zero(n, n));
  }

  static AlgebraElement zero(const AlgebraShape& s) { return AlgebraElement(s); }
  static AlgebraElement identity(const AlgebraShape& s) {
    AlgebraElement a(s);
    for (size_t i = 0; i < a.blocks.size(); ++i)
      a.blocks[i] = CMat::Identity(s.blocks[i], s.blocks[i]);
    return a;
  }
  // Minimal central projection p_i.
  static AlgebraElement central_projection(const AlgebraShape& s, int i) {
    AlgebraElement a(s);
    a.blocks[static_cast<size_t>(i)] =
        CMat::Identity(s.blocks[static_cast<size_t>(i)], s.blocks[static_cast<size_t>(i)]);
    return a;
  }
  // Matrix unit e^{(i)}_{st}.
  static AlgebraElement matrix_unit(const AlgebraShape& s, int i, int st_row, int st_col) {
    AlgebraElement a(s);
    a.blocks[static_cast<size_t>(i)](st_row, st_col) = 1.0;
    return a;
  }
  // Central element with scalar value z_i on block i.
  static AlgebraElement central(const AlgebraShape& s, const std::vector<Complex>& z) {
    AlgebraElement a(s);
    for (size_t i = 0; i < a.blocks.size(); ++i)
      a.blocks[i] = z[i] * CMat::Identity(s.blocks[i], s.blocks[i]);
    return a;
  }

  void check_same_shape(const AlgebraElement& o, const char* op) const {
    if (shape != o.shape) fail("ShapeMismatch", op);
  }

  AlgebraElement operator+(const AlgebraElement& o) const {
    check_same_shape(o, "operator+");
    AlgebraElement r = *this;
    for (size_t i = 0; i < blocks.size(); ++i) r.blocks[i] += o.blocks[i];
    return r;
  }
  AlgebraElement operator-(const AlgebraElement& o) const {
    check_same_shape(o, "operator-");
    AlgebraElement r = *this;
    for (size_t i = 0; i < blocks.size(); ++i) r.blocks[i] -= o.blocks[i];
    return r;
  }
  AlgebraElement operator*(const AlgebraElement& o) const {
    check_same_shape(o, "operator*");
    AlgebraElement r(shape);
    for (size_t i = 0; i < blocks.size(); ++i) r.blocks[i] = blocks[i] * o.blocks[i];
    return r;
  }
  friend AlgebraElement operator*(Complex c, const AlgebraElement& a) {
    AlgebraElement r = a;
    for (auto& b : r.blocks) b *= c;
    return r;
  }
  AlgebraElement adjoint() const {
    AlgebraElement r(shape);
    for (size_t i = 0; i < blocks.size(); ++i) r.blocks[i] = blocks[i].adjoint();
    return r;
  }

  // C*-norm: max over blocks of the largest singular value.
  double norm() const {
    double m = 0.0;
    for (const auto& b : blocks) m = std::max(m, detail::spectral_norm(b));
    return m;
  }
  bool is_zero(double tol = kDefaultTol) const { return norm() <= tol; }
  bool is_hermitian(double tol = kDefaultTol) const {
    for (const auto& b : blocks)
      if (!detail::is_hermitian(b, tol)) return false;
    return true;
  }
  bool is_central(double tol = kDefaultTol) const {
    for (const auto& b : blocks) {
      Complex z = b.trace() / static_cast<double>(b.rows());
      if ((b - z * CMat::Identity(b.rows(), b.cols())).cwiseAbs().maxCoeff() > tol) return false;
    }
    return true;
  }
  std::vector<Complex> central_values() const {
    std::vector<Complex> v;
    v.reserve(blocks.size());
    for (const auto& b : blocks) v.push_back(b.trace() / static_cast<double>(b.rows()));
    return v;
  }
  double min_eigenvalue() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& b : blocks) {
      Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (b + b.adjoint()));
      m = std::min(m, es.eigenvalues().minCoeff());
    }
    return m;
  }

  AlgebraElement psd_sqrt(double tol = kDefaultTol) const {
    AlgebraElement r(shape);
    for (size_t i = 0; i < blocks.size(); ++i) r.blocks[i] = detail::psd_sqrt_mat(blocks[i], tol);
    return r;
  }
  // Inverse square root; requires all eigenvalues > tol.
  AlgebraElement psd_inv_sqrt(double tol = kDefaultTol) const {
    AlgebraElement r(shape);
    for (size_t i = 0; i < blocks.size(); ++i) {
      if (detail::rank_psd(blocks[i], tol) != shape.blocks[i])
        fail("NotInvertible", "psd_inv_sqrt: spectrum reaches the cutoff");
      r.blocks[i] = detail::psd_pinv_sqrt_mat(blocks[i], tol);
    }
    return r;
  }
  AlgebraElement inverse(double tol = kDefaultTol) const {
    AlgebraElement r(shape);
    for (size_t i = 0; i < blocks.size(); ++i) {
      Eigen::FullPivLU<CMat> lu(blocks[i]);
      lu.setThreshold(tol);
      if (!lu.isInvertible()) fail("NotInvertible", "inverse: singular block");
      r.blocks[i] = lu.inverse();
    }
    return r;
  }
};

// ======================================================================
// AMatrix: rows×cols matrix over A, stored flattened per block
// ======================================================================

struct AMatrix {
  AlgebraShape shape;
  int rows = 0, cols = 0;
  std::vector<CMat> blk;  // blk[i]: (rows*n_i) x (cols*n_i)

  AMatrix() = default;
  AMatrix(AlgebraShape s, int r, int c) : shape(std::move(s)), rows(r), cols(c) {
    shape.validate();
    if (r < 0 || c < 0) fail("BadShape", "AMatrix dimensions");
    blk.reserve(shape.blocks.size());
    for (int n : shape.blocks) blk.push_back(CMat::Zero(r * n, c * n));
  }

  static AMatrix zero(const AlgebraShape& s, int r, int c) { return AMatrix(s, r, c); }
  static AMatrix identity(const AlgebraShape& s, int n) {
    AMatrix m(s, n, n);
    for (size_t i = 0; i < m.blk.size(); ++i) {
      int d = n * s.blocks[i];
      m.blk[i] = CMat::Identity(d, d);
    }
    return m;
  }
  static AMatrix from_element(const AlgebraElement& a) {
    AMatrix m(a.shape, 1, 1);
    m.blk = a.blocks;
    return m;
  }
  // diag(z, ..., z) for central z: commutes with every matrix over A.
  static AMatrix central_diagonal(const AlgebraElement& z, int n) {
    AMatrix m(z.shape, n, n);
    for (size_t i = 0; i < m.blk.size(); ++i)
      m.blk[i] = detail::kron(CMat::Identity(n, n), z.blocks[i]);
    return m;
  }

  int num_blocks() const { return shape.num_blocks(); }

  AlgebraElement at(int r, int c) const {
    AlgebraElement a(shape);
    for (size_t i = 0; i < blk.size(); ++i) {
      int n = shape.blocks[i];
      a.blocks[i] = blk[i].block(r * n, c * n, n, n);
    }
    return a;
  }
  void set(int r, int c, const AlgebraElement& a) {
    if (a.shape != shape) fail("ShapeMismatch", "AMatrix::set");
    for (size_t i = 0; i < blk.size(); ++i) {
      int n = shape.blocks[i];
      blk[i].block(r * n, c * n, n, n) = a.blocks[i];
    }
  }

  void check_same_shape(const AMatrix& o, const char* op) const {
    if (shape != o.shape) fail("ShapeMismatch", op);
  }

  AMatrix operator+(const AMatrix& o) const {
    check_same_shape(o, "operator+");
    if (rows != o.rows || cols != o.cols) fail("SizeMismatch", "operator+");
    AMatrix r = *this;
    for (size_t i = 0; i < blk.size(); ++i) r.blk[i] += o.blk[i];
    return r;
  }
  AMatrix operator-(const AMatrix& o) const {
    check_same_shape(o, "operator-");
    if (rows != o.rows || cols != o.cols) fail("SizeMismatch", "operator-");
    AMatrix r = *this;
    for (size_t i = 0; i < blk.size(); ++i) r.blk[i] -= o.blk[i];
    return r;
  }
  AMatrix operator*(const AMatrix& o) const {
    check_same_shape(o, "operator*");
    if (cols != o.rows) fail("SizeMismatch", "operator*: inner dimensions");
    AMatrix r(shape, rows, o.cols);
    for (size_t i = 0; i < blk.size(); ++i) r.blk[i] = blk[i] * o.blk[i];
    return r;
  }
  friend AMatrix operator*(Complex c, const AMatrix& m) {
    AMatrix r = m;
    for (auto& b : r.blk) b *= c;
    return r;
  }
  AMatrix adjoint() const {
    AMatrix r(shape, cols, rows);
    for (size_t i = 0; i < blk.size(); ++i) r.blk[i] = blk[i].adjoint();
    return r;
  }

  double norm() const {
    double m = 0.0;
    for (const auto& b : blk) m = std::max(m, detail::spectral_norm(b));
    return m;
  }
  // Largest entry modulus: a cheap equivalent norm for zero tests.
  double entry_norm() const {
    double m = 0.0;
    for (const auto& b : blk)
      if (b.size() > 0) m = std::max(m, b.cwiseAbs().maxCoeff());
    return m;
  }
  bool is_zero(double tol = kDefaultTol) const { return norm() <= tol; }
  bool is_hermitian(double tol = kDefaultTol) const {
    if (rows != cols) return false;
    for (const auto& b : blk)
      if (!detail::is_hermitian(b, tol)) return false;
    return true;
  }
  bool is_projection(double tol = 100 * kDefaultTol) const {
    if (rows != cols) return false;
    return is_hermitian(tol) && (*this * *this - *this).norm() <= tol;
  }

  AMatrix psd_sqrt(double tol = kDefaultTol) const {
    if (rows != cols) fail("SizeMismatch", "psd_sqrt: square input required");
    AMatrix r(shape, rows, cols);
    for (size_t i = 0; i < blk.size(); ++i) r.blk[i] = detail::psd_sqrt_mat(blk[i], tol);
    return r;
  }
  AMatrix psd_pinv_sqrt(double cutoff = kDefaultTol) const {
    if (rows != cols) fail("SizeMismatch", "psd_pinv_sqrt: square input required");
    AMatrix r(shape, rows, cols);
    for (size_t i = 0; i < blk.size(); ++i) r.blk[i] = detail::psd_pinv_sqrt_mat(blk[i], cutoff);
    return r;
  }
  AMatrix support_projection(double cutoff = kDefaultTol) const {
    if (rows != cols) fail("SizeMismatch", "support_projection: square input required");
    AMatrix r(shape, rows, cols);
    for (size_t i = 0; i < blk.size(); ++i) r.blk[i] = detail::support_projection(blk[i], cutoff);
    return r;
  }
  // Complex dimension of the range, summed over blocks (each block of the
  // flattening contributes rank · 1).
  std::vector<int> block_ranks(double cutoff = kDefaultTol) const {
    std::vector<int> v;
    v.reserve(blk.size());
    for (const auto& b : blk) v.push_back(detail::rank_psd(b, cutoff));
    return v;
  }

  // Right multiplication x ↦ x·z by a central element acts as a commuting
  // diagonal; exposed as a product with central_diagonal.
  AMatrix scale_central(const AlgebraElement& z) const {
    return *this * AMatrix::central_diagonal(z, cols);
  }
};

// ======================================================================
// Quotients by ideals
// ======================================================================

// Quotient A → A/J deletes the blocks in J.  The returned map applies to
// elements and to matrices over A; lift embeds A/J back with zeros on J.
struct QuotientMap {
  AlgebraShape source;
  AlgebraShape target;
  IdealMask ideal;
  std::vector<int> kept;  // source block indices surviving the quotient

  AlgebraElement apply(const AlgebraElement& a) const {
    if (a.shape != source) fail("ShapeMismatch", "QuotientMap::apply");
    AlgebraElement r(target);
    for (size_t t = 0; t < kept.size(); ++t) r.blocks[t] = a.blocks[static_cast<size_t>(kept[t])];
    return r;
  }
  AMatrix apply(const AMatrix& m) const {
    if (m.shape != source) fail("ShapeMismatch", "QuotientMap::apply");
    AMatrix r(target, m.rows, m.cols);
    for (size_t t = 0; t < kept.size(); ++t) r.blk[t] = m.blk[static_cast<size_t>(kept[t])];
    return r;
  }
  AlgebraElement lift(const AlgebraElement& a) const {
    if (a.shape != target) fail("ShapeMismatch", "QuotientMap::lift");
    AlgebraElement r(source);
    for (size_t t = 0; t < kept.size(); ++t) r.blocks[static_cast<size_t>(kept[t])] = a.blocks[t];
    return r;
  }
};

inline QuotientMap quotient(const AlgebraShape& s, const IdealMask& j) {
  if (j.d != s.num_blocks()) fail("ShapeMismatch", "quotient: mask dimension");
  if (j.full()) fail("FullIdeal", "quotient by the whole algebra");
  QuotientMap q;
  q.source = s;
  q.ideal = j;
  for (int i = 0; i < s.num_blocks(); ++i)
    if (!j.contains(i)) {
      q.kept.push_back(i);
      q.target.blocks.push_back(s.blocks[static_cast<size_t>(i)]);
    }
  return q;
}

// ======================================================================
// Weighted traces and trace-preserving conditional expectations
// ======================================================================

// tau_w(M) = Σ_i w_i · tr(blk_i).  Weights default to 1 per block; they are
// part of the expectation's identity and serialized with any report that
// depends on one.
inline Complex weighted_trace(const AMatrix& m, const std::vector<double>& weights) {
  if (weights.size() != m.blk.size()) fail("ShapeMismatch", "weighted_trace: weights");
  Complex t = 0.0;
  for (size_t i = 0; i < m.blk.size(); ++i) t += weights[i] * m.blk[i].trace();
  return t;
}

// Conditional expectation onto a *-subalgebra S of a corner q·M_n(A)·q,
// realized as the tau_w-orthogonal projection onto S.  Positivity and the
// bimodule property follow because the projection is trace-preserving onto
// a unital (q ∈ S) *-closed subspace.
class TraceExpectation {
public:
  TraceExpectation(std::vector<AMatrix> spanning, AMatrix corner, std::vector<double> weights,
                   double tol = kDefaultTol)
      : corner_(std::move(corner)), weights_(std::move(weights)), tol_(tol) {
    if (weights_.empty()) weights_.assign(static_cast<size_t>(corner_.num_blocks()), 1.0);
    for (double w : weights_)
      if (w <= 0.0) fail("BadWeights", "trace weights must be positive");
    if (!corner_.is_projection(std::max(tol_, 1e-7) * 100))
      fail("NotProjection", "trace_expectation: corner must be a projection");
    if (spanning.empty()) fail("EmptySubalgebra", "trace_expectation: no spanning set");
    build_basis(spanning);
    validate_subalgebra(spanning);
  }

  AMatrix operator()(const AMatrix& x) const {
    AMatrix y = AMatrix::zero(x.shape, x.rows, x.cols);
    for (const auto& b : basis_) {
      Complex c = weighted_trace(b.adjoint() * x, weights_);
      y = y + c * b;
    }
    return y;
  }

  const std::vector<AMatrix>& basis() const { return basis_; }
  const std::vector<double>& weights() const { return weights_; }

private:
  void build_basis(const std::vector<AMatrix>& span) {
    const int m = static_cast<int>(span.size());
    CMat gram(m, m);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        gram(a, b) = weighted_trace(span[static_cast<size_t>(a)].adjoint() * span[static_cast<size_t>(b)], weights_);
    double scale = std::max(1.0, gram.cwiseAbs().maxCoeff());
    CMat w = detail::psd_pinv_sqrt_mat(gram, tol_ * scale);
    // Columns of span·w with nonzero Gram weight form a tau_w-ONB.
    for (int b = 0; b < m; ++b) {
      if (w.col(b).cwiseAbs().maxCoeff() == 0.0) continue;
      AMatrix e = AMatrix::zero(span[0].shape, span[0].rows, span[0].cols);
      for (int a = 0; a < m; ++a) e = e + w(a, b) * span[static_cast<size_t>(a)];
      double nrm2 = std::abs(weighted_trace(e.adjoint() * e, weights_));
      if (nrm2 > tol_) basis_.push_back((1.0 / std::sqrt(nrm2)) * e);
    }
    if (basis_.empty()) fail("EmptySubalgebra", "trace_expectation: degenerate spanning set");
  }

  void validate_subalgebra(const std::vector<AMatrix>& span) {
    auto residual = [&](const AMatrix& x) { return ((*this)(x) - x).norm(); };
    double s = 0.0;
    for (const auto& x : span) s = std::max(s, x.norm());
    double tol = std::max(tol_, 1e-12) * std::max(1.0, s * s) * 100;
    if (residual(corner_) > tol)
      fail("NotSubalgebra", "trace_expectation: corner unit not in span");
    for (const auto& x : span) {
      if (residual(x.adjoint()) > tol)
        fail("NotSubalgebra", "trace_expectation: span not *-closed");
      for (const auto& y : span)
        if (residual(x * y) > tol)
          fail("NotSubalgebra", "trace_expectation: span not closed under products");
    }
  }

  AMatrix corner_;
  std::vector<double> weights_;
  double tol_;
  std::vector<AMatrix> basis_;
};

}  // namespace hilbim
