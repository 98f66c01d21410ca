#include <gtest/gtest.h>

#include "common.hpp"
#include "hilbim/mmalg.hpp"
#include "hilbim/random.hpp"

using namespace hilbim;

namespace {

AlgebraShape shape23() { return AlgebraShape{{2, 3}}; }

TEST(AlgebraElement, NormIsMaxOfBlockOperatorNorms) {
  AlgebraElement a(shape23());
  a.blocks[0] << 3.0, 0.0, 0.0, 1.0;
  a.blocks[1].setIdentity();
  EXPECT_NEAR(a.norm(), 3.0, 1e-12);

  // Against the SVD oracle on random elements.
  Rng rng(101);
  for (int t = 0; t < 25; ++t) {
    AlgebraShape s = rng.shape();
    AlgebraElement x = rng.element(s);
    EXPECT_NEAR(x.norm(), testutil::oracle_norm(AMatrix::from_element(x)), 1e-10);
  }
}

TEST(AlgebraElement, CStarIdentity) {
  Rng rng(102);
  for (int t = 0; t < 25; ++t) {
    AlgebraElement x = rng.element(rng.shape());
    EXPECT_NEAR((x.adjoint() * x).norm(), x.norm() * x.norm(), 1e-9 * (1 + x.norm() * x.norm()));
  }
}

TEST(AlgebraElement, PsdSqrtOnDiagonal) {
  AlgebraShape s{{2, 1}};
  AlgebraElement a(s);
  a.blocks[0] << 4.0, 0.0, 0.0, 9.0;
  a.blocks[1] << 1.0;
  AlgebraElement r = a.psd_sqrt();
  EXPECT_NEAR(r.blocks[0](0, 0).real(), 2.0, 1e-12);
  EXPECT_NEAR(r.blocks[0](1, 1).real(), 3.0, 1e-12);
  EXPECT_NEAR(r.blocks[1](0, 0).real(), 1.0, 1e-12);
}

TEST(AlgebraElement, PsdSqrtSquaresBack) {
  Rng rng(103);
  for (int t = 0; t < 20; ++t) {
    AlgebraShape s = rng.shape();
    AlgebraElement g = rng.element(s);
    AlgebraElement pos = g.adjoint() * g;
    AlgebraElement r = pos.psd_sqrt();
    EXPECT_LE((r * r - pos).norm(), 1e-9 * (1.0 + pos.norm()));
  }
}

TEST(AlgebraElement, PsdSqrtClampsTinyNegatives) {
  AlgebraShape s{{1}};
  AlgebraElement a(s);
  a.blocks[0] << -1e-12;
  EXPECT_NEAR(a.psd_sqrt(1e-9).norm(), 0.0, 1e-12);
}

TEST(AlgebraElement, SpectralErrors) {
  AlgebraShape s{{2}};
  AlgebraElement nh(s);
  nh.blocks[0] << 0.0, 1.0, 0.0, 0.0;
  EXPECT_THROW(
      {
        try {
          nh.psd_sqrt();
        } catch (const Error& e) {
          EXPECT_EQ(e.code(), "NotSelfAdjoint");
          throw;
        }
      },
      Error);

  AlgebraElement neg(s);
  neg.blocks[0] << -1.0, 0.0, 0.0, 1.0;
  EXPECT_THROW(
      {
        try {
          neg.psd_sqrt();
        } catch (const Error& e) {
          EXPECT_EQ(e.code(), "NotPositive");
          throw;
        }
      },
      Error);

  AlgebraElement sing(s);
  sing.blocks[0] << 1.0, 0.0, 0.0, 0.0;
  EXPECT_THROW(
      {
        try {
          sing.psd_inv_sqrt();
        } catch (const Error& e) {
          EXPECT_EQ(e.code(), "NotInvertible");
          throw;
        }
      },
      Error);
}

TEST(AMatrix, ProductMatchesGridConvention) {
  // Flattened products agree with entrywise grid multiplication over A.
  Rng rng(104);
  AlgebraShape s = shape23();
  AMatrix a = rng.matrix(s, 3, 2), b = rng.matrix(s, 2, 4);
  AMatrix c = a * b;
  for (int r = 0; r < 3; ++r)
    for (int col = 0; col < 4; ++col) {
      AlgebraElement want = AlgebraElement::zero(s);
      for (int t = 0; t < 2; ++t) want = want + a.at(r, t) * b.at(t, col);
      EXPECT_LE((c.at(r, col) - want).norm(), 1e-10);
    }
}

TEST(AMatrix, AdjointMatchesGridConvention) {
  Rng rng(105);
  AlgebraShape s = shape23();
  AMatrix a = rng.matrix(s, 3, 2);
  AMatrix ad = a.adjoint();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 2; ++c)
      EXPECT_LE((ad.at(c, r) - a.at(r, c).adjoint()).norm(), 1e-12);
}

TEST(AMatrix, CentralDiagonalCommutes) {
  Rng rng(106);
  AlgebraShape s = shape23();
  AlgebraElement z = AlgebraElement::central(s, {Complex(2, 1), Complex(-1, 0)});
  AMatrix m = rng.matrix(s, 3, 3);
  AMatrix d = AMatrix::central_diagonal(z, 3);
  EXPECT_LE((m * d - d * m).norm(), 1e-10);
}

TEST(Quotient, DropsBlocksAndIsContractiveStarHom) {
  AlgebraShape s{{2, 1, 3}};
  IdealMask j = IdealMask::none(3).add(1);
  QuotientMap q = quotient(s, j);
  EXPECT_EQ(q.target.blocks, (std::vector<int>{2, 3}));

  Rng rng(107);
  for (int t = 0; t < 10; ++t) {
    AlgebraElement x = rng.element(s), y = rng.element(s);
    EXPECT_LE((q.apply(x * y) - q.apply(x) * q.apply(y)).norm(), 1e-12);
    EXPECT_LE((q.apply(x.adjoint()) - q.apply(x).adjoint()).norm(), 1e-12);
    EXPECT_LE(q.apply(x).norm(), x.norm() + 1e-12);
  }
  EXPECT_THROW(quotient(s, IdealMask::all(3)), Error);
}

TEST(TraceExpectation, DiagonalSubalgebraOfM2) {
  // E onto diagonal matrices in M_2 w.r.t. the trace: entrywise diagonal part.
  AlgebraShape s{{2}};
  AMatrix corner = AMatrix::identity(s, 1);
  std::vector<AMatrix> span = {AMatrix::from_element(AlgebraElement::matrix_unit(s, 0, 0, 0)),
                               AMatrix::from_element(AlgebraElement::matrix_unit(s, 0, 1, 1))};
  TraceExpectation e(span, corner, {1.0});
  AlgebraElement x(s);
  x.blocks[0] << Complex(1, 2), Complex(3, 4), Complex(5, 6), Complex(7, 8);
  AMatrix ex = e(AMatrix::from_element(x));
  EXPECT_LE(std::abs(ex.at(0, 0).blocks[0](0, 0) - Complex(1, 2)), 1e-12);
  EXPECT_LE(std::abs(ex.at(0, 0).blocks[0](1, 1) - Complex(7, 8)), 1e-12);
  EXPECT_LE(std::abs(ex.at(0, 0).blocks[0](0, 1)), 1e-12);
}

TEST(TraceExpectation, OntoScalarsIsNormalizedTrace) {
  AlgebraShape s{{3}};
  TraceExpectation e({AMatrix::identity(s, 1)}, AMatrix::identity(s, 1), {1.0});
  Rng rng(108);
  AlgebraElement x = rng.element(s);
  AMatrix ex = e(AMatrix::from_element(x));
  Complex want = x.blocks[0].trace() / 3.0;
  EXPECT_LE((ex.at(0, 0) - AlgebraElement::central(s, {want})).norm(), 1e-10);
}

TEST(TraceExpectation, AxiomsOnRandomSubalgebra) {
  // Subalgebra phi(A) ⊂ M_2(A) with phi(a) = diag(a, a); check idempotence,
  // trace preservation, bimodule property and positivity.
  AlgebraShape s{{2, 1}};
  std::vector<AMatrix> span;
  for (int i = 0; i < 2; ++i)
    for (int r = 0; r < s.blocks[static_cast<size_t>(i)]; ++r)
      for (int c = 0; c < s.blocks[static_cast<size_t>(i)]; ++c) {
        AlgebraElement u = AlgebraElement::matrix_unit(s, i, r, c);
        AMatrix m(s, 2, 2);
        m.set(0, 0, u);
        m.set(1, 1, u);
        span.push_back(m);
      }
  std::vector<double> w = {1.0, 0.5};
  TraceExpectation e(span, AMatrix::identity(s, 2), w);
  Rng rng(109);
  for (int t = 0; t < 10; ++t) {
    AMatrix x = rng.matrix(s, 2, 2);
    AMatrix ex = e(x);
    EXPECT_LE((e(ex) - ex).norm(), 1e-9);
    EXPECT_LE(std::abs(weighted_trace(ex, w) - weighted_trace(x, w)), 1e-9);
    AMatrix pos = x.adjoint() * x;
    EXPECT_GE(e(pos).at(0, 0).min_eigenvalue(), -1e-9);
    const AMatrix& b = span[3];
    EXPECT_LE((e(b * x * b.adjoint()) - b * e(x) * b.adjoint()).norm(), 1e-8);
  }
}

TEST(TraceExpectation, RejectsNonSubalgebra) {
  AlgebraShape s{{2}};
  // span{E_12} is not *-closed.
  std::vector<AMatrix> span = {AMatrix::from_element(AlgebraElement::matrix_unit(s, 0, 0, 1))};
  EXPECT_THROW(
      {
        try {
          TraceExpectation e(span, AMatrix::identity(s, 1), {1.0});
        } catch (const Error& err) {
          EXPECT_EQ(err.code(), "NotSubalgebra");
          throw;
        }
      },
      Error);
}

TEST(IdealMask, Bookkeeping) {
  IdealMask j = IdealMask::none(4).add(1).add(3);
  EXPECT_EQ(j.count(), 2);
  EXPECT_EQ(j.members(), (std::vector<int>{1, 3}));
  EXPECT_EQ(j.complement(), (std::vector<int>{0, 2}));
  EXPECT_TRUE(IdealMask::all(4).full());
}

}  // namespace
