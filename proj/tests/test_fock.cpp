#include "hilbim/fock.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "common.hpp"
#include "hilbim/freeness.hpp"
#include "hilbim/index_theory.hpp"

using namespace hilbim;

namespace {

AlgebraShape shape(std::vector<int> blocks) {
  AlgebraShape s;
  s.blocks = std::move(blocks);
  return s;
}

BimodulePtr cuntz_bimodule(int n) { return multiplicity_bimodule(shape({1}), {{n}}); }

BimodulePtr trivial_bimodule() { return multiplicity_bimodule(shape({1}), {{1}}); }

// Two-block module shaped like the worked split example: a fixed vertex and
// a vertex with a doubled loop.
BimodulePtr split_graph_bimodule() {
  return multiplicity_bimodule(shape({1, 1}), {{1, 0}, {0, 2}});
}

AMatrix canonical_r(const BimodulePtr& b, int n) {
  AMatrix r = AMatrix::zero(b->shape(), n * n, 1);
  for (int i = 0; i < n; ++i) r.blk[0](i * n + i, 0) = 1.0;
  return r;
}

// Lift a level-m coordinate column into the Fock ambient.
ModuleVector embed_vector(const FockPtr& f, int level, const AMatrix& coords) {
  AMatrix big = AMatrix::zero(f->base->shape(), f->total, 1);
  for (size_t i = 0; i < big.blk.size(); ++i) {
    int nb = f->base->shape().blocks[i];
    big.blk[i].block(f->offsets[static_cast<size_t>(level)] * nb, 0,
                     f->ambients[static_cast<size_t>(level)] * nb, nb) = coords.blk[i];
  }
  return ModuleVector(f->space, big);
}

ModuleVector vacuum(const FockPtr& f) {
  return embed_vector(f, 0, AMatrix::identity(f->base->shape(), 1));
}

GradedOperator action_of(const BimodulePtr& b, const AlgebraElement& a) {
  return GradedOperator{b, 0, 0, AMatrix::from_element(a), ""};
}

}  // namespace

TEST(FockTest, SpaceLayoutAndGuards) {
  auto b = cuntz_bimodule(2);
  FockPtr f = truncated_fock(b, 4);
  EXPECT_EQ(f->total, 31);
  EXPECT_EQ(f->space->k, 31);
  ASSERT_EQ(f->offsets.size(), 5u);
  EXPECT_EQ(f->offsets[3], 7);
  EXPECT_EQ(f->ambients[4], 16);
  EXPECT_EQ(f->space->complex_dim(), 31);

  // orthogonal level decomposition
  Rng rng(900);
  ModuleVector x1 = testutil::random_vector(rng, b->level(1).module);
  ModuleVector x2 = testutil::random_vector(rng, b->level(2).module);
  ModuleVector e1 = embed_vector(f, 1, x1.coords);
  ModuleVector e2 = embed_vector(f, 2, x2.coords);
  EXPECT_EQ(inner(e1, e2).norm(), 0.0);
  EXPECT_NEAR(inner(e1, e1).norm(), inner(x1, x1).norm(), 1e-13);

  try {
    truncated_fock(b, -1);
    FAIL() << "expected BadLevel";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "BadLevel");
  }
  try {
    truncated_fock(b, 4, 10);
    FAIL() << "expected FockTooLarge";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "FockTooLarge");
  }
}

TEST(FockTest, CreationActsAsToeplitz) {
  auto b = cuntz_bimodule(2);
  FockPtr f = truncated_fock(b, 3);
  Rng rng(901);

  ModuleVector x = testutil::random_vector(rng, b->x);
  FockOperator tx = creation(f, x);

  // T_x(1) = x at level 1
  ModuleVector out = tx.op(vacuum(f));
  EXPECT_LT((out.coords - embed_vector(f, 1, x.coords).coords).norm(), 1e-13);

  // degree support is exactly {+1} and the top level is annihilated
  auto supp = degree_support(tx);
  ASSERT_EQ(supp.size(), 1u);
  EXPECT_EQ(supp[0], 1);
  EXPECT_LT((tx * level_projection(f, 3)).norm(), 1e-14);

  // tensor inner product oracle: (x⊗ξ | x⊗ξ) = (ξ | φ(x|x) ξ)
  ModuleVector xi = testutil::random_vector(rng, b->level(2).module);
  ModuleVector lifted = tx.op(embed_vector(f, 2, xi.coords));
  AlgebraElement lhs = inner(lifted, lifted);
  ModuleVector acted(b->level(2).module, b->level(2).phi.apply(inner(x, x)) * xi.coords);
  AlgebraElement rhs = inner(xi, acted);
  EXPECT_LT((lhs - rhs).norm(), 1e-12);

  // ‖T_x‖ = ‖x‖ (the level-0 slot of T* T realizes the full norm)
  for (int t = 0; t < 6; ++t) {
    ModuleVector z = testutil::random_vector(rng, b->x);
    EXPECT_NEAR(creation(f, z).norm(), vec_norm(z), 1e-10);
  }

  // T_{x a} = T_x ∘ ρ(a) on the whole truncated space
  AlgebraElement a = rng.element(b->shape());
  FockOperator lhs_op = creation(f, x.acted(a));
  FockOperator rhs_op = tx * fock_action(f, a);
  EXPECT_LT((lhs_op - rhs_op).norm(), 1e-12);
}

TEST(FockTest, TrivialModuleIsTruncatedShift) {
  auto b = trivial_bimodule();
  FockPtr f = truncated_fock(b, 4);
  ModuleVector one(b->x, AMatrix::identity(b->shape(), 1));
  FockOperator t1 = creation(f, one);
  FockOperator id = fock_identity(f);
  FockOperator p0 = level_projection(f, 0);
  FockOperator pn = level_projection(f, 4);

  // the truncated shift: T*T = 1 − P_N, TT* = 1 − P_0
  EXPECT_LT((t1.adjoint() * t1 - (id - pn)).norm(), 1e-14);
  EXPECT_LT((t1 * t1.adjoint() - (id - p0)).norm(), 1e-14);

  FockRelationReport rep = relation_residuals(f, one, one);
  EXPECT_LT(rep.toeplitz_below_cut, 1e-13);
  EXPECT_NEAR(rep.toeplitz_top_defect, 1.0, 1e-13);
  EXPECT_LT(rep.covering_residual, 1e-13);
  EXPECT_LT(rep.covering_top_defect, 1e-13);
  EXPECT_NEAR(rep.bottom_defect, 1.0, 1e-13);
  EXPECT_LT(rep.cross_relation, 1e-13);
}

TEST(FockTest, RelationResidualsBelowTheCut) {
  struct Case {
    BimodulePtr b;
    int n;
  };
  std::vector<Case> cases = {{cuntz_bimodule(2), 4}, {cuntz_bimodule(3), 3},
                             {split_graph_bimodule(), 3}};
  Rng rng(902);
  for (const auto& c : cases) {
    FockPtr f = truncated_fock(c.b, c.n);
    for (int t = 0; t < 6; ++t) {
      ModuleVector x = testutil::random_vector(rng, c.b->x);
      ModuleVector y = testutil::random_vector(rng, c.b->x);
      FockRelationReport rep = relation_residuals(f, x, y);
      EXPECT_LT(rep.toeplitz_below_cut, 1e-10);
      EXPECT_LT(rep.covering_residual, 1e-10);
      EXPECT_LT(rep.covering_top_defect, 1e-10);
      EXPECT_LT(rep.cross_relation, 1e-10);
      EXPECT_NEAR(rep.bottom_defect, 1.0, 1e-12);
      // φ_N is an injective *-homomorphism, hence isometric: the top defect
      // of the Toeplitz relation is exactly ‖(x|y)‖
      EXPECT_NEAR(rep.toeplitz_top_defect, inner(x, y).norm(), 1e-9);
    }
  }
}

TEST(FockTest, GaugeActionScalesDegrees) {
  auto b = cuntz_bimodule(2);
  FockPtr f = truncated_fock(b, 4);
  Rng rng(903);

  EXPECT_LT((gauge(f, 1.0) - fock_identity(f)).norm(), 1e-14);

  double th1 = rng.real(0.0, 6.28), th2 = rng.real(0.0, 6.28);
  Complex t1(std::cos(th1), std::sin(th1));
  Complex t2(std::cos(th2), std::sin(th2));
  EXPECT_LT((gauge(f, t1) * gauge(f, t2) - gauge(f, t1 * t2)).norm(), 1e-13);
  EXPECT_LT((gauge(f, t1) * gauge(f, t1).adjoint() - fock_identity(f)).norm(), 1e-13);

  // conjugating a creation operator scales it by exactly t
  ModuleVector x = testutil::random_vector(rng, b->x);
  ModuleVector y = testutil::random_vector(rng, b->x);
  FockOperator tx = creation(f, x);
  FockOperator u = gauge(f, t1);
  EXPECT_LT((u * tx * u.adjoint() - t1 * tx).norm(), 1e-12);

  // every degree block of a mixed operator picks up exactly t^k
  FockOperator mixed = tx * creation(f, y) + fock_action(f, rng.element(b->shape())) +
                       creation(f, y).adjoint();
  FockOperator conj = u * mixed * u.adjoint();
  for (int d = -4; d <= 4; ++d) {
    Complex scale = std::pow(t1, d);
    EXPECT_LT((degree_component(conj, d) - scale * degree_component(mixed, d)).norm(), 1e-12)
        << "degree " << d;
  }
}

TEST(FockTest, DegreeAverageEqualsBlockExtraction) {
  auto b = cuntz_bimodule(2);
  FockPtr f = truncated_fock(b, 4);
  Rng rng(904);

  // degree-0 input is a fixed point
  FockOperator rho = fock_action(f, rng.element(b->shape()));
  EXPECT_LT((degree_average(f, rho, 0) - rho).norm(), 1e-13);

  // a creation operator averages to zero
  ModuleVector x = testutil::random_vector(rng, b->x);
  EXPECT_LT(degree_average(f, creation(f, x), 1).norm(), 1e-13);

  // random polynomial with degrees in [−3, 3]: the 7-point average equals
  // the degree-0 extraction
  ModuleVector y = testutil::random_vector(rng, b->x);
  ModuleVector z = testutil::random_vector(rng, b->x);
  FockOperator poly = creation(f, x) * creation(f, y) * creation(f, z) +
                      creation(f, y) * fock_action(f, rng.element(b->shape())) +
                      creation(f, z).adjoint() + fock_action(f, rng.element(b->shape()));
  FockOperator avg = degree_average(f, poly, 3);
  EXPECT_LT((avg - degree_component(poly, 0)).norm(), 1e-12);

  // the average of unitary conjugates never gains norm
  for (int t = 0; t < 20; ++t) {
    FockOperator raw{f, ModuleOperator::compress(f->space, f->space,
                                                 rng.matrix(b->shape(), f->total, f->total))};
    FockOperator bounded = fock_zero(f);
    for (int d = -2; d <= 2; ++d) bounded = bounded + degree_component(raw, d);
    EXPECT_LE(degree_average(f, bounded, 2).norm(), bounded.norm() + 1e-9);
  }

  // support beyond the declared bound is rejected, not aliased
  try {
    degree_average(f, creation(f, x) * creation(f, y), 1);
    FAIL() << "expected DegreeOverflow";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "DegreeOverflow");
  }
  try {
    degree_average(f, rho, -1);
    FAIL() << "expected BadLevel";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "BadLevel");
  }
}

TEST(FockTest, NormsNondecreasingInTruncationLevel) {
  auto b = cuntz_bimodule(2);
  Rng rng(905);
  ModuleVector x = testutil::random_vector(rng, b->x);
  ModuleVector y = testutil::random_vector(rng, b->x);
  std::map<int, GradedOperator> coeffs;
  coeffs.emplace(1, creation(b, x, 0));
  coeffs.emplace(0, action_of(b, rng.element(b->shape())));
  coeffs.emplace(-1, creation(b, y, 0).adjoint());

  double prev = 0.0;
  for (int n = 2; n <= 5; ++n) {
    FockPtr f = truncated_fock(b, n);
    FockOperator sum = fock_zero(f);
    for (const auto& [d, c] : coeffs) sum = sum + represent(f, c);
    double nrm = sum.norm();
    EXPECT_GE(nrm, prev - 1e-12) << "norm dropped at N = " << n;
    prev = nrm;
  }
}

TEST(FockTest, GradedInequalityReport) {
  auto b = cuntz_bimodule(2);
  FockPtr f = truncated_fock(b, 4);
  Rng rng(906);

  // pure degree-0 sum: the average is the identity map on it
  std::map<int, GradedOperator> only0;
  only0.emplace(0, action_of(b, rng.element(b->shape())));
  GradedNormReport r0 = graded_inequality_check(f, only0);
  EXPECT_NEAR(r0.norm_averaged, r0.norm_total, 1e-12);
  EXPECT_TRUE(r0.inequality_holds);

  // B = 1 + T_x: the average keeps exactly the unit
  ModuleVector x = testutil::random_vector(rng, b->x);
  std::map<int, GradedOperator> unitplus;
  unitplus.emplace(0, graded_identity(b, 0));
  unitplus.emplace(1, creation(b, x, 0));
  GradedNormReport r1 = graded_inequality_check(f, unitplus);
  EXPECT_NEAR(r1.norm_averaged, 1.0, 1e-10);
  EXPECT_TRUE(r1.inequality_holds);
  EXPECT_GE(r1.norm_total, 1.0 - 1e-12);

  // mismatched degree key is rejected
  std::map<int, GradedOperator> bad;
  bad.emplace(2, creation(b, x, 0));
  try {
    graded_inequality_check(f, bad);
    FAIL() << "expected DegreeMismatch";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "DegreeMismatch");
  }

  // coefficients above the truncation are rejected
  GradedOperator tall = creation(b, x, 0);
  for (int j = 0; j < 4; ++j) tall = graded_compose(creation(b, x, 0), tall);
  std::map<int, GradedOperator> over;
  over.emplace(5, tall);
  try {
    graded_inequality_check(f, over);
    FAIL() << "expected DegreeOverflow";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "DegreeOverflow");
  }
}

TEST(FockTest, WitnessConjugationContractsOffDiagonals) {
  auto b = cuntz_bimodule(2);
  FockPtr f = truncated_fock(b, 4);
  Rng rng(907);
  ConjugateDatum d = make_conjugate(b, canonical_r(b, 2), +1);
  Witness w = real_witness(b, d, 1);

  ModuleVector x = testutil::random_vector(rng, b->x);
  ModuleVector y = testutil::random_vector(rng, b->x);
  std::map<int, GradedOperator> coeffs;
  coeffs.emplace(1, creation(b, x, 0));
  coeffs.emplace(0, action_of(b, rng.element(b->shape())));
  coeffs.emplace(-1, creation(b, y, 0).adjoint());

  GradedNormReport rep = graded_inequality_check(f, coeffs, &w.op, 2);
  EXPECT_NEAR(rep.contraction_bound, 0.5, 1e-9);
  EXPECT_TRUE(rep.inequality_holds);
  ASSERT_EQ(rep.offdiagonal_norms.size(), 3u);
  ASSERT_EQ(rep.conjugated_norms.size(), 2u);
  for (size_t p = 1; p < rep.offdiagonal_norms.size(); ++p) {
    EXPECT_LE(rep.offdiagonal_norms[p],
              (rep.contraction_bound + 1e-6) * rep.offdiagonal_norms[p - 1])
        << "round " << p;
  }
  for (double nrm : rep.conjugated_norms) EXPECT_LE(nrm, rep.norm_total + 1e-9);
}

TEST(FockTest, GaugeAverageRealizesExpectationToBase) {
  // E = E_0 ∘ m_0 on graded formal sums: the circle average keeps the
  // degree-0 coefficient, and the chain expectation takes it to A.
  auto b = cuntz_bimodule(2);
  FockPtr f = truncated_fock(b, 4);
  Rng rng(908);
  FiniteTypeStructure fts = finite_type_structure(b);

  ModuleVector x = testutil::random_vector(rng, b->x);
  ModuleVector y = testutil::random_vector(rng, b->x);
  ModuleVector z = testutil::random_vector(rng, b->x);
  GradedOperator b0{b, 1, 1, x.coords * y.coords.adjoint(), ""};  // θ_{x,y} at level 1
  std::map<int, GradedOperator> coeffs;
  coeffs.emplace(0, b0);
  coeffs.emplace(1, creation(b, z, 0));

  // m_0 on the represented sum keeps exactly the degree-0 coefficient
  FockOperator sum = fock_zero(f);
  for (const auto& [deg, c] : coeffs) sum = sum + represent(f, c);
  FockOperator averaged = degree_average(f, sum, 1);
  EXPECT_LT((averaged - represent(f, b0)).norm(), 1e-12);

  // E_0 takes the degree-0 coefficient to A; on the full module over C the
  // value is half of (y|x)
  AlgebraElement e = expectation_to_base(b, fts, b0);
  AlgebraElement oracle = 0.5 * inner(y, x);
  EXPECT_LT((e - oracle).norm(), 1e-10);

  // the composite is idempotent: averaging the A-level representative
  // changes nothing and E_0 fixes it
  GradedOperator back = action_of(b, e);
  AlgebraElement again = expectation_to_base(b, fts, back);
  EXPECT_LT((again - e).norm(), 1e-12);
}
