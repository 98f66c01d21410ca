#pragma once

// Seeded generators for algebra elements, projections and unitaries over A.
// Every randomized report records the seed that produced it, so all
// randomness flows through an explicitly seeded Rng.

#include <random>

#include "hilbim/mmalg.hpp"

namespace hilbim {

class Rng {
public:
  explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

  std::uint64_t seed() const { return seed_; }

  double real(double lo = -1.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(gen_);
  }
  int integer(int lo, int hi) {  // inclusive bounds
    return std::uniform_int_distribution<int>(lo, hi)(gen_);
  }
  Complex gaussian() {
    std::normal_distribution<double> n(0.0, 1.0);
    return Complex(n(gen_), n(gen_));
  }

  CMat ginibre(int r, int c) {
    CMat m(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) m(i, j) = gaussian();
    return m;
  }
  // Haar-ish unitary via QR of a Ginibre matrix.
  CMat unitary(int n) {
    Eigen::HouseholderQR<CMat> qr(ginibre(n, n));
    CMat q = qr.householderQ();
    CMat r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < n; ++j) {
      Complex d = r(j, j);
      q.col(j) *= (std::abs(d) > 0) ? d / std::abs(d) : 1.0;
    }
    return q;
  }
  // Rank-r orthogonal projection in M_n.
  CMat projection(int n, int rank) {
    CMat u = unitary(n);
    CMat p = CMat::Zero(n, n);
    for (int j = 0; j < rank; ++j) p += u.col(j) * u.col(j).adjoint();
    return p;
  }

  AlgebraElement element(const AlgebraShape& s) {
    AlgebraElement a(s);
    for (size_t i = 0; i < a.blocks.size(); ++i) a.blocks[i] = ginibre(s.blocks[i], s.blocks[i]);
    return a;
  }
  AlgebraElement hermitian_element(const AlgebraShape& s) {
    AlgebraElement a = element(s);
    return 0.5 * (a + a.adjoint());
  }
  AMatrix matrix(const AlgebraShape& s, int r, int c) {
    AMatrix m(s, r, c);
    for (size_t i = 0; i < m.blk.size(); ++i) m.blk[i] = ginibre(r * s.blocks[i], c * s.blocks[i]);
    return m;
  }
  AMatrix unitary_matrix(const AlgebraShape& s, int n) {
    AMatrix m(s, n, n);
    for (size_t i = 0; i < m.blk.size(); ++i) m.blk[i] = unitary(n * s.blocks[i]);
    return m;
  }
  // Projection in M_n(A) with a random rank per block (at least min_rank).
  AMatrix projection_matrix(const AlgebraShape& s, int n, int min_rank = 1) {
    AMatrix m(s, n, n);
    for (size_t i = 0; i < m.blk.size(); ++i) {
      int d = n * s.blocks[i];
      m.blk[i] = projection(d, integer(std::min(min_rank, d), d));
    }
    return m;
  }
  AlgebraShape shape(int max_blocks = 2, int max_size = 3) {
    AlgebraShape s;
    int d = integer(1, max_blocks);
    for (int i = 0; i < d; ++i) s.blocks.push_back(integer(1, max_size));
    return s;
  }

private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
};

}  // namespace hilbim
