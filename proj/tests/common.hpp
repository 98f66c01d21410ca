#pragma once

// Shared helpers for the unit suites: independent norm oracle and random
// module factories.  The oracle deliberately takes a different numerical
// route (Jacobi SVD on the flattened blocks) from the library's
// eigensolver-based spectral norm.

#include <Eigen/SVD>

#include "hilbim/hmod.hpp"
#include "hilbim/random.hpp"

namespace hilbim::testutil {

inline double oracle_spectral_norm(const CMat& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMat> svd(m);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

inline double oracle_norm(const AMatrix& m) {
  double n = 0.0;
  for (const auto& b : m.blk) n = std::max(n, oracle_spectral_norm(b));
  return n;
}

inline HilbertModulePtr random_module(Rng& rng, const AlgebraShape& shape, int k) {
  return make_module(shape, k, rng.projection_matrix(shape, k));
}

inline ModuleVector random_vector(Rng& rng, const HilbertModulePtr& m) {
  return ModuleVector::project(m, rng.matrix(m->shape, m->k, 1));
}

}  // namespace hilbim::testutil
