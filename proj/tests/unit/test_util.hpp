#pragma once

#include "mrcs/rng.hpp"
#include "mrcs/types.hpp"

namespace mrcs::test {

inline Matrix gaussian(Eigen::Index rows, Eigen::Index cols, CounterRng& rng) {
  Matrix M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) M(i, j) = rng.normal();
  }
  return M;
}

inline Matrix random_spd(Eigen::Index q, CounterRng& rng) {
  const Matrix A = gaussian(q, q, rng);
  return A * A.transpose() / static_cast<double>(q) +
         0.5 * Matrix::Identity(q, q);
}

inline double uniform(double lo, double hi, CounterRng& rng) {
  return lo + (hi - lo) * rng.uniform();
}

inline int uniform_int(int lo, int hi, CounterRng& rng) {
  return lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
}

// Centered regression data with a sparse truth and correlated noise.
inline Dataset random_dataset(Eigen::Index n, Eigen::Index p, Eigen::Index q,
                              CounterRng& rng, double noise = 1.0) {
  const Matrix X = gaussian(n, p, rng);
  Matrix B = gaussian(p, q, rng);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index k = 0; k < q; ++k) {
      if (rng.bernoulli(0.5)) B(j, k) = 0.0;
    }
  }
  const Matrix common = gaussian(n, 1, rng);
  Matrix E = gaussian(n, q, rng);
  E.colwise() += common.col(0);
  return Dataset::centered_from(X, X * B + noise * E);
}

// tr[R'R Omega] with Omega formed densely.
inline double dense_trace(const Matrix& R, const Matrix& omega) {
  return (R.transpose() * R * omega).trace();
}

inline double dense_logdet(const Matrix& S) {
  Eigen::LLT<Matrix> llt(S);
  const Matrix L = llt.matrixL();
  return 2.0 * L.diagonal().array().log().sum();
}

}  // namespace mrcs::test
