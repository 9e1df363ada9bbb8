#pragma once

#include "mrcs/types.hpp"

namespace mrcs {

/// Lower bound applied to 1 - theta inside every kernel.
inline constexpr double kOneMinusThetaFloor = 1e-6;

/**
 * tr[R' R Omega(eta2, theta)] without forming Omega:
 *
 *   ||R||_F^2 / (eta2 (1-theta)) - theta ||R 1||^2 / (eta2 (1-theta)(1+(q-1)theta))
 *
 * Cost O(nq). No 1/n factor.
 */
double structured_trace(const Matrix& R, const CsParams& params);

/// Same trace for the general equicorrelation precision. Columns of R are
/// scaled by 1/eta_j and the compound-symmetry formula applied with eta2 = 1.
double structured_trace_gen(const Matrix& R, const GenEqParams& params);

double structured_trace(const Matrix& R, const CovParams& params);

/// log|Sigma| in closed form.
double logdet_sigma(const CsParams& params, Eigen::Index q);
double logdet_sigma(const GenEqParams& params);
double logdet_sigma(const CovParams& params, Eigen::Index q);

/// Dense Omega = Sigma^{-1} (q x q, symmetric positive definite).
Matrix precision_dense(const CsParams& params, Eigen::Index q);
Matrix precision_dense(const GenEqParams& params);
Matrix precision_dense(const CovParams& params, Eigen::Index q);

/// Omega = diag(diag) - beta v v'. Every equicorrelation precision has this
/// form, which lets the B-step minimize over a whole row of B exactly.
struct StructuredPrecision {
  Vector diag;
  double beta = 0.0;
  Vector v;

  /// diag > 0, beta >= 0 and beta v' diag^{-1} v < 1 (positive definite).
  void validate() const;
  Matrix dense() const;
};

StructuredPrecision structured_precision(const CsParams& params, Eigen::Index q);
StructuredPrecision structured_precision(const GenEqParams& params);
StructuredPrecision structured_precision(const CovParams& params, Eigen::Index q);

/// Dense Sigma. Used by data generation and test oracles.
Matrix sigma_dense(const CsParams& params, Eigen::Index q);
Matrix sigma_dense(const GenEqParams& params);

/// (1/n) tr[(Y-XB)'(Y-XB) Omega] + log|Sigma|, i.e. L(B, Omega) of the
/// Gaussian model. The dataset is expected to be centered (or the intercept
/// otherwise absorbed).
double neg_loglik(const Dataset& data, const Matrix& B, const CovParams& params);

/// neg_loglik plus the (optionally weighted) L1 penalty.
double penalized_objective(const Dataset& data, const Matrix& B,
                           const CovParams& params, const PenaltySpec& penalty);

}  // namespace mrcs
