#pragma once

#include "mrcs/types.hpp"

namespace mrcs {

/// Upper end of the admissible theta range used by the estimators.
inline constexpr double kThetaUpper = 1.0 - 1e-6;

struct ResidualSummary {
  double M1 = 0.0;  ///< (1/n) ||R||_F^2
  double M2 = 0.0;  ///< (1/n) ||R 1_q||^2
  Eigen::Index n = 0;
  Eigen::Index q = 0;
};

ResidualSummary summarize_residuals(const Matrix& R);

/// Maps (alpha, gamma) = (eta2 (1-theta), eta2 (1 + (q-1) theta)) back to
/// (eta2, theta).
CsParams cs_from_alpha_gamma(double alpha, double gamma, Eigen::Index q);

/**
 * Exact minimizer of the compound-symmetry covariance block at fixed B.
 *
 * In the (alpha, gamma) parametrization the block separates into
 * (M1 - M2/q)/alpha + (q-1) log alpha and M2/(q gamma) + log gamma subject
 * to alpha <= gamma. The interior solution is
 *   alpha = (q M1 - M2) / (q (q-1)),  gamma = M2 / q,
 * and when that violates alpha <= gamma (M2 < M1) the constrained optimum
 * sits on theta = 0 with eta2 = M1 / q. alpha is floored at
 * 1e-10 max(M1, eps) for collinear residual columns and theta is capped at
 * kThetaUpper.
 *
 * Throws DegenerateResidual if R is identically zero; InvalidInput if q < 2.
 */
CsParams update_cs(const Matrix& R);

/// Unique positive root of dg_j/d eta_j = 0 for the general equicorrelation
/// objective with all other parameters fixed.
double update_eta_j(const Matrix& R, const Vector& etas, double theta,
                    Eigen::Index j);

/// Objective minimized over theta by update_theta_line_search.
double theta_objective(const Matrix& R, const Vector& etas, double theta);

/// Minimizes theta_objective over [0, kThetaUpper]: 101-point grid to
/// bracket, then golden-section search to absolute tolerance 1e-8.
double update_theta_line_search(const Matrix& R, const Vector& etas);

/// (1/n) tr[R'R Omega] + log|Sigma| for fixed residuals; the covariance
/// block of the penalized objective.
double covariance_block_objective(const Matrix& R, const CovParams& params);

}  // namespace mrcs
