#pragma once

#include <vector>

#include "mrcs/kernel.hpp"
#include "mrcs/types.hpp"

namespace mrcs {

struct CdConfig {
  double tol = 1e-7;
  int max_sweeps = 10000;
  bool active_set = true;

  void validate() const;
};

struct CdResult {
  Matrix B;
  int sweeps = 0;
  bool converged = false;
};

/// sign(z) * max(|z| - t, 0); exact ties |z| == t map to 0.
double soft_threshold(double z, double t);

/**
 * Minimizes tr[(1/n)(Y-XB)'(Y-XB) Omega] + lambda sum_jk w_jk |B_jk| by
 * cyclic coordinate descent, row-major over (j, k), starting from B0.
 *
 * With H_jk = (X'X)_jj Omega_kk / n and G = X'(Y-XB) Omega / n the
 * coordinate update is
 *
 *   B_jk <- soft_threshold(B_jk + G_jk / H_jk, lambda w_jk / (2 H_jk)).
 *
 * A full sweep is followed by sweeps over the nonzero set until those
 * settle, then another full sweep to confirm. Stops when the largest
 * coordinate change of a full sweep is below tol * max(1, max|B_jk|).
 * Predictors with zero variance keep a zero coefficient.
 *
 * Throws InvalidInput when Omega is not symmetric positive definite.
 */
CdResult solve_penalized_B(const Dataset& data, const Matrix& omega,
                           const PenaltySpec& penalty, const Matrix& B0,
                           const CdConfig& cfg = {});

/// Same problem for Omega = diag(d) - beta v v'. Each step minimizes over a
/// whole row of B exactly, so convergence does not degrade with the
/// conditioning of Omega (theta near 1). Sweeps, the active-set schedule and
/// the stopping rule are as above, with rows in place of single entries.
CdResult solve_penalized_B(const Dataset& data, const StructuredPrecision& omega,
                           const PenaltySpec& penalty, const Matrix& B0,
                           const CdConfig& cfg = {});

/// Largest violation of the subgradient optimality conditions at B.
double kkt_residual(const Dataset& data, const Matrix& omega,
                    const PenaltySpec& penalty, const Matrix& B);

/// Solves along a descending lambda grid with warm starts (Omega fixed).
/// Result i corresponds to grid[i]; the grid is processed in the order given.
std::vector<Matrix> lasso_path(const Dataset& data, const Matrix& omega,
                               const std::vector<double>& grid,
                               const Matrix& B0, const CdConfig& cfg = {});

/// Ordinary least squares on the (centered) data. Requires full column rank.
Matrix fit_ols(const Dataset& data);

inline constexpr double kAdaptiveWeightCap = 1e12;

/// w_jk = 1 / |B_ols_jk|^r, capped at kAdaptiveWeightCap. Requires n > p + q.
Matrix compute_adaptive_weights(const Dataset& data, double r,
                                double cap = kAdaptiveWeightCap);

enum class RidgeMode { combined, separate };

/// Per-response ridge (X'X + n lambda I)^{-1} X'Y_k with one lambda for all.
Matrix fit_ridge(const Dataset& data, double lambda);
/// Separate ridge: lambdas[k] used for response k.
Matrix fit_ridge(const Dataset& data, const Vector& lambdas);

}  // namespace mrcs
