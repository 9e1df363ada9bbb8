#pragma once

#include <vector>

#include "mrcs/cv.hpp"
#include "mrcs/solvers.hpp"

namespace mrcs {

/// tr[m^{-1} (Y_k - X_k B)'(Y_k - X_k B) Omega(params)] with m the number of
/// rows in the fold. No log-determinant term.
double validation_loss(const Matrix& Y_k, const Matrix& X_k, const Matrix& B,
                       const CsParams& params);

struct CvResult {
  Method method = Method::mrcs;
  double lambda = 0.0;
  std::size_t index = 0;
  std::vector<double> grid;    ///< descending, deduplicated
  std::vector<double> scores;  ///< summed validation loss per grid entry
};

/**
 * K-fold selection of lambda for the equicorrelation methods and the oracle.
 *
 * For every held-out fold the remaining rows are re-centered, the
 * initializer is recomputed on them, and the held-out loss is weighted by
 * the one-step compound-symmetry estimate update_cs(Y_-k - X_-k B^(0)_-k)
 * regardless of the method (the oracle uses the true precision instead). Losses are
 * summed over folds; ties go to the larger lambda.
 */
CvResult cross_validate(const Dataset& data, Method method, const CvPlan& plan,
                        const SolverConfig& cfg,
                        const TruePrecision* truth = nullptr);

/// Several methods over the same folds; fold initializers are shared.
std::vector<CvResult> cross_validate(const Dataset& data,
                                     const std::vector<Method>& methods,
                                     const CvPlan& plan, const SolverConfig& cfg,
                                     const TruePrecision* truth = nullptr);

/// Held-out squared prediction error along the lambda grid, per response.
struct LassoCvScores {
  std::vector<double> grid;  ///< descending, deduplicated
  Matrix scores;             ///< grid.size() x q, summed over folds
};

LassoCvScores lasso_cv_scores(const Dataset& data, const CvPlan& plan,
                              const CdConfig& cd = {});
LassoCvScores ridge_cv_scores(const Dataset& data, const CvPlan& plan);

struct BaselineSelection {
  Method method = Method::lasso_comb;
  /// One entry for combined methods, q entries for separate ones.
  Vector lambdas;
  LassoCvScores table;
};

/// Selects lambda for lasso-comb, lasso-sep, ridge-comb or ridge-sep by
/// held-out squared prediction error (no Omega weighting).
BaselineSelection cv_baselines(const Dataset& data, Method method,
                               const CvPlan& plan, const CdConfig& cd = {});

/// Refits a baseline on the full data at the selected lambda(s). Lasso fits
/// follow the selection's grid down to the chosen value with warm starts.
Matrix fit_baseline(const Dataset& data, const BaselineSelection& selection,
                    const CdConfig& cd = {});

}  // namespace mrcs
