#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mrcs/cv.hpp"
#include "mrcs/lasso.hpp"
#include "mrcs/types.hpp"

namespace mrcs {

enum class Method {
  mrcs,
  ap_mrcs,
  mrgcs,
  ap_mrgcs,
  oracle,
  lasso_comb,
  lasso_sep,
  ridge_comb,
  ridge_sep,
};

/// CLI spelling: "mrcs", "ap-mrcs", ..., "ridge-sep".
std::string to_string(Method m);
std::optional<Method> parse_method(const std::string& name);

/// Methods that need p < n (exact blockwise descent).
bool requires_low_dimension(Method m);
/// Methods tuned with the structured validation likelihood.
bool is_likelihood_method(Method m);

enum class Initializer { combined_lasso, separate_lasso, zero };

struct SolverConfig {
  double epsilon = 1e-7;  ///< outer stop: |dF| < epsilon tr(Y'Y)/n
  int max_outer = 500;
  double inner_tol = 1e-8;  ///< ap-mrgcs covariance loop, relative change
  int inner_max = 1000;
  Initializer initializer = Initializer::combined_lasso;
  CdConfig cd;
  /// Folds, grid and seed of the lasso cross-validation behind the initializer.
  CvPlan init_plan;

  void validate() const;
};

enum class InitMode { combined, separate };

/**
 * Lasso initializer B^(0). Combined mode picks one lambda for all responses
 * by K-fold CV on summed squared prediction error; separate mode picks one
 * lambda per response. The selected fit on the full data is returned.
 */
Matrix init_B(const Dataset& data, int K, const std::vector<double>& grid,
              InitMode mode, std::uint64_t seed);

/// Dispatches on cfg.initializer.
Matrix initial_B(const Dataset& data, const SolverConfig& cfg);

/// Algorithm 1 style blockwise descent: update_cs, then the penalized B step,
/// until the change in the penalized objective drops below
/// epsilon tr(Y'Y)/n. Refuses p >= n.
FitResult fit_mrcs(const Dataset& data, const PenaltySpec& penalty,
                   const SolverConfig& cfg, const Matrix& B_init);
FitResult fit_mrcs(const Dataset& data, double lambda, const SolverConfig& cfg);

/// One covariance update at B_init, then one penalized B step.
FitResult fit_ap_mrcs(const Dataset& data, const PenaltySpec& penalty,
                      const SolverConfig& cfg, const Matrix& B_init);
FitResult fit_ap_mrcs(const Dataset& data, double lambda, const SolverConfig& cfg);

/// General equicorrelation: one cyclic pass over eta_1..eta_q (freshest
/// values), one theta line search, then the B step; repeated. Refuses p >= n.
FitResult fit_mrgcs(const Dataset& data, const PenaltySpec& penalty,
                    const SolverConfig& cfg, const Matrix& B_init);
FitResult fit_mrgcs(const Dataset& data, double lambda, const SolverConfig& cfg);

/// Covariance cycles at B_init to inner convergence, then one B step.
FitResult fit_ap_mrgcs(const Dataset& data, const PenaltySpec& penalty,
                       const SolverConfig& cfg, const Matrix& B_init);
FitResult fit_ap_mrgcs(const Dataset& data, double lambda, const SolverConfig& cfg);

/// The true error precision handed to the oracle. `params` is set when it
/// belongs to an equicorrelation family, which enables the row-wise solver.
struct TruePrecision {
  Matrix omega;
  std::optional<CovParams> params;

  static TruePrecision from_sigma(const Matrix& sigma);
  static TruePrecision from_params(const CovParams& params, Eigen::Index q);
};

/// Penalized B step with the true precision supplied.
Matrix fit_oracle(const Dataset& data, double lambda, const TruePrecision& truth,
                  const Matrix& B0, const CdConfig& cd = {});
Matrix fit_oracle(const Dataset& data, double lambda, const Matrix& omega_true,
                  const Matrix& B0, const CdConfig& cd = {});
Matrix fit_oracle(const Dataset& data, double lambda, const Matrix& omega_true);

/// Fits one of the four equicorrelation methods or the oracle at a fixed
/// lambda from a given initializer. Baselines are not handled here.
FitResult fit_likelihood_method(Method method, const Dataset& data, double lambda,
                                const SolverConfig& cfg, const Matrix& B_init,
                                const TruePrecision* truth = nullptr);

}  // namespace mrcs
