#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace mrcs {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Error taxonomy. Callers (the CLI in particular) map these onto exit codes.
struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Residual matrix (or one of its columns) is identically zero, so the
/// covariance block has no minimizer.
struct DegenerateResidual : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Requested operation is outside the regime where it is defined
/// (e.g. OLS-based adaptive weights with n <= p + q).
struct UnsupportedRegime : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidPlan : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/**
 * Predictors and responses for one fit.
 *
 * When `centered` is true, X and Y hold column-centered values and
 * `x_means` / `y_means` are the column means of the raw inputs. Solvers
 * work on the centered arrays and recover the intercept afterwards.
 */
struct Dataset {
  Matrix X;
  Matrix Y;
  Vector x_means;
  Vector y_means;
  bool centered = false;

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index p() const { return X.cols(); }
  Eigen::Index q() const { return Y.cols(); }

  /// Centers copies of X and Y on their column means.
  static Dataset centered_from(const Matrix& X, const Matrix& Y);
  /// Wraps X and Y as-is (means are zero, centered=false).
  static Dataset raw(const Matrix& X, const Matrix& Y);

  /// Subset of rows, re-centered on the subset's own means.
  Dataset subset_centered(const std::vector<Eigen::Index>& rows) const;

  /// Raw (uncentered) values of X, reconstructed from the stored means.
  Matrix raw_X() const;
  Matrix raw_Y() const;
};

/// Compound symmetry: Sigma = eta2 * ((1 - theta) I + theta 11').
struct CsParams {
  double eta2 = 1.0;
  double theta = 0.0;

  void validate() const;
};

/// General equicorrelation: Sigma = diag(etas) ((1 - theta) I + theta 11') diag(etas).
struct GenEqParams {
  Vector etas;
  double theta = 0.0;

  void validate() const;
};

using CovParams = std::variant<CsParams, GenEqParams>;

struct PenaltySpec {
  double lambda = 0.0;
  /// p x q adaptive weights w_jk; absent means w_jk = 1.
  std::optional<Matrix> weights;

  void validate(Eigen::Index p, Eigen::Index q) const;
  double weight(Eigen::Index j, Eigen::Index k) const {
    return weights ? (*weights)(j, k) : 1.0;
  }
  /// lambda * sum_jk w_jk |B_jk|
  double value(const Matrix& B) const;
};

struct FitResult {
  Matrix B;
  Vector intercept;
  CovParams cov = CsParams{};
  double lambda = 0.0;
  std::vector<double> objective_trace;
  int outer_iters = 0;
  bool converged = false;
};

/// Intercept consistent with the centering convention: ybar - B' xbar.
Vector intercept_for(const Dataset& data, const Matrix& B);

void require_finite(const Matrix& M, const char* what);

}  // namespace mrcs
