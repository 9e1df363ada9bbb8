#include "mrcs/types.hpp"

#include <cmath>

namespace mrcs {

namespace {

void check_shapes(const Matrix& X, const Matrix& Y) {
  if (X.rows() != Y.rows()) {
    throw InvalidInput("X and Y must have the same number of rows (" +
                       std::to_string(X.rows()) + " vs " +
                       std::to_string(Y.rows()) + ")");
  }
  if (X.rows() < 2) throw InvalidInput("need at least 2 observations");
  if (Y.cols() < 1) throw InvalidInput("need at least 1 response");
  require_finite(X, "X");
  require_finite(Y, "Y");
}

}  // namespace

void require_finite(const Matrix& M, const char* what) {
  if (!M.allFinite()) {
    throw InvalidInput(std::string(what) + " contains non-finite entries");
  }
}

Dataset Dataset::centered_from(const Matrix& X, const Matrix& Y) {
  check_shapes(X, Y);
  Dataset d;
  d.x_means = X.colwise().mean().transpose();
  d.y_means = Y.colwise().mean().transpose();
  d.X = X.rowwise() - d.x_means.transpose();
  d.Y = Y.rowwise() - d.y_means.transpose();
  d.centered = true;
  return d;
}

Dataset Dataset::raw(const Matrix& X, const Matrix& Y) {
  check_shapes(X, Y);
  Dataset d;
  d.X = X;
  d.Y = Y;
  d.x_means = Vector::Zero(X.cols());
  d.y_means = Vector::Zero(Y.cols());
  d.centered = false;
  return d;
}

Matrix Dataset::raw_X() const { return X.rowwise() + x_means.transpose(); }
Matrix Dataset::raw_Y() const { return Y.rowwise() + y_means.transpose(); }

Dataset Dataset::subset_centered(const std::vector<Eigen::Index>& rows) const {
  Matrix Xs(static_cast<Eigen::Index>(rows.size()), p());
  Matrix Ys(static_cast<Eigen::Index>(rows.size()), q());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = rows[i];
    Xs.row(static_cast<Eigen::Index>(i)) = X.row(r) + x_means.transpose();
    Ys.row(static_cast<Eigen::Index>(i)) = Y.row(r) + y_means.transpose();
  }
  return centered_from(Xs, Ys);
}

void CsParams::validate() const {
  if (!(eta2 > 0.0) || !std::isfinite(eta2)) {
    throw InvalidInput("eta2 must be positive and finite");
  }
  if (!(theta >= 0.0 && theta < 1.0)) {
    throw InvalidInput("theta must lie in [0, 1)");
  }
}

void GenEqParams::validate() const {
  if (etas.size() == 0) throw InvalidInput("etas must be non-empty");
  for (Eigen::Index j = 0; j < etas.size(); ++j) {
    if (!(etas[j] > 0.0) || !std::isfinite(etas[j])) {
      throw InvalidInput("every eta_j must be positive and finite");
    }
  }
  if (!(theta >= 0.0 && theta < 1.0)) {
    throw InvalidInput("theta must lie in [0, 1)");
  }
}

void PenaltySpec::validate(Eigen::Index p, Eigen::Index q) const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw InvalidInput("lambda must be finite and nonnegative");
  }
  if (weights) {
    if (weights->rows() != p || weights->cols() != q) {
      throw InvalidInput("penalty weights must be p x q");
    }
    if (!weights->allFinite() || (weights->array() < 0.0).any()) {
      throw InvalidInput("penalty weights must be finite and nonnegative");
    }
  }
}

double PenaltySpec::value(const Matrix& B) const {
  if (lambda == 0.0) return 0.0;
  if (weights) return lambda * (weights->array() * B.array().abs()).sum();
  return lambda * B.array().abs().sum();
}

Vector intercept_for(const Dataset& data, const Matrix& B) {
  return data.y_means - B.transpose() * data.x_means;
}

}  // namespace mrcs
