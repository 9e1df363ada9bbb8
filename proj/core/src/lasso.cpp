#include "mrcs/lasso.hpp"

#include <algorithm>
#include <cmath>

namespace mrcs {

namespace {

void require_spd(const Matrix& omega, Eigen::Index q) {
  if (omega.rows() != q || omega.cols() != q) {
    throw InvalidInput("Omega must be q x q");
  }
  require_finite(omega, "Omega");
  const double scale = std::max(1.0, omega.cwiseAbs().maxCoeff());
  if ((omega - omega.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw InvalidInput("Omega must be symmetric");
  }
  Eigen::LLT<Matrix> llt(omega);
  if (llt.info() != Eigen::Success) {
    throw InvalidInput("Omega must be positive definite");
  }
}

bool is_diagonal(const Matrix& m) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      if (r != c && m(r, c) != 0.0) return false;
    }
  }
  return true;
}

// Coordinate descent state. `resid_t` holds (X'Y - X'X B)' so that the
// gradient for response k and predictor j is a contiguous dot product.
//
// With a general Omega the updates are scalar, one (j, k) at a time. With
// Omega = diag(d) - beta v v' a whole row of B is minimized exactly: the
// row problem's stationarity conditions give b_k as a soft-thresholded
// function of the scalar m = v'b, and m solves a strictly decreasing
// piecewise-linear equation.
class CoordinateDescent {
 public:
  CoordinateDescent(const Dataset& data, const Matrix* omega,
                    const StructuredPrecision* structured,
                    const PenaltySpec& penalty, const Matrix& B0)
      : omega_(omega),
        structured_(structured),
        penalty_(penalty),
        gram_(data.X.transpose() * data.X),
        B_(B0),
        n_(static_cast<double>(data.n())),
        diagonal_omega_(omega != nullptr && is_diagonal(*omega)) {
    const auto p = data.p();
    const double max_diag = std::max(1.0, gram_.diagonal().maxCoeff());
    skip_.assign(static_cast<std::size_t>(p), false);
    for (Eigen::Index j = 0; j < p; ++j) {
      if (gram_(j, j) <= 1e-14 * max_diag) {
        skip_[static_cast<std::size_t>(j)] = true;
        B_.row(j).setZero();
      }
    }
    resid_t_ = (data.X.transpose() * data.Y - gram_ * B_).transpose();
    if (structured_ != nullptr) {
      v_over_d_ = structured_->v.cwiseQuotient(structured_->diag);
      rho_ = structured_->beta * structured_->v.dot(v_over_d_);
    }
  }

  double full_sweep() {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < B_.rows(); ++j) {
      if (structured_ != nullptr) {
        max_change = std::max(max_change, update_row(j));
        continue;
      }
      for (Eigen::Index k = 0; k < B_.cols(); ++k) {
        max_change = std::max(max_change, update(j, k));
      }
    }
    return max_change;
  }

  double active_sweep() {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < B_.rows(); ++j) {
      if (structured_ != nullptr) {
        if (B_.row(j).any()) max_change = std::max(max_change, update_row(j));
        continue;
      }
      for (Eigen::Index k = 0; k < B_.cols(); ++k) {
        if (B_(j, k) != 0.0) max_change = std::max(max_change, update(j, k));
      }
    }
    return max_change;
  }

  double threshold(double tol) const {
    const double scale = B_.size() ? B_.cwiseAbs().maxCoeff() : 0.0;
    return tol * std::max(1.0, scale);
  }

  Matrix& B() { return B_; }

 private:
  // Scalar update of B_jk; returns |delta|.
  double update(Eigen::Index j, Eigen::Index k) {
    if (skip_[static_cast<std::size_t>(j)]) return 0.0;
    const Matrix& omega = *omega_;
    const double h = gram_(j, j) * omega(k, k) / n_;
    const double g = diagonal_omega_ ? resid_t_(k, j) * omega(k, k) / n_
                                     : resid_t_.col(j).dot(omega.col(k)) / n_;
    const double old = B_(j, k);
    const double t = penalty_.lambda * penalty_.weight(j, k) / (2.0 * h);
    const double fresh = soft_threshold(old + g / h, t);
    const double delta = fresh - old;
    if (delta != 0.0) {
      B_(j, k) = fresh;
      resid_t_.row(k) -= delta * gram_.col(j).transpose();
    }
    return std::abs(delta);
  }

  // Exact minimization over row j; returns max |delta|.
  double update_row(Eigen::Index j) {
    if (skip_[static_cast<std::size_t>(j)]) return 0.0;
    const auto& sp = *structured_;
    const Eigen::Index q = B_.cols();
    const double h = gram_(j, j);
    const Vector b_old = B_.row(j).transpose();
    const Vector r = resid_t_.col(j) + h * b_old;
    const Vector c = sp.diag.cwiseProduct(r) - sp.beta * sp.v.dot(r) * sp.v;
    Vector t(q);
    for (Eigen::Index k = 0; k < q; ++k) {
      t[k] = 0.5 * n_ * penalty_.lambda * penalty_.weight(j, k);
    }
    const double hb = h * sp.beta;

    auto row_at = [&](double m) {
      Vector b(q);
      for (Eigen::Index k = 0; k < q; ++k) {
        b[k] = soft_threshold(c[k] + hb * sp.v[k] * m, t[k]) / (h * sp.diag[k]);
      }
      return b;
    };
    // phi(m) = v'b(m) - m and its slope on the current linear piece.
    auto phi = [&](double m, double& slope) {
      double value = -m;
      slope = -1.0;
      for (Eigen::Index k = 0; k < q; ++k) {
        const double z = c[k] + hb * sp.v[k] * m;
        const double s = soft_threshold(z, t[k]);
        value += sp.v[k] * s / (h * sp.diag[k]);
        if (s != 0.0) slope += sp.beta * sp.v[k] * v_over_d_[k];
      }
      return value;
    };

    double m = sp.v.dot(b_old);
    if (sp.beta > 0.0) {
      double slope;
      double f = phi(m, slope);
      // Slopes lie in [-1, -(1 - rho)], which brackets the root.
      const double gap = 1.0 - rho_;
      double lo = f > 0.0 ? m + f : m + f / gap;
      double hi = f > 0.0 ? m + f / gap : m + f;
      for (int it = 0; it < 200 && f != 0.0; ++it) {
        if (f > 0.0) {
          lo = std::max(lo, m);
        } else {
          hi = std::min(hi, m);
        }
        double next = m - f / slope;
        if (!(next >= lo && next <= hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - m) <= 1e-15 * std::max(1.0, std::abs(m))) break;
        m = next;
        f = phi(m, slope);
      }
    }
    const Vector b_new = row_at(m);
    const Vector delta = b_new - b_old;
    const double change = delta.cwiseAbs().maxCoeff();
    if (change > 0.0) {
      B_.row(j) = b_new.transpose();
      resid_t_.noalias() -= delta * gram_.row(j);
    }
    return change;
  }

  const Matrix* omega_;
  const StructuredPrecision* structured_;
  const PenaltySpec& penalty_;
  Matrix gram_;
  Matrix B_;
  Matrix resid_t_;
  double n_;
  bool diagonal_omega_;
  std::vector<bool> skip_;
  Vector v_over_d_;
  double rho_ = 0.0;
};

void check_problem(const Dataset& data, const PenaltySpec& penalty, const Matrix& B0,
                   const CdConfig& cfg) {
  cfg.validate();
  penalty.validate(data.p(), data.q());
  if (B0.rows() != data.p() || B0.cols() != data.q()) {
    throw InvalidInput("B0 must be p x q");
  }
  require_finite(B0, "B0");
}

CdResult run(CoordinateDescent& cd, const CdConfig& cfg) {
  CdResult result;
  while (result.sweeps < cfg.max_sweeps) {
    const double change = cd.full_sweep();
    ++result.sweeps;
    if (change < cd.threshold(cfg.tol)) {
      result.converged = true;
      break;
    }
    if (!cfg.active_set) continue;
    while (result.sweeps < cfg.max_sweeps) {
      const double active_change = cd.active_sweep();
      ++result.sweeps;
      if (active_change < cd.threshold(cfg.tol)) break;
    }
  }
  result.B = std::move(cd.B());
  return result;
}

}  // namespace

void CdConfig::validate() const {
  if (!(tol > 0.0)) throw InvalidInput("CdConfig.tol must be positive");
  if (max_sweeps < 1) throw InvalidInput("CdConfig.max_sweeps must be >= 1");
}

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

CdResult solve_penalized_B(const Dataset& data, const Matrix& omega,
                           const PenaltySpec& penalty, const Matrix& B0,
                           const CdConfig& cfg) {
  require_spd(omega, data.q());
  check_problem(data, penalty, B0, cfg);
  CoordinateDescent cd(data, &omega, nullptr, penalty, B0);
  return run(cd, cfg);
}

CdResult solve_penalized_B(const Dataset& data, const StructuredPrecision& omega,
                           const PenaltySpec& penalty, const Matrix& B0,
                           const CdConfig& cfg) {
  omega.validate();
  if (omega.diag.size() != data.q()) throw InvalidInput("Omega must be q x q");
  check_problem(data, penalty, B0, cfg);
  CoordinateDescent cd(data, nullptr, &omega, penalty, B0);
  return run(cd, cfg);
}

double kkt_residual(const Dataset& data, const Matrix& omega,
                    const PenaltySpec& penalty, const Matrix& B) {
  const double n = static_cast<double>(data.n());
  const Matrix G = data.X.transpose() * (data.Y - data.X * B) * omega / n;
  const Vector col_ss = data.X.colwise().squaredNorm().transpose();
  const double max_diag = std::max(1.0, col_ss.size() ? col_ss.maxCoeff() : 0.0);
  double worst = 0.0;
  for (Eigen::Index j = 0; j < B.rows(); ++j) {
    // Zero-variance predictors are pinned at zero by the solver.
    if (col_ss[j] <= 1e-14 * max_diag) continue;
    for (Eigen::Index k = 0; k < B.cols(); ++k) {
      const double lw = penalty.lambda * penalty.weight(j, k);
      const double two_g = 2.0 * G(j, k);
      double violation;
      if (B(j, k) == 0.0) {
        violation = std::max(0.0, std::abs(two_g) - lw);
      } else {
        violation = std::abs(-two_g + lw * (B(j, k) > 0.0 ? 1.0 : -1.0));
      }
      worst = std::max(worst, violation);
    }
  }
  return worst;
}

std::vector<Matrix> lasso_path(const Dataset& data, const Matrix& omega,
                               const std::vector<double>& grid,
                               const Matrix& B0, const CdConfig& cfg) {
  std::vector<Matrix> path;
  path.reserve(grid.size());
  Matrix warm = B0;
  for (const double lambda : grid) {
    auto res = solve_penalized_B(data, omega, PenaltySpec{lambda, std::nullopt},
                                 warm, cfg);
    warm = res.B;
    path.push_back(std::move(res.B));
  }
  return path;
}

Matrix fit_ols(const Dataset& data) {
  if (data.n() <= data.p()) {
    throw InvalidInput("least squares needs n > p");
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(data.X);
  if (qr.rank() < data.p()) {
    throw InvalidInput("X is rank deficient; least squares is not unique");
  }
  return qr.solve(data.Y);
}

Matrix compute_adaptive_weights(const Dataset& data, double r, double cap) {
  if (!(r > 1.0)) throw InvalidInput("adaptive weight exponent r must exceed 1");
  if (data.n() <= data.p() + data.q()) {
    throw UnsupportedRegime("adaptive weights require n > p + q");
  }
  const Matrix ols = fit_ols(data);
  Matrix w(ols.rows(), ols.cols());
  for (Eigen::Index j = 0; j < ols.rows(); ++j) {
    for (Eigen::Index k = 0; k < ols.cols(); ++k) {
      const double a = std::abs(ols(j, k));
      w(j, k) = a == 0.0 ? cap : std::min(cap, std::pow(a, -r));
    }
  }
  return w;
}

namespace {

Vector ridge_column(const Matrix& gram, const Vector& xty, double n,
                    double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw InvalidInput("ridge lambda must be finite and nonnegative");
  }
  Matrix system = gram;
  system.diagonal().array() += n * lambda;
  Eigen::LLT<Matrix> llt(system);
  if (llt.info() != Eigen::Success) {
    throw InvalidInput("ridge system is singular (lambda = 0 with p >= n?)");
  }
  return llt.solve(xty);
}

}  // namespace

Matrix fit_ridge(const Dataset& data, double lambda) {
  return fit_ridge(data, Vector::Constant(data.q(), lambda));
}

Matrix fit_ridge(const Dataset& data, const Vector& lambdas) {
  if (lambdas.size() != data.q()) {
    throw InvalidInput("need one ridge lambda per response");
  }
  const Matrix gram = data.X.transpose() * data.X;
  const Matrix xty = data.X.transpose() * data.Y;
  const double n = static_cast<double>(data.n());
  if (lambdas.minCoeff() == 0.0 && data.p() >= data.n()) {
    throw InvalidInput("ridge with lambda = 0 is singular when p >= n");
  }
  Matrix B(data.p(), data.q());
  for (Eigen::Index k = 0; k < data.q(); ++k) {
    B.col(k) = ridge_column(gram, xty.col(k), n, lambdas[k]);
  }
  return B;
}

}  // namespace mrcs
