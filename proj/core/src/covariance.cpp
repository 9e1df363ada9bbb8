#include "mrcs/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mrcs/kernel.hpp"

namespace mrcs {

namespace {

void require_q(Eigen::Index q) {
  if (q < 2) throw InvalidInput("covariance updates need q >= 2");
}

// Theta objective with the scaled-residual sums precomputed.
struct ThetaObjective {
  double s1;  // ||R diag(1/eta)||_F^2 / n
  double s2;  // ||R diag(1/eta) 1||^2 / n
  double q;

  double operator()(double theta) const {
    const double omt = std::max(1.0 - theta, 1e-6);
    const double denom = 1.0 + (q - 1.0) * theta;
    return s1 / omt - theta * s2 / (omt * denom) + (q - 1.0) * std::log(omt) +
           std::log(denom);
  }
};

ThetaObjective make_theta_objective(const Matrix& R, const Vector& etas) {
  if (etas.size() != R.cols()) {
    throw InvalidInput("etas length must equal the number of responses");
  }
  const Matrix scaled = R * etas.cwiseInverse().asDiagonal();
  const double n = static_cast<double>(R.rows());
  return {scaled.squaredNorm() / n, scaled.rowwise().sum().squaredNorm() / n,
          static_cast<double>(R.cols())};
}

}  // namespace

ResidualSummary summarize_residuals(const Matrix& R) {
  require_finite(R, "residual matrix");
  ResidualSummary s;
  s.n = R.rows();
  s.q = R.cols();
  const double n = static_cast<double>(R.rows());
  s.M1 = R.squaredNorm() / n;
  s.M2 = R.rowwise().sum().squaredNorm() / n;
  return s;
}

CsParams cs_from_alpha_gamma(double alpha, double gamma, Eigen::Index q) {
  const double qd = static_cast<double>(q);
  CsParams out;
  out.eta2 = alpha + (gamma - alpha) / qd;
  out.theta = (gamma - alpha) / (gamma + (qd - 1.0) * alpha);
  return out;
}

CsParams update_cs(const Matrix& R) {
  require_q(R.cols());
  const ResidualSummary s = summarize_residuals(R);
  if (s.M1 == 0.0) throw DegenerateResidual("residual matrix is identically zero");
  const double q = static_cast<double>(s.q);

  const double floor =
      1e-10 * std::max(s.M1, std::numeric_limits<double>::epsilon());
  const double alpha = std::max((q * s.M1 - s.M2) / (q * (q - 1.0)), floor);
  CsParams out;
  if (s.M2 / q >= alpha) {
    out = cs_from_alpha_gamma(alpha, s.M2 / q, s.q);
  } else {
    out.eta2 = s.M1 / q;
    out.theta = 0.0;
  }
  out.theta = std::clamp(out.theta, 0.0, kThetaUpper);
  return out;
}

double update_eta_j(const Matrix& R, const Vector& etas, double theta,
                    Eigen::Index j) {
  const auto q = R.cols();
  require_q(q);
  GenEqParams{etas, theta}.validate();
  if (etas.size() != q) throw InvalidInput("etas length must equal q");
  if (j < 0 || j >= q) throw InvalidInput("response index out of range");
  require_finite(R, "residual matrix");

  const double n = static_cast<double>(R.rows());
  const double qd = static_cast<double>(q);
  const double omt = std::max(1.0 - theta, 1e-6);
  const double denom = 1.0 + (qd - 1.0) * theta;

  const auto ej = R.col(j);
  const double ss = ej.squaredNorm();
  if (ss == 0.0) {
    throw DegenerateResidual("residual column " + std::to_string(j) +
                             " is identically zero");
  }
  Vector others = Vector::Zero(R.rows());
  for (Eigen::Index k = 0; k < q; ++k) {
    if (k != j) others += R.col(k) / etas[k];
  }
  const double k1 = theta / (n * omt * denom) * ej.dot(others);
  const double k2 = (1.0 + (qd - 2.0) * theta) / (n * denom * omt) * ss;

  const double disc = std::sqrt(k1 * k1 + 4.0 * k2);
  // Rationalized form avoids cancellation when k1 is large and positive.
  return k1 > 0.0 ? 2.0 * k2 / (k1 + disc) : (-k1 + disc) / 2.0;
}

double theta_objective(const Matrix& R, const Vector& etas, double theta) {
  return make_theta_objective(R, etas)(theta);
}

double update_theta_line_search(const Matrix& R, const Vector& etas) {
  require_q(R.cols());
  require_finite(R, "residual matrix");
  const ThetaObjective f = make_theta_objective(R, etas);

  constexpr int kGrid = 101;
  const double upper = kThetaUpper;
  const double step = upper / (kGrid - 1);
  int best = 0;
  double best_val = f(0.0);
  for (int i = 1; i < kGrid; ++i) {
    const double v = f(i * step);
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  double lo = best > 0 ? (best - 1) * step : 0.0;
  double hi = best < kGrid - 1 ? (best + 1) * step : upper;
  double best_theta = best * step;

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = f(c);
  double fd = f(d);
  while (hi - lo > 1e-8) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = f(d);
    }
  }
  const double mid = 0.5 * (lo + hi);
  for (const double cand : {mid, lo, hi}) {
    const double v = f(cand);
    if (v < best_val) {
      best_val = v;
      best_theta = cand;
    }
  }
  return std::clamp(best_theta, 0.0, upper);
}

double covariance_block_objective(const Matrix& R, const CovParams& params) {
  return structured_trace(R, params) / static_cast<double>(R.rows()) +
         logdet_sigma(params, R.cols());
}

}  // namespace mrcs
