#include "mrcs/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <type_traits>

namespace mrcs {

namespace {

double one_minus(double theta) {
  return std::max(1.0 - theta, kOneMinusThetaFloor);
}

// Core of both traces, taking precomputed ||R||_F^2 and ||R 1||^2.
double cs_trace(double frob2, double rowsum2, double eta2, double theta,
                Eigen::Index q) {
  const double omt = one_minus(theta);
  const double denom = 1.0 + static_cast<double>(q - 1) * theta;
  return frob2 / (eta2 * omt) - theta * rowsum2 / (eta2 * omt * denom);
}

double logdet_corr(double theta, Eigen::Index q) {
  return static_cast<double>(q - 1) * std::log(one_minus(theta)) +
         std::log1p(static_cast<double>(q - 1) * theta);
}

}  // namespace

double structured_trace(const Matrix& R, const CsParams& params) {
  params.validate();
  require_finite(R, "residual matrix");
  if (R.size() == 0) throw InvalidInput("residual matrix is empty");
  const double frob2 = R.squaredNorm();
  const double rowsum2 = R.rowwise().sum().squaredNorm();
  return cs_trace(frob2, rowsum2, params.eta2, params.theta, R.cols());
}

double structured_trace_gen(const Matrix& R, const GenEqParams& params) {
  params.validate();
  require_finite(R, "residual matrix");
  if (R.size() == 0) throw InvalidInput("residual matrix is empty");
  if (params.etas.size() != R.cols()) {
    throw InvalidInput("etas length must equal the number of responses");
  }
  const Matrix scaled = R * params.etas.cwiseInverse().asDiagonal();
  const double frob2 = scaled.squaredNorm();
  const double rowsum2 = scaled.rowwise().sum().squaredNorm();
  return cs_trace(frob2, rowsum2, 1.0, params.theta, R.cols());
}

double structured_trace(const Matrix& R, const CovParams& params) {
  return std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, CsParams>) {
          return structured_trace(R, p);
        } else {
          return structured_trace_gen(R, p);
        }
      },
      params);
}

double logdet_sigma(const CsParams& params, Eigen::Index q) {
  params.validate();
  return static_cast<double>(q) * std::log(params.eta2) +
         logdet_corr(params.theta, q);
}

double logdet_sigma(const GenEqParams& params) {
  params.validate();
  const auto q = params.etas.size();
  return 2.0 * params.etas.array().log().sum() + logdet_corr(params.theta, q);
}

double logdet_sigma(const CovParams& params, Eigen::Index q) {
  if (const auto* cs = std::get_if<CsParams>(&params)) {
    return logdet_sigma(*cs, q);
  }
  return logdet_sigma(std::get<GenEqParams>(params));
}

Matrix precision_dense(const CsParams& params, Eigen::Index q) {
  params.validate();
  const double omt = one_minus(params.theta);
  const double denom = 1.0 + static_cast<double>(q - 1) * params.theta;
  const double scale = 1.0 / (params.eta2 * omt);
  Matrix omega = Matrix::Constant(q, q, -scale * params.theta / denom);
  omega.diagonal().array() += scale;
  return omega;
}

Matrix precision_dense(const GenEqParams& params) {
  params.validate();
  const auto q = params.etas.size();
  const Vector inv = params.etas.cwiseInverse();
  Matrix omega = precision_dense(CsParams{1.0, params.theta}, q);
  return inv.asDiagonal() * omega * inv.asDiagonal();
}

Matrix precision_dense(const CovParams& params, Eigen::Index q) {
  if (const auto* cs = std::get_if<CsParams>(&params)) {
    return precision_dense(*cs, q);
  }
  return precision_dense(std::get<GenEqParams>(params));
}

void StructuredPrecision::validate() const {
  if (diag.size() == 0 || v.size() != diag.size()) {
    throw InvalidInput("structured precision needs matching non-empty diag and v");
  }
  if (!diag.allFinite() || !v.allFinite() || !std::isfinite(beta)) {
    throw InvalidInput("structured precision has non-finite entries");
  }
  if ((diag.array() <= 0.0).any() || beta < 0.0) {
    throw InvalidInput("structured precision needs diag > 0 and beta >= 0");
  }
  if (beta * v.cwiseAbs2().cwiseQuotient(diag).sum() >= 1.0) {
    throw InvalidInput("structured precision is not positive definite");
  }
}

Matrix StructuredPrecision::dense() const {
  Matrix omega = -beta * v * v.transpose();
  omega.diagonal() += diag;
  return omega;
}

StructuredPrecision structured_precision(const CsParams& params, Eigen::Index q) {
  params.validate();
  const double omt = one_minus(params.theta);
  const double a = 1.0 / (params.eta2 * omt);
  StructuredPrecision sp;
  sp.diag = Vector::Constant(q, a);
  sp.beta = a * params.theta / (1.0 + static_cast<double>(q - 1) * params.theta);
  sp.v = Vector::Ones(q);
  return sp;
}

StructuredPrecision structured_precision(const GenEqParams& params) {
  params.validate();
  const auto q = params.etas.size();
  const double a = 1.0 / one_minus(params.theta);
  StructuredPrecision sp;
  sp.v = params.etas.cwiseInverse();
  sp.diag = a * sp.v.cwiseAbs2();
  sp.beta = a * params.theta / (1.0 + static_cast<double>(q - 1) * params.theta);
  return sp;
}

StructuredPrecision structured_precision(const CovParams& params, Eigen::Index q) {
  if (const auto* cs = std::get_if<CsParams>(&params)) {
    return structured_precision(*cs, q);
  }
  return structured_precision(std::get<GenEqParams>(params));
}

Matrix sigma_dense(const CsParams& params, Eigen::Index q) {
  params.validate();
  Matrix sigma = Matrix::Constant(q, q, params.eta2 * params.theta);
  sigma.diagonal().setConstant(params.eta2);
  return sigma;
}

Matrix sigma_dense(const GenEqParams& params) {
  params.validate();
  const auto q = params.etas.size();
  const Matrix corr = sigma_dense(CsParams{1.0, params.theta}, q);
  return params.etas.asDiagonal() * corr * params.etas.asDiagonal();
}

double neg_loglik(const Dataset& data, const Matrix& B, const CovParams& params) {
  if (B.rows() != data.p() || B.cols() != data.q()) {
    throw InvalidInput("B must be p x q");
  }
  const Matrix R = data.Y - data.X * B;
  return structured_trace(R, params) / static_cast<double>(data.n()) +
         logdet_sigma(params, data.q());
}

double penalized_objective(const Dataset& data, const Matrix& B,
                           const CovParams& params, const PenaltySpec& penalty) {
  return neg_loglik(data, B, params) + penalty.value(B);
}

}  // namespace mrcs
