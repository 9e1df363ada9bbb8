#include "mrcs/solvers.hpp"

#include <algorithm>
#include <cmath>

#include "mrcs/covariance.hpp"
#include "mrcs/kernel.hpp"
#include "mrcs/tuning.hpp"

namespace mrcs {

namespace {

struct MethodName {
  Method method;
  const char* name;
};

constexpr MethodName kMethodNames[] = {
    {Method::mrcs, "mrcs"},           {Method::ap_mrcs, "ap-mrcs"},
    {Method::mrgcs, "mrgcs"},         {Method::ap_mrgcs, "ap-mrgcs"},
    {Method::oracle, "oracle"},       {Method::lasso_comb, "lasso-comb"},
    {Method::lasso_sep, "lasso-sep"}, {Method::ridge_comb, "ridge-comb"},
    {Method::ridge_sep, "ridge-sep"},
};

void require_multiresponse(const Dataset& data) {
  if (data.q() < 2) throw InvalidInput("equicorrelation methods need q >= 2");
}

void refuse_high_dimension(const Dataset& data, const char* method,
                           const char* alternative) {
  if (data.p() >= data.n()) {
    throw UnsupportedRegime(std::string(method) + " is not available when p >= n (p=" +
                            std::to_string(data.p()) + ", n=" +
                            std::to_string(data.n()) + "); use " + alternative);
  }
}

double stop_scale(const Dataset& data, double epsilon) {
  return epsilon * data.Y.squaredNorm() / static_cast<double>(data.n());
}

void check_init(const Dataset& data, const Matrix& B_init) {
  if (B_init.rows() != data.p() || B_init.cols() != data.q()) {
    throw InvalidInput("initial B must be p x q");
  }
  require_finite(B_init, "initial B");
}

Matrix solve_B(const Dataset& data, const CovParams& cov,
               const PenaltySpec& penalty, const Matrix& warm,
               const CdConfig& cd) {
  return solve_penalized_B(data, structured_precision(cov, data.q()), penalty, warm, cd)
      .B;
}

FitResult finish(const Dataset& data, Matrix B, CovParams cov,
                 const PenaltySpec& penalty, std::vector<double> trace, int iters,
                 bool converged) {
  FitResult out;
  out.intercept = intercept_for(data, B);
  out.B = std::move(B);
  out.cov = std::move(cov);
  out.lambda = penalty.lambda;
  out.objective_trace = std::move(trace);
  out.outer_iters = iters;
  out.converged = converged;
  return out;
}

// One cyclic pass over the general-equicorrelation parameters at fixed
// residuals. The line-search result is only accepted when it does not
// increase the theta objective, so each pass is a descent step.
void geneq_cycle(const Matrix& R, GenEqParams& cov) {
  for (Eigen::Index j = 0; j < R.cols(); ++j) {
    cov.etas[j] = update_eta_j(R, cov.etas, cov.theta, j);
  }
  const double candidate = update_theta_line_search(R, cov.etas);
  if (theta_objective(R, cov.etas, candidate) <=
      theta_objective(R, cov.etas, cov.theta)) {
    cov.theta = candidate;
  }
}

}  // namespace

std::string to_string(Method m) {
  for (const auto& entry : kMethodNames) {
    if (entry.method == m) return entry.name;
  }
  return "unknown";
}

std::optional<Method> parse_method(const std::string& name) {
  for (const auto& entry : kMethodNames) {
    if (name == entry.name) return entry.method;
  }
  return std::nullopt;
}

bool requires_low_dimension(Method m) {
  return m == Method::mrcs || m == Method::mrgcs;
}

bool is_likelihood_method(Method m) {
  return m == Method::mrcs || m == Method::ap_mrcs || m == Method::mrgcs ||
         m == Method::ap_mrgcs || m == Method::oracle;
}

void SolverConfig::validate() const {
  if (!(epsilon > 0.0)) throw InvalidInput("epsilon must be positive");
  if (max_outer < 1) throw InvalidInput("max_outer must be >= 1");
  if (!(inner_tol > 0.0)) throw InvalidInput("inner_tol must be positive");
  if (inner_max < 1) throw InvalidInput("inner_max must be >= 1");
  cd.validate();
}

Matrix init_B(const Dataset& data, int K, const std::vector<double>& grid,
              InitMode mode, std::uint64_t seed) {
  CvPlan plan;
  plan.K = K;
  plan.grid = grid;
  plan.seed = seed;
  plan.validate();
  const Method method =
      mode == InitMode::combined ? Method::lasso_comb : Method::lasso_sep;
  const auto selection = cv_baselines(data, method, plan);
  return fit_baseline(data, selection);
}

Matrix initial_B(const Dataset& data, const SolverConfig& cfg) {
  switch (cfg.initializer) {
    case Initializer::zero:
      return Matrix::Zero(data.p(), data.q());
    case Initializer::separate_lasso:
      return init_B(data, cfg.init_plan.K, cfg.init_plan.grid, InitMode::separate,
                    cfg.init_plan.seed);
    case Initializer::combined_lasso:
      break;
  }
  return init_B(data, cfg.init_plan.K, cfg.init_plan.grid, InitMode::combined,
                cfg.init_plan.seed);
}

FitResult fit_mrcs(const Dataset& data, const PenaltySpec& penalty,
                   const SolverConfig& cfg, const Matrix& B_init) {
  cfg.validate();
  require_multiresponse(data);
  refuse_high_dimension(data, "MRCS", "ap-mrcs");
  check_init(data, B_init);
  penalty.validate(data.p(), data.q());

  Matrix B = B_init;
  CovParams cov = CsParams{1.0, 0.0};
  std::vector<double> trace{penalized_objective(data, B, cov, penalty)};
  const double scale = stop_scale(data, cfg.epsilon);
  int iters = 0;
  bool converged = false;
  while (iters < cfg.max_outer) {
    cov = update_cs(data.Y - data.X * B);
    B = solve_B(data, cov, penalty, B, cfg.cd);
    trace.push_back(penalized_objective(data, B, cov, penalty));
    ++iters;
    if (std::abs(trace.back() - trace[trace.size() - 2]) < scale) {
      converged = true;
      break;
    }
  }
  return finish(data, std::move(B), cov, penalty, std::move(trace), iters, converged);
}

FitResult fit_mrcs(const Dataset& data, double lambda, const SolverConfig& cfg) {
  return fit_mrcs(data, PenaltySpec{lambda, std::nullopt}, cfg, initial_B(data, cfg));
}

FitResult fit_ap_mrcs(const Dataset& data, const PenaltySpec& penalty,
                      const SolverConfig& cfg, const Matrix& B_init) {
  cfg.validate();
  require_multiresponse(data);
  check_init(data, B_init);
  penalty.validate(data.p(), data.q());

  const CovParams cov = update_cs(data.Y - data.X * B_init);
  std::vector<double> trace{
      penalized_objective(data, B_init, CsParams{1.0, 0.0}, penalty)};
  Matrix B = solve_B(data, cov, penalty, B_init, cfg.cd);
  trace.push_back(penalized_objective(data, B, cov, penalty));
  return finish(data, std::move(B), cov, penalty, std::move(trace), 1, true);
}

FitResult fit_ap_mrcs(const Dataset& data, double lambda, const SolverConfig& cfg) {
  return fit_ap_mrcs(data, PenaltySpec{lambda, std::nullopt}, cfg,
                     initial_B(data, cfg));
}

FitResult fit_mrgcs(const Dataset& data, const PenaltySpec& penalty,
                    const SolverConfig& cfg, const Matrix& B_init) {
  cfg.validate();
  require_multiresponse(data);
  refuse_high_dimension(data, "MRGCS", "ap-mrgcs");
  check_init(data, B_init);
  penalty.validate(data.p(), data.q());

  Matrix B = B_init;
  GenEqParams cov{Vector::Ones(data.q()), 0.0};
  std::vector<double> trace{penalized_objective(data, B, cov, penalty)};
  const double scale = stop_scale(data, cfg.epsilon);
  int iters = 0;
  bool converged = false;
  while (iters < cfg.max_outer) {
    geneq_cycle(data.Y - data.X * B, cov);
    B = solve_B(data, cov, penalty, B, cfg.cd);
    trace.push_back(penalized_objective(data, B, cov, penalty));
    ++iters;
    if (std::abs(trace.back() - trace[trace.size() - 2]) < scale) {
      converged = true;
      break;
    }
  }
  return finish(data, std::move(B), cov, penalty, std::move(trace), iters, converged);
}

FitResult fit_mrgcs(const Dataset& data, double lambda, const SolverConfig& cfg) {
  return fit_mrgcs(data, PenaltySpec{lambda, std::nullopt}, cfg, initial_B(data, cfg));
}

FitResult fit_ap_mrgcs(const Dataset& data, const PenaltySpec& penalty,
                       const SolverConfig& cfg, const Matrix& B_init) {
  cfg.validate();
  require_multiresponse(data);
  check_init(data, B_init);
  penalty.validate(data.p(), data.q());

  const Matrix R = data.Y - data.X * B_init;
  GenEqParams cov{Vector::Ones(data.q()), 0.0};
  std::vector<double> trace{penalized_objective(data, B_init, cov, penalty)};
  double previous = covariance_block_objective(R, cov);
  bool inner_converged = false;
  for (int cycle = 0; cycle < cfg.inner_max; ++cycle) {
    geneq_cycle(R, cov);
    const double current = covariance_block_objective(R, cov);
    const double rel = std::abs(current - previous) / std::max(1.0, std::abs(previous));
    previous = current;
    if (rel < cfg.inner_tol) {
      inner_converged = true;
      break;
    }
  }
  Matrix B = solve_B(data, cov, penalty, B_init, cfg.cd);
  trace.push_back(penalized_objective(data, B, cov, penalty));
  return finish(data, std::move(B), cov, penalty, std::move(trace), 1,
                inner_converged);
}

FitResult fit_ap_mrgcs(const Dataset& data, double lambda, const SolverConfig& cfg) {
  return fit_ap_mrgcs(data, PenaltySpec{lambda, std::nullopt}, cfg,
                      initial_B(data, cfg));
}

TruePrecision TruePrecision::from_sigma(const Matrix& sigma) {
  require_finite(sigma, "Sigma");
  Eigen::LLT<Matrix> llt(sigma);
  if (sigma.rows() != sigma.cols() || llt.info() != Eigen::Success) {
    throw InvalidInput("true Sigma must be symmetric positive definite");
  }
  TruePrecision out;
  out.omega = llt.solve(Matrix::Identity(sigma.rows(), sigma.cols()));
  out.omega = 0.5 * (out.omega + out.omega.transpose()).eval();
  return out;
}

TruePrecision TruePrecision::from_params(const CovParams& params, Eigen::Index q) {
  TruePrecision out;
  out.omega = precision_dense(params, q);
  out.params = params;
  return out;
}

Matrix fit_oracle(const Dataset& data, double lambda, const TruePrecision& truth,
                  const Matrix& B0, const CdConfig& cd) {
  if (truth.params) {
    return solve_penalized_B(data, structured_precision(*truth.params, data.q()),
                             PenaltySpec{lambda, std::nullopt}, B0, cd)
        .B;
  }
  return fit_oracle(data, lambda, truth.omega, B0, cd);
}

Matrix fit_oracle(const Dataset& data, double lambda, const Matrix& omega_true,
                  const Matrix& B0, const CdConfig& cd) {
  return solve_penalized_B(data, omega_true, PenaltySpec{lambda, std::nullopt}, B0, cd)
      .B;
}

Matrix fit_oracle(const Dataset& data, double lambda, const Matrix& omega_true) {
  return fit_oracle(data, lambda, omega_true, Matrix::Zero(data.p(), data.q()));
}

FitResult fit_likelihood_method(Method method, const Dataset& data, double lambda,
                                const SolverConfig& cfg, const Matrix& B_init,
                                const TruePrecision* truth) {
  const PenaltySpec penalty{lambda, std::nullopt};
  switch (method) {
    case Method::mrcs:
      return fit_mrcs(data, penalty, cfg, B_init);
    case Method::ap_mrcs:
      return fit_ap_mrcs(data, penalty, cfg, B_init);
    case Method::mrgcs:
      return fit_mrgcs(data, penalty, cfg, B_init);
    case Method::ap_mrgcs:
      return fit_ap_mrgcs(data, penalty, cfg, B_init);
    case Method::oracle: {
      if (truth == nullptr) throw InvalidInput("oracle fit needs the true Omega");
      FitResult out;
      out.B = fit_oracle(data, lambda, *truth, B_init, cfg.cd);
      if (truth->params) out.cov = *truth->params;
      out.intercept = intercept_for(data, out.B);
      out.lambda = lambda;
      out.outer_iters = 1;
      out.converged = true;
      return out;
    }
    default:
      break;
  }
  throw InvalidInput("fit_likelihood_method does not handle baseline " +
                     to_string(method));
}

}  // namespace mrcs
