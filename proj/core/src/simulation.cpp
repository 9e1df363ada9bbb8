#include "mrcs/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mrcs/covariance.hpp"
#include "mrcs/kernel.hpp"
#include "mrcs/lasso.hpp"
#include "mrcs/parallel.hpp"
#include "mrcs/tuning.hpp"

namespace mrcs {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, CounterRng& rng) {
  Matrix Z(rows, cols);
  // Row-major fill so the stream order matches the documented layout.
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) Z(i, j) = rng.normal();
  }
  return Z;
}

CounterRng child(const CounterRng& parent, const char* label) {
  return CounterRng::stream(parent.key(), label);
}

}  // namespace

void Scenario::validate() const {
  if (n < 2 || p < 1 || q < 1) throw InvalidInput("scenario needs n >= 2, p >= 1, q >= 1");
  if (test_n < 1) throw InvalidInput("scenario test_n must be >= 1");
  if (!in_unit(s1) || !in_unit(s2)) throw InvalidInput("s1 and s2 must lie in [0, 1]");
  if (!(theta >= 0.0 && theta < 1.0)) throw InvalidInput("theta must lie in [0, 1)");
  if (!in_unit(omega)) throw InvalidInput("omega must lie in [0, 1]");
  if (b_family == BFamily::uniform_dense && !(b_bound > 0.0)) {
    throw InvalidInput("uniform coefficient bound must be positive");
  }
  if (cov_family == CovFamily::corrupted) {
    if (!in_unit(d_law.p) || !(d_law.a > 0.0) || !(d_law.b > 0.0)) {
      throw InvalidInput("two-point law needs p in [0, 1] and positive values");
    }
  } else {
    const Vector etas = resolve_etas(eta, q);
    if (cov_family == CovFamily::compound_symmetry &&
        (etas.array() != etas[0]).any()) {
      throw InvalidInput("compound symmetry needs a common eta");
    }
  }
}

Vector asymmetric_eta_preset(int q) {
  struct Block {
    int count;
    double eta;
  };
  std::vector<Block> blocks;
  const double r2 = std::sqrt(2.0);
  const double r3 = std::sqrt(3.0);
  switch (q) {
    case 50:
      blocks = {{10, 0.5}, {10, 1.0 / r2}, {10, 1.0}, {10, r3}, {10, 3.0}};
      break;
    case 20:
      blocks = {{4, 0.5}, {4, 1.0 / r2}, {4, 1.0}, {4, r3}, {4, 3.0}};
      break;
    case 80:
      blocks = {{10, 0.5}, {10, 1.0 / r2}, {10, std::pow(2.0, -0.25)}, {10, 1.0},
                {10, r3},  {15, 2.0},      {15, 3.0}};
      break;
    default:
      throw InvalidInput("asymmetric eta preset exists for q = 20, 50, 80 only");
  }
  Vector etas(q);
  int pos = 0;
  for (const auto& b : blocks) {
    etas.segment(pos, b.count).setConstant(b.eta);
    pos += b.count;
  }
  return etas;
}

Vector resolve_etas(const EtaSpec& spec, int q) {
  Vector etas;
  switch (spec.kind) {
    case EtaSpec::Kind::constant:
      etas = Vector::Constant(q, spec.value);
      break;
    case EtaSpec::Kind::explicit_vector:
      if (spec.values.size() != q) throw InvalidInput("eta vector length must equal q");
      etas = spec.values;
      break;
    case EtaSpec::Kind::asymmetric_preset:
      etas = asymmetric_eta_preset(q);
      break;
  }
  if (!etas.allFinite() || (etas.array() <= 0.0).any()) {
    throw InvalidInput("eta values must be positive and finite");
  }
  return etas;
}

Matrix gen_B(int p, int q, double s1, double s2, CounterRng& rng) {
  if (!in_unit(s1) || !in_unit(s2)) throw InvalidInput("s1 and s2 must lie in [0, 1]");
  Matrix B(p, q);
  for (int j = 0; j < p; ++j) {
    const bool relevant = rng.bernoulli(s2);
    for (int k = 0; k < q; ++k) {
      const double w = rng.normal();
      const bool keep = rng.bernoulli(s1);
      B(j, k) = (relevant && keep) ? w : 0.0;
    }
  }
  return B;
}

Matrix gen_B_uniform(int p, int q, double bound, CounterRng& rng) {
  if (!(bound > 0.0)) throw InvalidInput("uniform bound must be positive");
  Matrix B(p, q);
  for (int j = 0; j < p; ++j) {
    for (int k = 0; k < q; ++k) B(j, k) = bound * (2.0 * rng.uniform() - 1.0);
  }
  return B;
}

Matrix sigma_x(int p) {
  Matrix S(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) S(i, j) = std::pow(0.7, std::abs(i - j));
  }
  return S;
}

Vector response_means(int q) {
  if (q == 1) return Vector::Constant(1, 3.0);
  Vector mu(q);
  for (int k = 0; k < q; ++k) mu[k] = 1.0 + 4.0 * k / (q - 1.0);
  return mu;
}

bool gram_schmidt(Matrix& M) {
  for (Eigen::Index j = 0; j < M.cols(); ++j) {
    const double original = M.col(j).norm();
    if (!(original > 0.0)) return false;
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index i = 0; i < j; ++i) {
        M.col(j) -= M.col(i).dot(M.col(j)) * M.col(i);
      }
    }
    const double norm = M.col(j).norm();
    if (norm <= 1e-10 * original) return false;
    M.col(j) /= norm;
  }
  return true;
}

Matrix gen_corrupted_sigma(int q, double omega, const TwoPoint& law, CounterRng& rng) {
  Matrix V;
  bool ok = false;
  for (int attempt = 0; attempt < 10 && !ok; ++attempt) {
    V = standard_normal(q, q, rng);
    ok = gram_schmidt(V);
  }
  if (!ok) throw InvalidInput("Gram-Schmidt draw stayed rank deficient after 10 tries");
  Vector d(q);
  for (int k = 0; k < q; ++k) d[k] = rng.bernoulli(law.p) ? law.a : law.b;
  const Matrix base = sigma_dense(CsParams{0.5, 0.9}, q);
  Matrix S = (1.0 - omega) * base + omega * (V * d.asDiagonal() * V.transpose());
  return 0.5 * (S + S.transpose());
}

Matrix gen_sigma(const Scenario& sc, CounterRng& rng) {
  switch (sc.cov_family) {
    case CovFamily::corrupted:
      return gen_corrupted_sigma(sc.q, sc.omega, sc.d_law, rng);
    case CovFamily::compound_symmetry:
    case CovFamily::general_equicorrelation:
      break;
  }
  return sigma_dense(GenEqParams{resolve_etas(sc.eta, sc.q), sc.theta});
}

double condition_number(const Matrix& S) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(S, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw InvalidInput("eigendecomposition failed");
  const Vector ev = eig.eigenvalues();
  return ev.maxCoeff() / ev.minCoeff();
}

Matrix draw_gaussian_rows(int n, const Matrix& S, CounterRng& rng) {
  Eigen::LLT<Matrix> llt(S);
  if (llt.info() != Eigen::Success) {
    throw InvalidInput("covariance is not positive definite");
  }
  const Matrix L = llt.matrixL();
  return standard_normal(n, S.rows(), rng) * L.transpose();
}

SimulatedData gen_dataset(const Scenario& sc, CounterRng& rng) {
  sc.validate();
  SimulatedData out;
  auto b_rng = child(rng, "B");
  out.B_true = sc.b_family == BFamily::bernoulli_mask
                   ? gen_B(sc.p, sc.q, sc.s1, sc.s2, b_rng)
                   : gen_B_uniform(sc.p, sc.q, sc.b_bound, b_rng);
  auto sigma_rng = child(rng, "sigma");
  out.sigma_true = gen_sigma(sc, sigma_rng);
  if (sc.cov_family != CovFamily::corrupted) {
    out.cov_true = GenEqParams{resolve_etas(sc.eta, sc.q), sc.theta};
  }
  out.sigma_x = sigma_x(sc.p);
  const Vector mu = response_means(sc.q);

  auto draw = [&](int rows, const char* x_label, const char* e_label) {
    auto x_rng = child(rng, x_label);
    auto e_rng = child(rng, e_label);
    Matrix X = draw_gaussian_rows(rows, out.sigma_x, x_rng);
    Matrix Y = X * out.B_true + draw_gaussian_rows(rows, out.sigma_true, e_rng);
    Y.rowwise() += mu.transpose();
    return std::pair{std::move(X), std::move(Y)};
  };
  auto [X, Y] = draw(sc.n, "train/X", "train/eps");
  out.train = Dataset::centered_from(X, Y);
  auto [Xt, Yt] = draw(sc.test_n, "test/X", "test/eps");
  out.test = Dataset::raw(Xt, Yt);
  return out;
}

MetricsReport metrics(const Matrix& B_hat, const Matrix& B_true, const Matrix& Sigma_X,
                      const Matrix& Y_test, const Matrix& Y_pred, bool per_observation) {
  if (B_hat.rows() != B_true.rows() || B_hat.cols() != B_true.cols()) {
    throw InvalidInput("estimated and true B differ in shape");
  }
  if (Sigma_X.rows() != B_true.rows() || Sigma_X.cols() != B_true.rows()) {
    throw InvalidInput("Sigma_X must be p x p");
  }
  if (Y_test.rows() != Y_pred.rows() || Y_test.cols() != Y_pred.cols()) {
    throw InvalidInput("test responses and predictions differ in shape");
  }
  MetricsReport m;
  const Matrix D = B_hat - B_true;
  m.model_error = (D.transpose() * Sigma_X * D).trace();
  m.prediction_error = (Y_pred - Y_test).squaredNorm();
  if (per_observation && Y_test.rows() > 0) {
    m.prediction_error /= static_cast<double>(Y_test.rows());
  }
  long zeros = 0, zeros_hit = 0, nonzeros = 0, nonzeros_hit = 0;
  for (Eigen::Index j = 0; j < B_true.rows(); ++j) {
    for (Eigen::Index k = 0; k < B_true.cols(); ++k) {
      if (B_true(j, k) == 0.0) {
        ++zeros;
        zeros_hit += B_hat(j, k) == 0.0;
      } else {
        ++nonzeros;
        nonzeros_hit += B_hat(j, k) != 0.0;
      }
    }
  }
  m.tnr = zeros > 0 ? static_cast<double>(zeros_hit) / zeros : kNaN;
  m.tpr = nonzeros > 0 ? static_cast<double>(nonzeros_hit) / nonzeros : kNaN;
  return m;
}

Matrix limiting_V_gaussian(const CsParams& params, int q) {
  params.validate();
  if (q < 2) throw InvalidInput("limiting covariance needs q >= 2");
  const double qd = q;
  const Matrix S = sigma_dense(params, q);
  const Matrix Q = qd * Matrix::Identity(q, q) - Matrix::Ones(q, q);
  const Matrix QS = Q * S;
  Matrix V(2, 2);
  V(0, 0) = 2.0 * (S * S).trace() / (qd * qd);
  V(1, 1) = 2.0 * (QS * QS).trace() / (qd * qd * (qd - 1.0) * (qd - 1.0));
  V(0, 1) = V(1, 0) = 2.0 * (S * QS).trace() / (qd * qd * (qd - 1.0));
  return V;
}

Vector theta_delta_gradient(const CsParams& params) {
  // theta = 1 - u2 / u1 with u1 -> eta2 and u2 -> eta2 (1 - theta).
  Vector w(2);
  w << (1.0 - params.theta) / params.eta2, -1.0 / params.eta2;
  return w;
}

void AsymptoticsConfig::validate() const {
  if (p < 1 || q < 2) throw InvalidInput("asymptotics needs p >= 1 and q >= 2");
  if (!(r > 1.0)) throw InvalidInput("adaptive weight exponent r must exceed 1");
  if (reps < 1) throw InvalidInput("reps must be >= 1");
  if (n_list.empty()) throw InvalidInput("n list is empty");
  for (const int n : n_list) {
    if (n <= p + q) throw UnsupportedRegime("asymptotics needs n > p + q for every n");
  }
  if (!(lambda_scale >= 0.0)) throw InvalidInput("lambda scale must be nonnegative");
  CsParams{eta2, theta}.validate();
  solver.validate();
}

Matrix asymptotics_B(int p, int q) {
  Matrix B = Matrix::Zero(p, q);
  for (int j = 0; j < p; ++j) {
    for (int k = 0; k < q; ++k) {
      if ((j + k) % 2 == 0) B(j, k) = (k % 2 == 0 ? 1.0 : -1.0) * (0.5 + 0.25 * (j + k));
    }
  }
  return B;
}

std::vector<AsymptoticsRow> asymptotics_harness(const AsymptoticsConfig& cfg) {
  cfg.validate();
  const Matrix B_true = asymptotics_B(cfg.p, cfg.q);
  const Matrix Sx = sigma_x(cfg.p);
  const Matrix Se = sigma_dense(CsParams{cfg.eta2, cfg.theta}, cfg.q);
  const Vector mu = response_means(cfg.q);

  struct Draw {
    double theta = 0.0;
    double eta2 = 0.0;
    double tnr = 0.0;
    double tpr = 0.0;
    bool zeros_exact = false;
    bool nonzeros_kept = false;
    bool converged = false;
  };

  std::vector<AsymptoticsRow> rows;
  for (const int n : cfg.n_list) {
    std::vector<Draw> draws(static_cast<std::size_t>(cfg.reps));
    parallel_for(draws.size(), cfg.threads, [&](std::size_t rep) {
      auto rng = CounterRng::stream(
          cfg.seed, "asymptotics/n=" + std::to_string(n) + "/rep=" + std::to_string(rep));
      auto x_rng = child(rng, "X");
      auto e_rng = child(rng, "eps");
      const Matrix X = draw_gaussian_rows(n, Sx, x_rng);
      Matrix Y = X * B_true + draw_gaussian_rows(n, Se, e_rng);
      Y.rowwise() += mu.transpose();
      const Dataset data = Dataset::centered_from(X, Y);

      const PenaltySpec penalty{cfg.lambda_scale / n,
                                compute_adaptive_weights(data, cfg.r)};
      const FitResult fit = fit_mrcs(data, penalty, cfg.solver, fit_ols(data));
      const auto& cs = std::get<CsParams>(fit.cov);
      const MetricsReport m = metrics(fit.B, B_true, Sx, Matrix::Zero(1, cfg.q),
                                      Matrix::Zero(1, cfg.q));
      Draw& d = draws[rep];
      d.theta = cs.theta;
      d.eta2 = cs.eta2;
      d.tnr = m.tnr;
      d.tpr = m.tpr;
      d.zeros_exact = m.tnr == 1.0;
      d.nonzeros_kept = m.tpr == 1.0;
      d.converged = fit.converged;
    });

    AsymptoticsRow row;
    row.n = n;
    row.reps = cfg.reps;
    const double R = cfg.reps;
    double sq_theta = 0.0, sq_eta2 = 0.0;
    for (const auto& d : draws) {
      row.mean_theta += d.theta / R;
      row.mean_eta2 += d.eta2 / R;
      sq_theta += (d.theta - cfg.theta) * (d.theta - cfg.theta);
      sq_eta2 += (d.eta2 - cfg.eta2) * (d.eta2 - cfg.eta2);
      row.zero_recovery += d.zeros_exact / R;
      row.nonzero_recovery += d.nonzeros_kept / R;
      row.mean_tnr += d.tnr / R;
      row.mean_tpr += d.tpr / R;
      row.nonconverged += !d.converged;
    }
    double var_theta = 0.0, var_eta2 = 0.0;
    for (const auto& d : draws) {
      var_theta += (d.theta - row.mean_theta) * (d.theta - row.mean_theta);
      var_eta2 += (d.eta2 - row.mean_eta2) * (d.eta2 - row.mean_eta2);
    }
    const double denom = cfg.reps > 1 ? R - 1.0 : 1.0;
    row.sd_eta2 = std::sqrt(var_eta2 / denom);
    row.rmse_theta = std::sqrt(sq_theta / R);
    row.rmse_eta2 = std::sqrt(sq_eta2 / R);
    row.sqrt_n_rmse_theta = std::sqrt(static_cast<double>(n)) * row.rmse_theta;
    row.sqrt_n_rmse_eta2 = std::sqrt(static_cast<double>(n)) * row.rmse_eta2;
    row.var_sqrt_n_theta = n * var_theta / denom;
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------

std::vector<Method> default_methods(const Scenario& sc) {
  std::vector<Method> out;
  const bool low = sc.p < sc.n;
  if (sc.q >= 2) {
    if (low) out.push_back(Method::mrcs);
    out.push_back(Method::ap_mrcs);
    if (low) out.push_back(Method::mrgcs);
    out.push_back(Method::ap_mrgcs);
    out.push_back(Method::oracle);
  }
  out.insert(out.end(), {Method::lasso_comb, Method::lasso_sep, Method::ridge_comb,
                         Method::ridge_sep});
  return out;
}

std::string replication_label(int rep) { return "simulate/rep=" + std::to_string(rep); }

SimulatedData replicate_dataset(const Scenario& sc, int rep) {
  auto rng = CounterRng::stream(sc.seed, replication_label(rep));
  return gen_dataset(sc, rng);
}

std::vector<MethodOutcome> evaluate_methods(const SimulatedData& sim,
                                            const StudyConfig& cfg) {
  const Dataset& train = sim.train;
  std::vector<Method> likelihood;
  for (const auto m : cfg.methods) {
    if (is_likelihood_method(m)) likelihood.push_back(m);
  }
  const bool need_omega =
      std::find(likelihood.begin(), likelihood.end(), Method::oracle) != likelihood.end();
  TruePrecision truth;
  if (need_omega) {
    truth = sim.cov_true ? TruePrecision::from_params(*sim.cov_true, train.q())
                         : TruePrecision::from_sigma(sim.sigma_true);
  }
  const TruePrecision* omega_ptr = need_omega ? &truth : nullptr;

  std::vector<CvResult> tuned;
  Matrix B_init;
  if (!likelihood.empty()) {
    tuned = cross_validate(train, likelihood, cfg.plan, cfg.solver, omega_ptr);
    B_init = initial_B(train, cfg.solver);
  }

  std::vector<MethodOutcome> out;
  std::size_t next_tuned = 0;
  for (const auto m : cfg.methods) {
    MethodOutcome o;
    o.method = m;
    if (is_likelihood_method(m)) {
      o.lambda = tuned[next_tuned++].lambda;
      o.fit = fit_likelihood_method(m, train, o.lambda, cfg.solver, B_init, omega_ptr);
    } else {
      const BaselineSelection sel = cv_baselines(train, m, cfg.plan, cfg.solver.cd);
      o.fit.B = fit_baseline(train, sel, cfg.solver.cd);
      o.fit.intercept = intercept_for(train, o.fit.B);
      o.fit.converged = true;
      if (sel.lambdas.size() == 1) {
        o.lambda = sel.lambdas[0];
      } else {
        o.lambdas = sel.lambdas;
        o.lambda = kNaN;
      }
      o.fit.lambda = o.lambda;
    }
    Matrix pred = sim.test.X * o.fit.B;
    pred.rowwise() += o.fit.intercept.transpose();
    o.report = metrics(o.fit.B, sim.B_true, sim.sigma_x, sim.test.Y, pred,
                       cfg.per_observation);
    out.push_back(std::move(o));
  }
  return out;
}

std::vector<ReplicationResult> run_study(const Scenario& sc, int reps,
                                         const StudyConfig& cfg) {
  sc.validate();
  if (reps < 1) throw InvalidInput("reps must be >= 1");
  StudyConfig base = cfg;
  if (base.methods.empty()) base.methods = default_methods(sc);
  for (const auto m : base.methods) {
    if (requires_low_dimension(m) && sc.p >= sc.n) {
      throw UnsupportedRegime(to_string(m) + " is not available when p >= n; use ap-" +
                              to_string(m));
    }
  }
  std::vector<ReplicationResult> results(static_cast<std::size_t>(reps));
  parallel_for(results.size(), cfg.threads, [&](std::size_t i) {
    const int rep = static_cast<int>(i);
    const SimulatedData sim = replicate_dataset(sc, rep);
    StudyConfig local = base;
    const std::uint64_t fold_seed =
        CounterRng::stream(sc.seed, replication_label(rep) + "/cv")();
    local.plan.seed = fold_seed;
    local.solver.init_plan.seed = fold_seed;
    results[i].rep = rep;
    results[i].outcomes = evaluate_methods(sim, local);
  });
  return results;
}

double quantile_sorted(const std::vector<double>& sorted, double prob) {
  if (sorted.empty()) return kNaN;
  const double pos = prob * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<SummaryRow> summarize(const std::vector<ReplicationResult>& results) {
  std::vector<SummaryRow> rows;
  if (results.empty()) return rows;
  const char* names[] = {"model_error", "prediction_error", "tnr", "tpr"};
  const auto& first = results.front().outcomes;
  for (std::size_t mi = 0; mi < first.size(); ++mi) {
    for (int metric = 0; metric < 4; ++metric) {
      std::vector<double> values;
      for (const auto& r : results) {
        const auto& rep = r.outcomes[mi].report;
        const double v = metric == 0   ? rep.model_error
                         : metric == 1 ? rep.prediction_error
                         : metric == 2 ? rep.tnr
                                       : rep.tpr;
        if (std::isfinite(v)) values.push_back(v);
      }
      std::sort(values.begin(), values.end());
      SummaryRow row;
      row.method = first[mi].method;
      row.metric = names[metric];
      row.count = static_cast<int>(values.size());
      row.q1 = quantile_sorted(values, 0.25);
      row.median = quantile_sorted(values, 0.5);
      row.q3 = quantile_sorted(values, 0.75);
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace mrcs
