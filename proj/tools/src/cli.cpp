#include "mrcs_cli/cli.hpp"

#include <cmath>
#include <filesystem>
#include <limits>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "mrcs/kernel.hpp"
#include "mrcs/lasso.hpp"
#include "mrcs/simulation.hpp"
#include "mrcs/tuning.hpp"
#include "mrcs_cli/io.hpp"

namespace mrcs::cli {

namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericalFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Method method_from(const std::string& name) {
  const auto m = parse_method(name);
  if (!m) {
    throw UsageError("unknown method '" + name +
                     "' (expected mrcs, ap-mrcs, mrgcs, ap-mrgcs, oracle, lasso-comb, "
                     "lasso-sep, ridge-comb or ridge-sep)");
  }
  return *m;
}

Initializer initializer_from(const std::string& name) {
  if (name == "combined-lasso" || name == "combined") return Initializer::combined_lasso;
  if (name == "separate-lasso" || name == "separate") return Initializer::separate_lasso;
  if (name == "zero") return Initializer::zero;
  throw UsageError("unknown initializer '" + name + "'");
}

/// Optional JSON overrides for SolverConfig.
SolverConfig load_solver_config(const std::string& path) {
  SolverConfig cfg;
  if (path.empty()) return cfg;
  using nlohmann::json;
  json j;
  try {
    j = json::parse(read_text(path));
    cfg.epsilon = j.value("epsilon", cfg.epsilon);
    cfg.max_outer = j.value("max_outer", cfg.max_outer);
    cfg.inner_tol = j.value("inner_tol", cfg.inner_tol);
    cfg.inner_max = j.value("inner_max", cfg.inner_max);
    if (j.contains("initializer")) {
      cfg.initializer = initializer_from(j["initializer"].get<std::string>());
    }
    cfg.cd.tol = j.value("cd_tol", cfg.cd.tol);
    cfg.cd.max_sweeps = j.value("max_sweeps", cfg.cd.max_sweeps);
    cfg.cd.active_set = j.value("active_set", cfg.cd.active_set);
  } catch (const json::exception& e) {
    throw DataError("malformed solver config: " + std::string(e.what()));
  }
  return cfg;
}

CvPlan make_plan(int folds, const std::vector<double>& grid, std::uint64_t seed,
                 int threads) {
  CvPlan plan;
  plan.K = folds;
  if (!grid.empty()) plan.grid = grid;
  plan.seed = seed;
  plan.threads = threads;
  plan.validate();
  return plan;
}

std::vector<Method> parse_methods(const std::vector<std::string>& names,
                                  const Scenario& sc) {
  if (names.empty()) return default_methods(sc);
  if (names.size() == 1 && names.front() == "none") return {};
  std::vector<Method> out;
  for (const auto& n : names) out.push_back(method_from(n));
  return out;
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw DataError("cannot create output directory " + dir.string());
  }
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOptions {
  std::string scenario;
  int reps = 1;
  std::optional<std::uint64_t> seed;
  std::string out;
  int threads = 1;
  std::vector<std::string> methods;
  int folds = 5;
  std::vector<double> grid;
  bool header = false;
  bool per_observation = false;
};

void write_replication(const fs::path& dir, const SimulatedData& sim, bool header) {
  auto names = [&](const char* prefix, Eigen::Index k) {
    return header ? column_names(prefix, k) : std::vector<std::string>{};
  };
  const auto p = sim.train.p();
  const auto q = sim.train.q();
  write_csv(dir / "X_train.csv", sim.train.raw_X(), names("x", p));
  write_csv(dir / "Y_train.csv", sim.train.raw_Y(), names("y", q));
  write_csv(dir / "X_test.csv", sim.test.raw_X(), names("x", p));
  write_csv(dir / "Y_test.csv", sim.test.raw_Y(), names("y", q));
  write_csv(dir / "B_true.csv", sim.B_true, names("y", q));
  write_csv(dir / "Sigma_true.csv", sim.sigma_true, names("y", q));
  write_csv(dir / "Sigma_X.csv", sim.sigma_x, names("x", p));
}

std::string rep_dir_name(int rep) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "rep_%03d", rep);
  return buf;
}

int cmd_simulate(const SimulateOptions& opt, std::ostream& out) {
  Scenario sc = scenario_from_json(read_text(opt.scenario));
  if (opt.seed) sc.seed = *opt.seed;
  if (opt.reps < 1) throw UsageError("--reps must be >= 1");
  const fs::path root(opt.out);
  ensure_directory(root);

  for (int rep = 0; rep < opt.reps; ++rep) {
    const fs::path dir = opt.reps == 1 ? root : root / rep_dir_name(rep);
    ensure_directory(dir);
    write_replication(dir, replicate_dataset(sc, rep), opt.header);
  }

  StudyConfig cfg;
  cfg.methods = parse_methods(opt.methods, sc);
  if (cfg.methods.empty()) {
    out << "wrote " << opt.reps << " replication(s) to " << root.string() << "\n";
    return kOk;
  }
  // Replications run in parallel when there are several; otherwise the
  // folds of a single replication do. Output is identical either way.
  cfg.threads = opt.reps > 1 ? opt.threads : 1;
  cfg.plan = make_plan(opt.folds, opt.grid, sc.seed, opt.reps > 1 ? 1 : opt.threads);
  cfg.solver.init_plan = cfg.plan;
  cfg.per_observation = opt.per_observation;
  const auto results = run_study(sc, opt.reps, cfg);

  std::string metrics_csv = "rep,method,lambda,model_error,prediction_error,tnr,tpr\n";
  for (const auto& r : results) {
    for (const auto& o : r.outcomes) {
      metrics_csv += std::to_string(r.rep) + "," + to_string(o.method) + "," +
                     format_double(o.lambda) + "," + format_double(o.report.model_error) +
                     "," + format_double(o.report.prediction_error) + "," +
                     format_double(o.report.tnr) + "," + format_double(o.report.tpr) + "\n";
    }
  }
  write_atomic(root / "metrics.csv", metrics_csv);

  std::string summary_csv = "method,metric,count,q1,median,q3\n";
  for (const auto& row : summarize(results)) {
    summary_csv += to_string(row.method) + "," + row.metric + "," +
                   std::to_string(row.count) + "," + format_double(row.q1) + "," +
                   format_double(row.median) + "," + format_double(row.q3) + "\n";
  }
  write_atomic(root / "summary.csv", summary_csv);
  out << summary_csv;
  return kOk;
}

// ---------------------------------------------------------------------------
// fit

struct FitOptions {
  std::string x, y, method, out, config, sigma, initializer;
  std::optional<double> lambda;
  int folds = 5;
  std::vector<double> grid;
  std::uint64_t seed = 0;
  bool header = false;
  bool strict = false;
  int threads = 1;
};

Matrix table_column(const std::vector<double>& scores) {
  return Eigen::Map<const Vector>(scores.data(), static_cast<Eigen::Index>(scores.size()));
}

int cmd_fit(const FitOptions& opt, std::ostream& out) {
  const Method method = method_from(opt.method);
  SolverConfig cfg = load_solver_config(opt.config);
  if (!opt.initializer.empty()) cfg.initializer = initializer_from(opt.initializer);
  const Matrix X = read_csv(opt.x, opt.header);
  const Matrix Y = read_csv(opt.y, opt.header);
  if (X.rows() != Y.rows()) {
    throw DataError("X has " + std::to_string(X.rows()) + " rows but Y has " +
                    std::to_string(Y.rows()));
  }
  const Dataset data = Dataset::centered_from(X, Y);
  if (requires_low_dimension(method) && data.p() >= data.n()) {
    throw UnsupportedRegime(to_string(method) + " is not available when p >= n (p=" +
                            std::to_string(data.p()) + ", n=" + std::to_string(data.n()) +
                            "); use ap-" + to_string(method));
  }
  const CvPlan plan = make_plan(opt.folds, opt.grid, opt.seed, opt.threads);
  cfg.init_plan = plan;
  cfg.init_plan.threads = 1;

  std::optional<TruePrecision> truth;
  if (method == Method::oracle) {
    if (opt.sigma.empty()) throw UsageError("method oracle needs --sigma (true error covariance)");
    const Matrix sigma = read_csv(opt.sigma, opt.header);
    if (sigma.rows() != data.q() || sigma.cols() != data.q()) {
      throw DataError("--sigma must be q x q");
    }
    truth = TruePrecision::from_sigma(sigma);
  }

  FitArtifact art;
  art.method = method;
  art.seed = opt.seed;
  FitResult fit;
  if (is_likelihood_method(method)) {
    if (opt.lambda) {
      art.lambda = *opt.lambda;
    } else {
      const CvResult cv =
          cross_validate(data, method, plan, cfg, truth ? &*truth : nullptr);
      art.lambda = cv.lambda;
      art.grid = cv.grid;
      art.cv_table = table_column(cv.scores);
    }
    const Matrix B_init = method == Method::oracle ? Matrix::Zero(data.p(), data.q())
                                                   : initial_B(data, cfg);
    fit = fit_likelihood_method(method, data, art.lambda, cfg, B_init,
                                truth ? &*truth : nullptr);
    if (method != Method::oracle) art.cov = fit.cov;
    art.outer_iters = fit.outer_iters;
    art.objective_trace = fit.objective_trace;
    art.converged = fit.converged;
  } else if (opt.lambda) {
    art.lambda = *opt.lambda;
    if (method == Method::ridge_comb || method == Method::ridge_sep) {
      fit.B = fit_ridge(data, art.lambda);
    } else {
      const auto res = solve_penalized_B(data, Matrix::Identity(data.q(), data.q()),
                                         PenaltySpec{art.lambda, std::nullopt},
                                         Matrix::Zero(data.p(), data.q()), cfg.cd);
      fit.B = res.B;
      art.converged = res.converged;
    }
  } else {
    const BaselineSelection sel = cv_baselines(data, method, plan, cfg.cd);
    fit.B = fit_baseline(data, sel, cfg.cd);
    art.grid = sel.table.grid;
    art.cv_table = sel.table.scores;
    if (sel.lambdas.size() == 1) {
      art.lambda = sel.lambdas[0];
    } else {
      art.lambda = std::numeric_limits<double>::quiet_NaN();
      art.lambdas = sel.lambdas;
    }
  }
  art.B = fit.B;
  art.intercept = intercept_for(data, fit.B);

  if (opt.strict && !art.converged) {
    throw NumericalFailure(to_string(method) + " did not converge (strict mode)");
  }
  write_atomic(opt.out, artifact_to_json(art));
  out << "method=" << to_string(method) << " lambda=" << format_double(art.lambda)
      << " converged=" << (art.converged ? "true" : "false") << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// predict / eval

struct PredictOptions {
  std::string fit, x, out;
  bool header = false;
};

int cmd_predict(const PredictOptions& opt, std::ostream&) {
  const FitArtifact fit = artifact_from_json(read_text(opt.fit));
  const Matrix X = read_csv(opt.x, opt.header);
  const Matrix Y = predict(fit, X);
  write_csv(opt.out, Y,
            opt.header ? column_names("y", Y.cols()) : std::vector<std::string>{});
  return kOk;
}

struct EvalOptions {
  std::string fit, b_true, sigma_x, y_test, x_test;
  bool header = false;
  bool per_observation = false;
};

int cmd_eval(const EvalOptions& opt, std::ostream& out) {
  const FitArtifact fit = artifact_from_json(read_text(opt.fit));
  const Matrix B_true = read_csv(opt.b_true, opt.header);
  const Matrix Sx = read_csv(opt.sigma_x, opt.header);
  const Matrix Y_test = read_csv(opt.y_test, opt.header);
  const Matrix X_test = read_csv(opt.x_test, opt.header);
  if (X_test.rows() != Y_test.rows()) throw DataError("test X and Y differ in row count");
  MetricsReport m;
  try {
    m = metrics(fit.B, B_true, Sx, Y_test, predict(fit, X_test), opt.per_observation);
  } catch (const InvalidInput& e) {
    throw DataError(e.what());
  }
  out << "model_error,prediction_error,tnr,tpr\n"
      << format_double(m.model_error) << "," << format_double(m.prediction_error) << ","
      << format_double(m.tnr) << "," << format_double(m.tpr) << "\n";
  out << "model error:      " << m.model_error << "\n"
      << "prediction error: " << m.prediction_error << "\n"
      << "TNR:              " << m.tnr << "\n"
      << "TPR:              " << m.tpr << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// asymptotics

struct AsymptoticsOptions {
  AsymptoticsConfig cfg;
  std::string out;
};

std::string asymptotics_csv(const std::vector<AsymptoticsRow>& rows) {
  std::string csv =
      "n,reps,mean_theta,mean_eta2,sd_eta2,rmse_theta,rmse_eta2,sqrt_n_rmse_theta,"
      "sqrt_n_rmse_eta2,var_sqrt_n_theta,zero_recovery,nonzero_recovery,mean_tnr,"
      "mean_tpr,nonconverged\n";
  for (const auto& r : rows) {
    csv += std::to_string(r.n) + "," + std::to_string(r.reps) + "," +
           format_double(r.mean_theta) + "," + format_double(r.mean_eta2) + "," +
           format_double(r.sd_eta2) + "," + format_double(r.rmse_theta) + "," +
           format_double(r.rmse_eta2) + "," + format_double(r.sqrt_n_rmse_theta) + "," +
           format_double(r.sqrt_n_rmse_eta2) + "," + format_double(r.var_sqrt_n_theta) +
           "," + format_double(r.zero_recovery) + "," + format_double(r.nonzero_recovery) +
           "," + format_double(r.mean_tnr) + "," + format_double(r.mean_tpr) + "," +
           std::to_string(r.nonconverged) + "\n";
  }
  return csv;
}

int cmd_asymptotics(const AsymptoticsOptions& opt, std::ostream& out) {
  const std::string csv = asymptotics_csv(asymptotics_harness(opt.cfg));
  if (!opt.out.empty()) write_atomic(opt.out, csv);
  out << csv;
  return kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse multivariate regression with equicorrelated errors", "mrcs"};
  app.require_subcommand(1);

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Generate replications and score methods");
  simulate->add_option("--scenario", sim.scenario, "Scenario JSON file")->required();
  simulate->add_option("--reps", sim.reps, "Number of replications")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Override the scenario seed");
  simulate->add_option("--out", sim.out, "Output directory")->required();
  simulate->add_option("--threads", sim.threads, "Worker threads")->capture_default_str();
  simulate->add_option("--methods", sim.methods,
                       "Comma-separated methods, or 'none' to only write data")
      ->delimiter(',');
  simulate->add_option("--cv-folds", sim.folds, "Cross-validation folds")->capture_default_str();
  simulate->add_option("--grid", sim.grid, "Comma-separated lambda grid")->delimiter(',');
  simulate->add_flag("--header", sim.header, "Write a header row in CSV files");
  simulate->add_flag("--per-observation", sim.per_observation,
                     "Report prediction error per test row");

  FitOptions fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit one method to CSV data");
  fit_cmd->add_option("--x", fit.x, "Predictor CSV (n x p)")->required();
  fit_cmd->add_option("--y", fit.y, "Response CSV (n x q)")->required();
  fit_cmd->add_option("--method", fit.method, "Estimator")->required();
  fit_cmd->add_option("--lambda", fit.lambda, "Fixed lambda (otherwise chosen by CV)");
  fit_cmd->add_option("--cv-folds", fit.folds, "Cross-validation folds")->capture_default_str();
  fit_cmd->add_option("--grid", fit.grid, "Comma-separated lambda grid")->delimiter(',');
  fit_cmd->add_option("--seed", fit.seed, "Fold assignment seed")->capture_default_str();
  fit_cmd->add_option("--config", fit.config, "Solver config JSON");
  fit_cmd->add_option("--initializer", fit.initializer,
                      "combined-lasso, separate-lasso or zero");
  fit_cmd->add_option("--sigma", fit.sigma, "True error covariance CSV (oracle only)");
  fit_cmd->add_option("--out", fit.out, "Fit artifact (JSON)")->required();
  fit_cmd->add_flag("--header", fit.header, "CSV inputs have a header row");
  fit_cmd->add_flag("--strict", fit.strict, "Exit with status 4 on non-convergence");
  fit_cmd->add_option("--threads", fit.threads, "Worker threads")->capture_default_str();

  PredictOptions pred;
  auto* predict_cmd = app.add_subcommand("predict", "Predict responses from a fit");
  predict_cmd->add_option("--fit", pred.fit, "Fit artifact")->required();
  predict_cmd->add_option("--x", pred.x, "Predictor CSV")->required();
  predict_cmd->add_option("--out", pred.out, "Prediction CSV")->required();
  predict_cmd->add_flag("--header", pred.header, "CSV files have a header row");

  EvalOptions ev;
  auto* eval_cmd = app.add_subcommand("eval", "Score a fit against the truth");
  eval_cmd->add_option("--fit", ev.fit, "Fit artifact")->required();
  eval_cmd->add_option("--b-true", ev.b_true, "True coefficient CSV")->required();
  eval_cmd->add_option("--sigma-x", ev.sigma_x, "Predictor covariance CSV")->required();
  eval_cmd->add_option("--y-test", ev.y_test, "Test responses CSV")->required();
  eval_cmd->add_option("--x-test", ev.x_test, "Test predictors CSV")->required();
  eval_cmd->add_flag("--header", ev.header, "CSV files have a header row");
  eval_cmd->add_flag("--per-observation", ev.per_observation,
                     "Report prediction error per test row");

  AsymptoticsOptions asy;
  auto* asy_cmd = app.add_subcommand("asymptotics", "Monte Carlo check of the adaptive-lasso asymptotics");
  asy_cmd->add_option("--p", asy.cfg.p)->capture_default_str();
  asy_cmd->add_option("--q", asy.cfg.q)->capture_default_str();
  asy_cmd->add_option("--theta", asy.cfg.theta)->capture_default_str();
  asy_cmd->add_option("--eta2", asy.cfg.eta2)->capture_default_str();
  asy_cmd->add_option("--n-list", asy.cfg.n_list, "Comma-separated sample sizes")
      ->delimiter(',')
      ->capture_default_str();
  asy_cmd->add_option("--reps", asy.cfg.reps)->capture_default_str();
  asy_cmd->add_option("--r", asy.cfg.r, "Adaptive weight exponent")->capture_default_str();
  asy_cmd->add_option("--lambda-scale", asy.cfg.lambda_scale, "lambda_n = scale / n")
      ->capture_default_str();
  asy_cmd->add_option("--seed", asy.cfg.seed)->capture_default_str();
  asy_cmd->add_option("--threads", asy.cfg.threads)->capture_default_str();
  asy_cmd->add_option("--out", asy.out, "Also write the table to this CSV file");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sim, out);
    if (fit_cmd->parsed()) return cmd_fit(fit, out);
    if (predict_cmd->parsed()) return cmd_predict(pred, out);
    if (eval_cmd->parsed()) return cmd_eval(ev, out);
    if (asy_cmd->parsed()) return cmd_asymptotics(asy, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const InvalidPlan& e) {
    err << "invalid plan: " << e.what() << "\n";
    return kDataError;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const InvalidInput& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const UnsupportedRegime& e) {
    err << "unsupported: " << e.what() << "\n";
    return kDataError;
  } catch (const DegenerateResidual& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInternal;
  }
  return kUsage;
}

}  // namespace mrcs::cli
