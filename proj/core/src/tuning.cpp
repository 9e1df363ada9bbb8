#include "mrcs/tuning.hpp"

#include <algorithm>

#include "mrcs/covariance.hpp"
#include "mrcs/kernel.hpp"
#include "mrcs/parallel.hpp"

namespace mrcs {

namespace {

struct FoldData {
  std::vector<Eigen::Index> rows;  // held out
  Dataset train;
};

std::vector<FoldData> split(const Dataset& data, const CvPlan& plan) {
  const auto folds = make_folds(data.n(), plan.K, plan.seed);
  std::vector<FoldData> out;
  out.reserve(folds.size());
  for (const auto& fold : folds) {
    out.push_back({fold, data.subset_centered(training_rows(data.n(), fold))});
  }
  return out;
}

// Sums per-fold G x q tables in fold order.
Matrix reduce(const std::vector<Matrix>& per_fold) {
  Matrix total = Matrix::Zero(per_fold.front().rows(), per_fold.front().cols());
  for (const auto& m : per_fold) total += m;
  return total;
}

template <typename FitAt>
LassoCvScores baseline_scores(const Dataset& data, const CvPlan& plan,
                              FitAt&& fit_path) {
  plan.validate();
  LassoCvScores out;
  out.grid = plan.normalized_grid();
  const auto folds = split(data, plan);
  std::vector<Matrix> per_fold(folds.size());
  parallel_for(folds.size(), plan.threads, [&](std::size_t f) {
    const auto& fold = folds[f];
    const std::vector<Matrix> path = fit_path(fold.train, out.grid);
    Matrix scores(static_cast<Eigen::Index>(out.grid.size()), data.q());
    for (std::size_t g = 0; g < out.grid.size(); ++g) {
      const Matrix R = heldout_residual(data, fold.rows, fold.train, path[g]);
      scores.row(static_cast<Eigen::Index>(g)) = R.colwise().squaredNorm();
    }
    per_fold[f] = std::move(scores);
  });
  out.scores = reduce(per_fold);
  return out;
}

std::vector<double> to_vector(const Eigen::VectorXd& v) {
  return {v.data(), v.data() + v.size()};
}

}  // namespace

double validation_loss(const Matrix& Y_k, const Matrix& X_k, const Matrix& B,
                       const CsParams& params) {
  if (Y_k.rows() != X_k.rows() || X_k.cols() != B.rows() || Y_k.cols() != B.cols()) {
    throw InvalidInput("validation fold dimensions do not match B");
  }
  if (Y_k.rows() == 0) throw InvalidInput("validation fold is empty");
  return structured_trace(Y_k - X_k * B, params) / static_cast<double>(Y_k.rows());
}

LassoCvScores lasso_cv_scores(const Dataset& data, const CvPlan& plan,
                              const CdConfig& cd) {
  const Matrix identity = Matrix::Identity(data.q(), data.q());
  return baseline_scores(data, plan, [&](const Dataset& train,
                                         const std::vector<double>& grid) {
    return lasso_path(train, identity, grid, Matrix::Zero(train.p(), train.q()), cd);
  });
}

LassoCvScores ridge_cv_scores(const Dataset& data, const CvPlan& plan) {
  return baseline_scores(data, plan, [&](const Dataset& train,
                                         const std::vector<double>& grid) {
    std::vector<Matrix> path;
    path.reserve(grid.size());
    for (const double lambda : grid) path.push_back(fit_ridge(train, lambda));
    return path;
  });
}

BaselineSelection cv_baselines(const Dataset& data, Method method,
                               const CvPlan& plan, const CdConfig& cd) {
  BaselineSelection sel;
  sel.method = method;
  switch (method) {
    case Method::lasso_comb:
    case Method::lasso_sep:
      sel.table = lasso_cv_scores(data, plan, cd);
      break;
    case Method::ridge_comb:
    case Method::ridge_sep:
      sel.table = ridge_cv_scores(data, plan);
      break;
    default:
      throw InvalidInput("cv_baselines does not handle " + to_string(method));
  }
  const auto& grid = sel.table.grid;
  if (method == Method::lasso_comb || method == Method::ridge_comb) {
    const auto idx = argmin_largest_lambda(to_vector(sel.table.scores.rowwise().sum()));
    sel.lambdas = Vector::Constant(1, grid[idx]);
  } else {
    sel.lambdas.resize(data.q());
    for (Eigen::Index k = 0; k < data.q(); ++k) {
      const auto idx = argmin_largest_lambda(to_vector(sel.table.scores.col(k)));
      sel.lambdas[k] = grid[idx];
    }
  }
  return sel;
}

Matrix fit_baseline(const Dataset& data, const BaselineSelection& selection,
                    const CdConfig& cd) {
  const auto& lambdas = selection.lambdas;
  switch (selection.method) {
    case Method::ridge_comb:
      return fit_ridge(data, lambdas[0]);
    case Method::ridge_sep:
      return fit_ridge(data, lambdas);
    case Method::lasso_comb:
    case Method::lasso_sep:
      break;
    default:
      throw InvalidInput("fit_baseline does not handle " + to_string(selection.method));
  }

  // With Omega = I the objective decouples over responses, so one warm-started
  // path serves both lasso variants: column k is read off at its own lambda.
  const double smallest = lambdas.minCoeff();
  std::vector<double> path_grid;
  for (const double l : selection.table.grid) {
    if (l >= smallest) path_grid.push_back(l);
  }
  if (path_grid.empty() || path_grid.back() != smallest) path_grid.push_back(smallest);
  const Matrix identity = Matrix::Identity(data.q(), data.q());
  const auto path =
      lasso_path(data, identity, path_grid, Matrix::Zero(data.p(), data.q()), cd);
  if (selection.method == Method::lasso_comb) return path.back();

  Matrix B(data.p(), data.q());
  for (Eigen::Index k = 0; k < data.q(); ++k) {
    const auto it = std::find(path_grid.begin(), path_grid.end(), lambdas[k]);
    B.col(k) = path[static_cast<std::size_t>(it - path_grid.begin())].col(k);
  }
  return B;
}

std::vector<CvResult> cross_validate(const Dataset& data,
                                     const std::vector<Method>& methods,
                                     const CvPlan& plan, const SolverConfig& cfg,
                                     const TruePrecision* truth) {
  plan.validate();
  cfg.validate();
  for (const auto m : methods) {
    if (!is_likelihood_method(m)) {
      throw InvalidInput("cross_validate handles likelihood methods; use cv_baselines for " +
                         to_string(m));
    }
    if (m == Method::oracle && truth == nullptr) {
      throw InvalidInput("oracle tuning needs the true Omega");
    }
  }
  const auto grid = plan.normalized_grid();
  const auto folds = split(data, plan);

  // Per-fold initializer and the one-step compound-symmetry weighting.
  std::vector<Matrix> init(folds.size());
  std::vector<CsParams> weighting(folds.size());
  parallel_for(folds.size(), plan.threads, [&](std::size_t f) {
    const auto& train = folds[f].train;
    init[f] = initial_B(train, cfg);
    weighting[f] = update_cs(train.Y - train.X * init[f]);
  });

  const std::size_t G = grid.size();
  const std::size_t F = folds.size();
  std::vector<double> loss(methods.size() * F * G);
  parallel_for(loss.size(), plan.threads, [&](std::size_t task) {
    const std::size_t mi = task / (F * G);
    const std::size_t f = (task / G) % F;
    const std::size_t g = task % G;
    const auto& fold = folds[f];
    const auto fit = fit_likelihood_method(methods[mi], fold.train, grid[g], cfg,
                                           init[f], truth);
    const Matrix R = heldout_residual(data, fold.rows, fold.train, fit.B);
    const double m = static_cast<double>(R.rows());
    if (methods[mi] == Method::oracle) {
      loss[task] = (R.transpose() * R * truth->omega).trace() / m;
    } else {
      loss[task] = structured_trace(R, weighting[f]) / m;
    }
  });

  std::vector<CvResult> results;
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    CvResult r;
    r.method = methods[mi];
    r.grid = grid;
    r.scores.assign(G, 0.0);
    for (std::size_t f = 0; f < F; ++f) {
      for (std::size_t g = 0; g < G; ++g) r.scores[g] += loss[(mi * F + f) * G + g];
    }
    r.index = argmin_largest_lambda(r.scores);
    r.lambda = grid[r.index];
    results.push_back(std::move(r));
  }
  return results;
}

CvResult cross_validate(const Dataset& data, Method method, const CvPlan& plan,
                        const SolverConfig& cfg, const TruePrecision* truth) {
  return cross_validate(data, std::vector<Method>{method}, plan, cfg, truth)
      .front();
}

}  // namespace mrcs
