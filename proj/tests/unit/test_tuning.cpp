#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "mrcs/covariance.hpp"
#include "mrcs/kernel.hpp"
#include "mrcs/tuning.hpp"
#include "test_util.hpp"

namespace mrcs {
namespace {

CvPlan small_plan(std::uint64_t seed, int threads = 1) {
  CvPlan plan;
  plan.K = 5;
  plan.grid = {1.0, 0.3, 0.1, 0.03, 0.01};
  plan.seed = seed;
  plan.threads = threads;
  return plan;
}

TEST(CvPlan, DefaultGrid) {
  const auto grid = default_lambda_grid();
  ASSERT_EQ(grid.size(), 15u);
  EXPECT_DOUBLE_EQ(grid.front(), 1000.0);
  EXPECT_DOUBLE_EQ(grid.back(), 1e-4);
  EXPECT_TRUE(std::is_sorted(grid.rbegin(), grid.rend()));
}

TEST(CvPlan, Validation) {
  CvPlan plan;
  plan.K = 1;
  EXPECT_THROW(plan.validate(), InvalidPlan);
  plan = CvPlan{};
  plan.grid = {};
  EXPECT_THROW(plan.validate(), InvalidPlan);
  plan.grid = {1.0, 0.0};
  EXPECT_THROW(plan.validate(), InvalidPlan);
  plan.grid = {0.1, 1.0, 0.1};
  EXPECT_NO_THROW(plan.validate());
  EXPECT_EQ(plan.normalized_grid(), (std::vector<double>{1.0, 0.1}));
}

TEST(Folds, PartitionRows) {
  for (const std::uint64_t seed : {1u, 2u, 3u}) {
    const auto folds = make_folds(23, 5, seed);
    ASSERT_EQ(folds.size(), 5u);
    std::vector<int> seen(23, 0);
    std::size_t smallest = 100, largest = 0;
    for (const auto& f : folds) {
      smallest = std::min(smallest, f.size());
      largest = std::max(largest, f.size());
      for (const auto r : f) ++seen[static_cast<std::size_t>(r)];
      const auto train = training_rows(23, f);
      EXPECT_EQ(train.size() + f.size(), 23u);
    }
    EXPECT_LE(largest - smallest, 1u);
    for (const int c : seen) EXPECT_EQ(c, 1);
  }
  EXPECT_EQ(make_folds(23, 5, 7), make_folds(23, 5, 7));
  EXPECT_NE(make_folds(23, 5, 7), make_folds(23, 5, 8));
  EXPECT_THROW(make_folds(9, 5, 1), InvalidPlan);
}

TEST(Argmin, TiesGoToLargestLambda) {
  EXPECT_EQ(argmin_largest_lambda({3.0, 1.0, 1.0, 2.0}), 1u);
  EXPECT_EQ(argmin_largest_lambda({1.0, 1.0}), 0u);
  EXPECT_EQ(argmin_largest_lambda({5.0}), 0u);
}

TEST(ValidationLoss, Examples) {
  auto rng = CounterRng::stream(61, "tuning/loss");
  const Matrix X = test::gaussian(6, 3, rng);
  const Matrix B = test::gaussian(3, 4, rng);
  EXPECT_DOUBLE_EQ(validation_loss(X * B, X, B, CsParams{1.3, 0.4}), 0.0);

  const Matrix Y = test::gaussian(6, 4, rng);
  const Matrix R = Y - X * B;
  EXPECT_NEAR(validation_loss(Y, X, B, CsParams{1.0, 0.0}), R.squaredNorm() / 6.0, 1e-12);
  const CsParams cs{0.8, 0.6};
  EXPECT_NEAR(validation_loss(Y, X, B, cs),
              test::dense_trace(R, precision_dense(cs, 4)) / 6.0, 1e-10);
  EXPECT_THROW(validation_loss(Y, X, Matrix::Zero(2, 4), cs), InvalidInput);
}

TEST(CrossValidate, SingleLambdaAndDuplicates) {
  auto rng = CounterRng::stream(62, "tuning/single");
  const Dataset d = test::random_dataset(30, 4, 3, rng);
  CvPlan plan = small_plan(3);
  plan.grid = {0.2};
  EXPECT_EQ(cross_validate(d, Method::ap_mrcs, plan, SolverConfig{}).lambda, 0.2);

  plan.grid = {0.1, 1.0, 0.1, 0.01};
  const auto res = cross_validate(d, Method::ap_mrcs, plan, SolverConfig{});
  EXPECT_EQ(res.grid, (std::vector<double>{1.0, 0.1, 0.01}));
  EXPECT_EQ(res.scores.size(), 3u);
}

TEST(CrossValidate, ArgminConsistency) {
  auto rng = CounterRng::stream(63, "tuning/argmin");
  const Dataset d = test::random_dataset(40, 5, 4, rng);
  const auto results = cross_validate(
      d, {Method::mrcs, Method::ap_mrcs, Method::mrgcs, Method::ap_mrgcs}, small_plan(4),
      SolverConfig{});
  for (const auto& r : results) {
    const auto best = std::min_element(r.scores.begin(), r.scores.end());
    EXPECT_EQ(r.index, static_cast<std::size_t>(best - r.scores.begin()));
    EXPECT_EQ(r.lambda, r.grid[r.index]);
  }
}

TEST(CrossValidate, MatchesHandRolledFolds) {
  // Re-derive the ap-mrcs table from the documented recipe.
  auto rng = CounterRng::stream(64, "tuning/manual");
  const Dataset d = test::random_dataset(30, 3, 3, rng);
  const CvPlan plan = small_plan(5);
  const SolverConfig cfg;
  const auto res = cross_validate(d, Method::ap_mrcs, plan, cfg);
  std::vector<double> manual(plan.grid.size(), 0.0);
  for (const auto& fold : make_folds(d.n(), plan.K, plan.seed)) {
    const Dataset train = d.subset_centered(training_rows(d.n(), fold));
    const Matrix B0 = initial_B(train, cfg);
    const CsParams weight = update_cs(train.Y - train.X * B0);
    for (std::size_t g = 0; g < plan.grid.size(); ++g) {
      const auto fit = fit_ap_mrcs(train, PenaltySpec{plan.grid[g], {}}, cfg, B0);
      Matrix Xv(static_cast<Eigen::Index>(fold.size()), d.p());
      Matrix Yv(static_cast<Eigen::Index>(fold.size()), d.q());
      for (std::size_t i = 0; i < fold.size(); ++i) {
        // Raw held-out rows, shifted by the training means.
        Xv.row(static_cast<Eigen::Index>(i)) =
            d.raw_X().row(fold[i]) - train.x_means.transpose();
        Yv.row(static_cast<Eigen::Index>(i)) =
            d.raw_Y().row(fold[i]) - train.y_means.transpose();
      }
      manual[g] += validation_loss(Yv, Xv, fit.B, weight);
    }
  }
  for (std::size_t g = 0; g < manual.size(); ++g) {
    EXPECT_NEAR(res.scores[g], manual[g], 1e-10 * manual[g]);
  }
}

TEST(CrossValidate, DeterministicAcrossThreads) {
  auto rng = CounterRng::stream(65, "tuning/threads");
  const Dataset d = test::random_dataset(40, 4, 4, rng);
  const auto a = cross_validate(d, {Method::mrcs, Method::ap_mrgcs}, small_plan(6, 1),
                                SolverConfig{});
  const auto b = cross_validate(d, {Method::mrcs, Method::ap_mrgcs}, small_plan(6, 4),
                                SolverConfig{});
  const auto c = cross_validate(d, {Method::mrcs, Method::ap_mrgcs}, small_plan(6, 1),
                                SolverConfig{});
  for (std::size_t m = 0; m < a.size(); ++m) {
    EXPECT_EQ(a[m].scores, b[m].scores);
    EXPECT_EQ(a[m].scores, c[m].scores);
    EXPECT_EQ(a[m].lambda, b[m].lambda);
  }
}

TEST(CrossValidate, OracleNeedsTruth) {
  auto rng = CounterRng::stream(66, "tuning/oracle");
  const Dataset d = test::random_dataset(30, 3, 3, rng);
  EXPECT_THROW(cross_validate(d, Method::oracle, small_plan(1), SolverConfig{}), InvalidInput);
  const auto truth = TruePrecision::from_params(CsParams{1.0, 0.5}, 3);
  EXPECT_NO_THROW(cross_validate(d, Method::oracle, small_plan(1), SolverConfig{}, &truth));
  EXPECT_THROW(cross_validate(d, Method::lasso_comb, small_plan(1), SolverConfig{}),
               InvalidInput);
}

TEST(CvBaselines, SingleResponseModesAgree) {
  auto rng = CounterRng::stream(67, "tuning/q1");
  const Dataset d = test::random_dataset(30, 5, 1, rng);
  const auto comb = cv_baselines(d, Method::lasso_comb, small_plan(2));
  const auto sep = cv_baselines(d, Method::lasso_sep, small_plan(2));
  EXPECT_EQ(comb.lambdas[0], sep.lambdas[0]);
  EXPECT_EQ(fit_baseline(d, comb), fit_baseline(d, sep));
  const auto rcomb = cv_baselines(d, Method::ridge_comb, small_plan(2));
  const auto rsep = cv_baselines(d, Method::ridge_sep, small_plan(2));
  EXPECT_EQ(rcomb.lambdas[0], rsep.lambdas[0]);
}

TEST(CvBaselines, PureNoisePicksLargestLambda) {
  int largest = 0;
  const int reps = 20;
  for (int r = 0; r < reps; ++r) {
    auto rng = CounterRng::stream(68, "tuning/noise/rep=" + std::to_string(r));
    const Matrix X = test::gaussian(50, 5, rng);
    const Matrix Y = test::gaussian(50, 3, rng);
    const Dataset d = Dataset::centered_from(X, Y);
    const auto sel = cv_baselines(d, Method::lasso_comb, CvPlan{5, default_lambda_grid(),
                                                               static_cast<std::uint64_t>(r), 1});
    largest += sel.lambdas[0] == sel.table.grid.front();
  }
  EXPECT_GE(largest, 15);
}

TEST(CvBaselines, PerfectDataPicksSmallLambda) {
  auto rng = CounterRng::stream(69, "tuning/perfect");
  const Matrix X = test::gaussian(40, 4, rng);
  const Matrix B = test::gaussian(4, 3, rng);
  const Dataset d = Dataset::centered_from(X, X * B);
  const auto sel = cv_baselines(d, Method::lasso_comb, small_plan(3));
  EXPECT_EQ(sel.lambdas[0], 0.01);
  const auto sep = cv_baselines(d, Method::lasso_sep, small_plan(3));
  for (Eigen::Index k = 0; k < 3; ++k) EXPECT_EQ(sep.lambdas[k], 0.01);
}

TEST(CvBaselines, SeparateLassoUsesColumnLambdas) {
  auto rng = CounterRng::stream(70, "tuning/sep");
  const Dataset d = test::random_dataset(40, 5, 3, rng);
  const auto sel = cv_baselines(d, Method::lasso_sep, small_plan(4));
  const Matrix B = fit_baseline(d, sel);
  for (Eigen::Index k = 0; k < 3; ++k) {
    const Dataset dk = Dataset::raw(d.X, d.Y.col(k));
    const PenaltySpec pen{sel.lambdas[k], {}};
    EXPECT_LE(kkt_residual(dk, Matrix::Identity(1, 1), pen, B.col(k)), 1e-6);
  }
}

}  // namespace
}  // namespace mrcs
