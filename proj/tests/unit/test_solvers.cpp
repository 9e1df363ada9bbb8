#include <gtest/gtest.h>

#include <cmath>

#include "mrcs/covariance.hpp"
#include "mrcs/kernel.hpp"
#include "mrcs/solvers.hpp"
#include "test_util.hpp"

namespace mrcs {
namespace {

SolverConfig tight_config() {
  SolverConfig cfg;
  cfg.epsilon = 1e-13;
  cfg.max_outer = 5000;
  cfg.inner_tol = 1e-15;
  cfg.inner_max = 20000;
  cfg.cd = CdConfig{1e-12, 100000, true};
  return cfg;
}

Matrix least_squares(const Dataset& d) {
  return (d.X.transpose() * d.X).ldlt().solve(d.X.transpose() * d.Y);
}

double scale_of(const Dataset& d) { return d.Y.squaredNorm() / static_cast<double>(d.n()); }

void expect_non_increasing(const std::vector<double>& trace, double tol) {
  for (std::size_t i = 1; i < trace.size(); ++i) {
    EXPECT_LE(trace[i], trace[i - 1] + tol) << "step " << i;
  }
}

TEST(FitMrcs, HugeLambdaKeepsBAtZero) {
  auto rng = CounterRng::stream(41, "solvers/huge");
  const Dataset d = test::random_dataset(30, 4, 3, rng);
  const auto fit = fit_mrcs(d, PenaltySpec{1e6, {}}, SolverConfig{}, Matrix::Zero(4, 3));
  EXPECT_EQ(fit.B.cwiseAbs().maxCoeff(), 0.0);
  const CsParams expected = update_cs(d.Y);
  const auto& cs = std::get<CsParams>(fit.cov);
  EXPECT_DOUBLE_EQ(cs.eta2, expected.eta2);
  EXPECT_DOUBLE_EQ(cs.theta, expected.theta);
  EXPECT_TRUE(fit.converged);
  EXPECT_LE(fit.outer_iters, 2);
  EXPECT_TRUE(fit.intercept.isApprox(d.y_means));
}

TEST(FitMrcs, DescendsFromInitializer) {
  auto rng = CounterRng::stream(42, "solvers/descent");
  const Dataset d = test::random_dataset(30, 5, 4, rng);
  SolverConfig cfg;
  const Matrix B0 = initial_B(d, cfg);
  const auto fit = fit_mrcs(d, PenaltySpec{0.05, {}}, cfg, B0);
  ASSERT_GE(fit.objective_trace.size(), 2u);
  const double tol = 1e-9 * scale_of(d);
  expect_non_increasing(fit.objective_trace, tol);
  const double start =
      penalized_objective(d, B0, CsParams{1.0, 0.0}, PenaltySpec{0.05, {}});
  EXPECT_DOUBLE_EQ(fit.objective_trace.front(), start);
  for (const double f : fit.objective_trace) EXPECT_LE(fit.objective_trace.back(), f + tol);
  EXPECT_LE(fit.outer_iters, cfg.max_outer);
}

TEST(FitMrcs, RefusesHighDimension) {
  auto rng = CounterRng::stream(43, "solvers/highdim");
  const Dataset d = test::random_dataset(10, 12, 3, rng);
  EXPECT_THROW(fit_mrcs(d, PenaltySpec{0.1, {}}, SolverConfig{}, Matrix::Zero(12, 3)),
               UnsupportedRegime);
  EXPECT_THROW(fit_mrgcs(d, PenaltySpec{0.1, {}}, SolverConfig{}, Matrix::Zero(12, 3)),
               UnsupportedRegime);
  EXPECT_NO_THROW(fit_ap_mrcs(d, PenaltySpec{0.1, {}}, SolverConfig{}, Matrix::Zero(12, 3)));
  EXPECT_NO_THROW(fit_ap_mrgcs(d, PenaltySpec{0.1, {}}, SolverConfig{}, Matrix::Zero(12, 3)));
}

TEST(FitMrcs, NoiselessLeastSquares) {
  auto rng = CounterRng::stream(44, "solvers/noiseless");
  const Matrix X = test::gaussian(40, 3, rng);
  const Matrix B = test::gaussian(3, 4, rng);
  const Dataset d = Dataset::centered_from(X, X * B);
  // Residuals vanish at the truth, so stop at the first exact B step.
  SolverConfig cfg;
  cfg.max_outer = 1;
  const auto fit = fit_mrcs(d, PenaltySpec{0.0, {}}, cfg, Matrix::Zero(3, 4));
  EXPECT_LT((fit.B - B).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(FitApMrcs, SharesCovarianceAcrossLambda) {
  auto rng = CounterRng::stream(45, "solvers/ap");
  const Dataset d = test::random_dataset(40, 5, 4, rng);
  const Matrix B0 = initial_B(d, SolverConfig{});
  const CsParams expected = update_cs(d.Y - d.X * B0);
  for (const double lambda : {1.0, 0.1, 0.01}) {
    const auto fit = fit_ap_mrcs(d, PenaltySpec{lambda, {}}, SolverConfig{}, B0);
    const auto& cs = std::get<CsParams>(fit.cov);
    EXPECT_EQ(cs.eta2, expected.eta2);
    EXPECT_EQ(cs.theta, expected.theta);
  }
}

TEST(FitApMrcs, LambdaZeroIsLeastSquares) {
  auto rng = CounterRng::stream(46, "solvers/ap-ls");
  const Dataset d = test::random_dataset(40, 5, 4, rng);
  const auto fit = fit_ap_mrcs(d, PenaltySpec{0.0, {}}, tight_config(), Matrix::Zero(5, 4));
  EXPECT_LT((fit.B - least_squares(d)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(FitApMrcs, NeverBeatsMrcs) {
  auto rng = CounterRng::stream(47, "solvers/ap-vs-full");
  for (int t = 0; t < 10; ++t) {
    const Dataset d = test::random_dataset(40, 6, 5, rng);
    const SolverConfig cfg;
    const Matrix B0 = initial_B(d, cfg);
    const PenaltySpec pen{0.05, {}};
    const auto ap = fit_ap_mrcs(d, pen, cfg, B0);
    const auto full = fit_mrcs(d, pen, cfg, B0);
    EXPECT_GE(penalized_objective(d, ap.B, ap.cov, pen) + 1e-9 * scale_of(d),
              penalized_objective(d, full.B, full.cov, pen));
  }
}

TEST(FitApMrcs, EqualsOneOuterIterationOfMrcs) {
  auto rng = CounterRng::stream(48, "solvers/ap-one-step");
  const Dataset d = test::random_dataset(35, 5, 4, rng);
  SolverConfig cfg;
  const Matrix B0 = initial_B(d, cfg);
  const PenaltySpec pen{0.02, {}};
  const auto ap = fit_ap_mrcs(d, pen, cfg, B0);
  cfg.max_outer = 1;
  const auto one = fit_mrcs(d, pen, cfg, B0);
  EXPECT_EQ(ap.B, one.B);
  EXPECT_EQ(std::get<CsParams>(ap.cov).theta, std::get<CsParams>(one.cov).theta);
}

TEST(FitMrgcs, DescendsAndStops) {
  auto rng = CounterRng::stream(49, "solvers/mrgcs");
  for (int t = 0; t < 5; ++t) {
    Dataset d = test::random_dataset(40, 4, 5, rng);
    for (int k = 0; k < 5; ++k) d.Y.col(k) *= 0.5 + k;
    const SolverConfig cfg;
    const auto fit = fit_mrgcs(d, PenaltySpec{0.05, {}}, cfg, initial_B(d, cfg));
    expect_non_increasing(fit.objective_trace, 1e-9 * scale_of(d));
    EXPECT_LE(fit.outer_iters, cfg.max_outer);
  }
}

Dataset exchangeable_pair(CounterRng& rng, int n) {
  // Every row (u, v) appears alongside (v, u).
  Matrix Y(2 * n, 2);
  for (int i = 0; i < n; ++i) {
    const double common = rng.normal();
    const double u = common + rng.normal();
    const double v = common + rng.normal();
    Y.row(2 * i) << u, v;
    Y.row(2 * i + 1) << v, u;
  }
  return Dataset::centered_from(test::gaussian(2 * n, 1, rng), Y);
}

TEST(FitMrgcs, ExchangeableColumnsGiveEqualScales) {
  auto rng = CounterRng::stream(50, "solvers/exchangeable");
  const Dataset d = exchangeable_pair(rng, 30);
  const auto full = fit_mrgcs(d, PenaltySpec{1e6, {}}, tight_config(), Matrix::Zero(1, 2));
  const auto& g = std::get<GenEqParams>(full.cov);
  EXPECT_NEAR(g.etas[0], g.etas[1], 1e-6);
  const auto ap = fit_ap_mrgcs(d, PenaltySpec{1e6, {}}, tight_config(), Matrix::Zero(1, 2));
  const auto& ga = std::get<GenEqParams>(ap.cov);
  EXPECT_NEAR(ga.etas[0], ga.etas[1], 1e-6);
}

TEST(FitApMrgcs, InnerCyclesDescend) {
  auto rng = CounterRng::stream(51, "solvers/inner");
  Dataset d = test::random_dataset(50, 3, 6, rng);
  for (int k = 0; k < 6; ++k) d.Y.col(k) *= 0.3 + 0.4 * k;
  SolverConfig cfg = tight_config();
  const Matrix B0 = Matrix::Zero(3, 6);
  double previous = covariance_block_objective(d.Y, GenEqParams{Vector::Ones(6), 0.0});
  for (int cycles = 1; cycles <= 15; ++cycles) {
    cfg.inner_max = cycles;
    const auto fit = fit_ap_mrgcs(d, PenaltySpec{1e6, {}}, cfg, B0);
    const double now = covariance_block_objective(d.Y, fit.cov);
    EXPECT_LE(now, previous + 1e-12 * std::abs(previous));
    previous = now;
  }
}

TEST(FitApMrgcs, DiagonalTruthGivesSmallTheta) {
  auto rng = CounterRng::stream(52, "solvers/diag");
  const Matrix X = test::gaussian(200, 3, rng);
  Matrix E = test::gaussian(200, 5, rng);
  for (int k = 0; k < 5; ++k) E.col(k) *= 0.5 + 0.5 * k;
  const Dataset d = Dataset::centered_from(X, E);
  const auto fit = fit_ap_mrgcs(d, 0.01, SolverConfig{});
  EXPECT_LT(std::get<GenEqParams>(fit.cov).theta, 0.05);
}

TEST(FitMrgcs, EtaSpreadShrinksWithN) {
  // Equal true scales: the estimated etas concentrate as n grows.
  auto spread_at = [](int n) {
    double total = 0.0;
    const int reps = 50;
    for (int r = 0; r < reps; ++r) {
      auto rng = CounterRng::stream(53, "solvers/spread/n=" + std::to_string(n) +
                                            "/rep=" + std::to_string(r));
      const Matrix X = test::gaussian(n, 2, rng);
      Matrix E = test::gaussian(n, 4, rng);
      E.colwise() += test::gaussian(n, 1, rng).col(0);
      const Dataset d = Dataset::centered_from(X, E);
      SolverConfig cfg;
      cfg.initializer = Initializer::zero;
      const auto fit = fit_mrgcs(d, PenaltySpec{0.01, {}}, cfg, Matrix::Zero(2, 4));
      const Vector& etas = std::get<GenEqParams>(fit.cov).etas;
      total += etas.maxCoeff() - etas.minCoeff();
    }
    return total / reps;
  };
  const double small = spread_at(40);
  const double large = spread_at(640);
  EXPECT_LT(large, 0.5 * small);
}

TEST(FitOracle, Examples) {
  auto rng = CounterRng::stream(54, "solvers/oracle");
  const Dataset d = test::random_dataset(40, 5, 4, rng);
  const CdConfig cd{1e-12, 100000, true};
  const Matrix eye = Matrix::Identity(4, 4);
  const Matrix via_oracle = fit_oracle(d, 0.1, eye, Matrix::Zero(5, 4), cd);
  const Matrix via_lasso =
      solve_penalized_B(d, eye, PenaltySpec{0.1, {}}, Matrix::Zero(5, 4), cd).B;
  EXPECT_LT((via_oracle - via_lasso).cwiseAbs().maxCoeff(), 1e-10);

  const Matrix omega = test::random_spd(4, rng);
  EXPECT_LT((fit_oracle(d, 0.0, omega, Matrix::Zero(5, 4), cd) - least_squares(d))
                .cwiseAbs()
                .maxCoeff(),
            1e-6);
  const Matrix B = fit_oracle(d, 0.07, omega);
  EXPECT_LE(kkt_residual(d, omega, PenaltySpec{0.07, {}}, B), 1e-6);

  const auto truth = TruePrecision::from_params(CsParams{1.5, 0.7}, 4);
  const Matrix structured = fit_oracle(d, 0.07, truth, Matrix::Zero(5, 4), cd);
  EXPECT_LE(kkt_residual(d, truth.omega, PenaltySpec{0.07, {}}, structured), 1e-6);
}

TEST(SolversProperty, LambdaZeroAgreement) {
  auto rng = CounterRng::stream(55, "solvers/lambda0");
  for (int t = 0; t < 5; ++t) {
    const int p = test::uniform_int(2, 5, rng);
    const int q = test::uniform_int(2, 5, rng);
    const Dataset d = test::random_dataset(p + q + 20, p, q, rng);
    const SolverConfig cfg = tight_config();
    const Matrix B0 = Matrix::Zero(p, q);
    const Matrix ls = least_squares(d);
    const auto truth = TruePrecision::from_sigma(test::random_spd(q, rng));
    const std::vector<Matrix> fits{
        fit_mrcs(d, PenaltySpec{0.0, {}}, cfg, B0).B,
        fit_ap_mrcs(d, PenaltySpec{0.0, {}}, cfg, B0).B,
        fit_mrgcs(d, PenaltySpec{0.0, {}}, cfg, B0).B,
        fit_ap_mrgcs(d, PenaltySpec{0.0, {}}, cfg, B0).B,
        fit_oracle(d, 0.0, truth, B0, cfg.cd)};
    for (const auto& B : fits) EXPECT_LT((B - ls).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(SolversProperty, ResponsePermutationEquivariance) {
  auto rng = CounterRng::stream(56, "solvers/equivariance");
  const int p = 4, q = 5;
  Dataset d = test::random_dataset(45, p, q, rng);
  for (int k = 0; k < q; ++k) d.Y.col(k) *= 0.5 + 0.3 * k;
  const auto perm = permutation(q, rng);
  Dataset dp = d;
  // Column k of the permuted data is column perm[k] of the original.
  for (int k = 0; k < q; ++k) {
    dp.Y.col(k) = d.Y.col(static_cast<Eigen::Index>(perm[k]));
    dp.y_means[k] = d.y_means[static_cast<Eigen::Index>(perm[k])];
  }
  auto permute_cols = [&](const Matrix& B) {
    Matrix out(B.rows(), q);
    for (int k = 0; k < q; ++k) out.col(k) = B.col(static_cast<Eigen::Index>(perm[k]));
    return out;
  };
  const SolverConfig cfg = tight_config();
  const Matrix B0 = Matrix::Zero(p, q);
  const PenaltySpec pen{0.03, {}};

  auto check = [&](const FitResult& a, const FitResult& b, double tol) {
    EXPECT_LT((permute_cols(a.B) - b.B).cwiseAbs().maxCoeff(), tol);
    if (const auto* ga = std::get_if<GenEqParams>(&a.cov)) {
      const auto& gb = std::get<GenEqParams>(b.cov);
      for (int k = 0; k < q; ++k) {
        EXPECT_NEAR(ga->etas[static_cast<Eigen::Index>(perm[k])], gb.etas[k], tol);
      }
    }
  };
  check(fit_mrcs(d, pen, cfg, B0), fit_mrcs(dp, pen, cfg, B0), 1e-8);
  check(fit_ap_mrcs(d, pen, cfg, B0), fit_ap_mrcs(dp, pen, cfg, B0), 1e-8);
  // The eta cycle visits responses in order, so agreement is at convergence.
  check(fit_mrgcs(d, pen, cfg, B0), fit_mrgcs(dp, pen, cfg, B0), 1e-5);
  check(fit_ap_mrgcs(d, pen, cfg, B0), fit_ap_mrgcs(dp, pen, cfg, B0), 1e-5);

  const Matrix sigma = test::random_spd(q, rng);
  Matrix sigma_p(q, q);
  for (int a = 0; a < q; ++a) {
    for (int b = 0; b < q; ++b) {
      sigma_p(a, b) = sigma(static_cast<Eigen::Index>(perm[a]), static_cast<Eigen::Index>(perm[b]));
    }
  }
  const Matrix Bo = fit_oracle(d, 0.03, TruePrecision::from_sigma(sigma), B0, cfg.cd);
  const Matrix Bop = fit_oracle(dp, 0.03, TruePrecision::from_sigma(sigma_p), B0, cfg.cd);
  EXPECT_LT((permute_cols(Bo) - Bop).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(InitB, SingleResponseModesCoincide) {
  auto rng = CounterRng::stream(57, "solvers/init-q1");
  const Dataset d = test::random_dataset(40, 6, 1, rng);
  const auto grid = default_lambda_grid();
  EXPECT_EQ(init_B(d, 5, grid, InitMode::combined, 9), init_B(d, 5, grid, InitMode::separate, 9));
}

TEST(InitB, Deterministic) {
  auto rng = CounterRng::stream(58, "solvers/init-det");
  const Dataset d = test::random_dataset(40, 6, 3, rng);
  const auto grid = default_lambda_grid();
  EXPECT_EQ(init_B(d, 5, grid, InitMode::combined, 4), init_B(d, 5, grid, InitMode::combined, 4));
  EXPECT_EQ(init_B(d, 5, grid, InitMode::separate, 4), init_B(d, 5, grid, InitMode::separate, 4));
}

TEST(InitB, NoiselessRecoversTruth) {
  // The grid must be strictly positive, so a tiny lambda stands in for 0.
  auto rng = CounterRng::stream(59, "solvers/init-noiseless");
  const Matrix X = test::gaussian(40, 4, rng);
  const Matrix B = test::gaussian(4, 3, rng);
  const Dataset d = Dataset::centered_from(X, X * B);
  const Matrix B0 = init_B(d, 5, {1.0, 0.1, 1e-10}, InitMode::combined, 1);
  EXPECT_LT((B0 - B).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(SolverConfig, Validation) {
  SolverConfig cfg;
  cfg.epsilon = 0.0;
  EXPECT_THROW(cfg.validate(), InvalidInput);
  cfg = SolverConfig{};
  cfg.max_outer = 0;
  EXPECT_THROW(cfg.validate(), InvalidInput);
}

TEST(Methods, NamesRoundTrip) {
  for (const auto m : {Method::mrcs, Method::ap_mrcs, Method::mrgcs, Method::ap_mrgcs,
                       Method::oracle, Method::lasso_comb, Method::lasso_sep,
                       Method::ridge_comb, Method::ridge_sep}) {
    EXPECT_EQ(parse_method(to_string(m)), m);
  }
  EXPECT_FALSE(parse_method("mrce").has_value());
}

}  // namespace
}  // namespace mrcs
