#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mrcs/rng.hpp"
#include "mrcs/solvers.hpp"
#include "mrcs/types.hpp"

namespace mrcs {

/// Marginal error scales eta_1..eta_q.
struct EtaSpec {
  enum class Kind { constant, explicit_vector, asymmetric_preset };
  Kind kind = Kind::constant;
  double value = 1.0;  ///< constant
  Vector values;       ///< explicit_vector
};

/// Two-point law Ber(p, a, b): a with probability p, b otherwise.
struct TwoPoint {
  double p = 0.5;
  double a = 0.1;
  double b = 10.0;
};

enum class CovFamily { compound_symmetry, general_equicorrelation, corrupted };
enum class BFamily { bernoulli_mask, uniform_dense };

struct Scenario {
  int n = 50;
  int p = 20;
  int q = 50;
  double s1 = 0.5;
  double s2 = 0.5;
  double theta = 0.9;
  EtaSpec eta;
  CovFamily cov_family = CovFamily::compound_symmetry;
  double omega = 0.0;  ///< corruption level, corrupted family only
  TwoPoint d_law;      ///< eigenvalue law of the corrupting matrix
  BFamily b_family = BFamily::bernoulli_mask;
  double b_bound = 0.25;  ///< uniform_dense: entries on (-b_bound, b_bound)
  int test_n = 200;
  std::uint64_t seed = 0;

  void validate() const;
};

/// eta_1..eta_q for the scenario. Asymmetric presets exist for q = 50, 20
/// and 80 (the (20,50), (50,20) and (80,80) designs).
Vector resolve_etas(const EtaSpec& spec, int q);
Vector asymmetric_eta_preset(int q);

/// B = W * K * Q (elementwise). W ~ N(0,1), K ~ Ber(s1) entrywise, and each
/// row of Q is all ones with probability s2, otherwise all zeros.
Matrix gen_B(int p, int q, double s1, double s2, CounterRng& rng);
/// Entries iid uniform on (-bound, bound).
Matrix gen_B_uniform(int p, int q, double bound, CounterRng& rng);

/// (Sigma_X)_ij = 0.7^|i-j|.
Matrix sigma_x(int p);
/// mu = (1, 1 + 4/(q-1), ..., 5); mu = (3) when q = 1.
Vector response_means(int q);

/// Orthonormal columns by classical Gram-Schmidt with a second
/// re-orthogonalization pass. Returns false if a column collapses.
bool gram_schmidt(Matrix& M);

/// (1-omega) 0.5 (0.1 I + 0.9 11') + omega V D V' with V a Gram-Schmidt
/// orthogonalized Gaussian draw (redrawn up to 10 times if rank deficient)
/// and D iid from the two-point law.
Matrix gen_corrupted_sigma(int q, double omega, const TwoPoint& law, CounterRng& rng);

/// Error covariance of the scenario. Only the corrupted family consumes
/// random draws.
Matrix gen_sigma(const Scenario& sc, CounterRng& rng);

/// Ratio of largest to smallest eigenvalue of a symmetric matrix.
double condition_number(const Matrix& S);

struct SimulatedData {
  Dataset train;  ///< centered
  Dataset test;   ///< raw
  Matrix B_true;
  Matrix sigma_x;
  Matrix sigma_true;
  /// Equicorrelation parameters of sigma_true; absent for the corrupted family.
  std::optional<CovParams> cov_true;
};

/// Draws B*, Sigma*, n training rows and test_n test rows of
/// Y = mu + X B* + eps. Independent sub-streams of rng's key are used for
/// each component, so changing test_n does not perturb the training data.
SimulatedData gen_dataset(const Scenario& sc, CounterRng& rng);

/// Rows iid N(0, S): Z L' with L the Cholesky factor of S.
Matrix draw_gaussian_rows(int n, const Matrix& S, CounterRng& rng);

struct MetricsReport {
  double model_error = 0.0;
  double prediction_error = 0.0;
  double tnr = 0.0;  ///< NaN when B* has no zero entries
  double tpr = 0.0;  ///< NaN when B* has no nonzero entries
};

/// Model error tr[(B-B*)' Sigma_X (B-B*)], test prediction error
/// ||Y_pred - Y_test||_F^2 (divided by the number of test rows when
/// per_observation), and the true negative / positive rates of the support.
MetricsReport metrics(const Matrix& B_hat, const Matrix& B_true, const Matrix& Sigma_X,
                      const Matrix& Y_test, const Matrix& Y_pred,
                      bool per_observation = false);

/**
 * Asymptotic covariance of (E'E/q, E'QE/(q(q-1))) for one Gaussian error row
 * E ~ N(0, Sigma(eta2, theta)) with Q = qI - 11'. Entries use
 * cov(E'AE, E'BE) = 2 tr(A Sigma B Sigma), the Gaussian fourth-moment
 * identity cov(E_j E_k, E_l E_m) = S_jl S_km + S_jm S_kl summed against A, B.
 * V12 carries the factor 2/(q^2 (q-1)).
 */
Matrix limiting_V_gaussian(const CsParams& params, int q);

/// Delta-method gradient of theta = 1 - u2/u1 at the truth; W'VW is the
/// asymptotic variance of sqrt(n)(theta_hat - theta).
Vector theta_delta_gradient(const CsParams& params);

struct AsymptoticsConfig {
  int p = 3;
  int q = 3;
  double theta = 0.5;
  double eta2 = 1.0;
  std::vector<int> n_list{200, 800, 3200};
  int reps = 500;
  double r = 2.0;
  /// lambda_n = lambda_scale / n, so sqrt(n) lambda -> 0 and
  /// n^{(r+1)/2} lambda -> infinity.
  double lambda_scale = 1.0;
  std::uint64_t seed = 0;
  int threads = 1;
  SolverConfig solver;

  void validate() const;
};

struct AsymptoticsRow {
  int n = 0;
  int reps = 0;
  double mean_theta = 0.0;
  double mean_eta2 = 0.0;
  double sd_eta2 = 0.0;
  double rmse_theta = 0.0;
  double rmse_eta2 = 0.0;
  double sqrt_n_rmse_theta = 0.0;
  double sqrt_n_rmse_eta2 = 0.0;
  double var_sqrt_n_theta = 0.0;  ///< empirical variance of sqrt(n)(theta_hat - theta)
  double zero_recovery = 0.0;     ///< share of reps with every true zero estimated as 0
  double nonzero_recovery = 0.0;  ///< share of reps with every true nonzero kept
  double mean_tnr = 0.0;
  double mean_tpr = 0.0;
  int nonconverged = 0;
};

/// Fixed coefficient pattern used by the harness: entry (j, k) is nonzero
/// iff j + k is even, with magnitude 0.5 + 0.25 (j + k) and sign (-1)^k.
Matrix asymptotics_B(int p, int q);

/// For each n: reps datasets with compound-symmetry errors, MRCS fits with
/// adaptive weights w = 1/|B_ols|^r started from the OLS fit, summary rows.
std::vector<AsymptoticsRow> asymptotics_harness(const AsymptoticsConfig& cfg);

// ---------------------------------------------------------------------------
// Replication study

struct StudyConfig {
  std::vector<Method> methods;  ///< empty: every method valid for the scenario
  CvPlan plan;                  ///< folds, grid, threads for all tuning
  SolverConfig solver;
  bool per_observation = false;
  int threads = 1;  ///< replications in parallel
};

struct MethodOutcome {
  Method method = Method::mrcs;
  double lambda = 0.0;  ///< combined or likelihood methods
  Vector lambdas;       ///< separate baselines
  MetricsReport report;
  FitResult fit;
};

struct ReplicationResult {
  int rep = 0;
  std::vector<MethodOutcome> outcomes;
};

/// Methods run by default: the two exact methods only when p < n.
std::vector<Method> default_methods(const Scenario& sc);

/// Label of the RNG stream behind replication `rep`.
std::string replication_label(int rep);

/// Dataset of replication `rep`: gen_dataset on the stream
/// (sc.seed, replication_label(rep)).
SimulatedData replicate_dataset(const Scenario& sc, int rep);

/// Tunes every method by K-fold CV on the training data, refits on all of
/// it and scores the fit on the test rows.
std::vector<MethodOutcome> evaluate_methods(const SimulatedData& sim,
                                            const StudyConfig& cfg);

std::vector<ReplicationResult> run_study(const Scenario& sc, int reps,
                                         const StudyConfig& cfg);

struct SummaryRow {
  Method method = Method::mrcs;
  std::string metric;
  int count = 0;  ///< finite values
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
};

/// Quartiles of each metric per method, ignoring NaN. Values are sorted
/// before summarizing, so the result does not depend on replication order.
std::vector<SummaryRow> summarize(const std::vector<ReplicationResult>& results);

/// Linear-interpolation quantile of a sorted, non-empty sample.
double quantile_sorted(const std::vector<double>& sorted, double prob);

}  // namespace mrcs
