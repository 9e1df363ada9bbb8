#include "mrcs/cv.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "mrcs/rng.hpp"

namespace mrcs {

std::vector<double> default_lambda_grid() {
  std::vector<double> grid;
  for (int k = 14; k >= 0; --k) grid.push_back(std::pow(10.0, -4.0 + 0.5 * k));
  return grid;
}

void CvPlan::validate() const {
  if (K < 2) throw InvalidPlan("cross-validation needs K >= 2");
  if (grid.empty()) throw InvalidPlan("lambda grid is empty");
  for (const double l : grid) {
    if (!(l > 0.0) || !std::isfinite(l)) {
      throw InvalidPlan("lambda grid values must be positive and finite");
    }
  }
}

std::vector<double> CvPlan::normalized_grid() const {
  std::vector<double> g = grid;
  std::sort(g.begin(), g.end(), std::greater<>());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

std::vector<std::vector<Eigen::Index>> make_folds(Eigen::Index n, int K,
                                                  std::uint64_t seed) {
  if (K < 2) throw InvalidPlan("cross-validation needs K >= 2");
  if (n < 2 * static_cast<Eigen::Index>(K)) {
    throw InvalidPlan("every fold needs at least 2 rows (n=" + std::to_string(n) +
                      ", K=" + std::to_string(K) + ")");
  }
  auto rng = CounterRng::stream(seed, "cv/folds");
  const auto perm = permutation(static_cast<std::size_t>(n), rng);
  std::vector<std::vector<Eigen::Index>> folds(static_cast<std::size_t>(K));
  const auto base = n / K;
  const auto extra = n % K;
  std::size_t pos = 0;
  for (int k = 0; k < K; ++k) {
    const auto size = base + (k < extra ? 1 : 0);
    auto& fold = folds[static_cast<std::size_t>(k)];
    for (Eigen::Index i = 0; i < size; ++i) {
      fold.push_back(static_cast<Eigen::Index>(perm[pos++]));
    }
    std::sort(fold.begin(), fold.end());
  }
  return folds;
}

std::vector<Eigen::Index> training_rows(Eigen::Index n,
                                        const std::vector<Eigen::Index>& fold) {
  std::vector<bool> held(static_cast<std::size_t>(n), false);
  for (const auto r : fold) held[static_cast<std::size_t>(r)] = true;
  std::vector<Eigen::Index> rows;
  rows.reserve(static_cast<std::size_t>(n) - fold.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!held[static_cast<std::size_t>(i)]) rows.push_back(i);
  }
  return rows;
}

std::size_t argmin_largest_lambda(const std::vector<double>& scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] < scores[best]) best = i;
  }
  return best;
}

Matrix heldout_residual(const Dataset& data, const std::vector<Eigen::Index>& rows,
                        const Dataset& train, const Matrix& B) {
  const auto m = static_cast<Eigen::Index>(rows.size());
  Matrix R(m, data.q());
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto r = rows[static_cast<std::size_t>(i)];
    const Eigen::RowVectorXd x =
        data.X.row(r) + data.x_means.transpose() - train.x_means.transpose();
    const Eigen::RowVectorXd y =
        data.Y.row(r) + data.y_means.transpose() - train.y_means.transpose();
    R.row(i) = y - x * B;
  }
  return R;
}

}  // namespace mrcs
