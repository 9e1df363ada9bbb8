#pragma once

#include <cstdint>
#include <vector>

#include "mrcs/types.hpp"

namespace mrcs {

/// {10^(-4 + 0.5 k) : k = 0..14}, returned largest first.
std::vector<double> default_lambda_grid();

struct CvPlan {
  int K = 5;
  std::vector<double> grid = default_lambda_grid();
  std::uint64_t seed = 0;
  /// Fold x lambda work may run on this many threads; results do not depend
  /// on it.
  int threads = 1;

  /// K >= 2, grid non-empty, strictly positive.
  void validate() const;
  /// Sorted descending with duplicates removed.
  std::vector<double> normalized_grid() const;
};

/// Row indices of each held-out fold. Rows are shuffled by a permutation
/// drawn from the stream (seed, "cv/folds") and cut into K contiguous blocks
/// whose sizes differ by at most one. Throws InvalidPlan if any fold would
/// have fewer than 2 rows.
std::vector<std::vector<Eigen::Index>> make_folds(Eigen::Index n, int K,
                                                  std::uint64_t seed);

/// Complement of a fold in 0..n-1, ascending.
std::vector<Eigen::Index> training_rows(Eigen::Index n,
                                        const std::vector<Eigen::Index>& fold);

/// Index of the minimum of `scores`, ties resolved toward the largest
/// lambda. `grid` must be sorted descending, so that is the lowest index.
std::size_t argmin_largest_lambda(const std::vector<double>& scores);

/// Held-out rows of `data` (raw scale) re-expressed relative to the
/// training-fold means of `train`.
Matrix heldout_residual(const Dataset& data, const std::vector<Eigen::Index>& rows,
                        const Dataset& train, const Matrix& B);

}  // namespace mrcs
