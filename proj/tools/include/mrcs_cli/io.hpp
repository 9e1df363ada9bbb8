#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mrcs/simulation.hpp"
#include "mrcs/solvers.hpp"
#include "mrcs/types.hpp"

namespace mrcs::cli {

/// Unreadable, unwritable or malformed files.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Reads a numeric CSV matrix. With `header` the first line is skipped.
/// Every row must have the same number of fields.
Matrix read_csv(const std::filesystem::path& path, bool header = false);

/// Writes with 17 significant digits, so values read back bit-exactly.
std::string format_csv(const Matrix& M, const std::vector<std::string>& header = {});
std::string format_double(double v);

/// Writes to a temporary file in the same directory and renames it into
/// place, so readers never observe a partial file.
void write_atomic(const std::filesystem::path& path, const std::string& content);
void write_csv(const std::filesystem::path& path, const Matrix& M,
               const std::vector<std::string>& header = {});

/// Column names "<prefix>1".."<prefix>k" for header rows.
std::vector<std::string> column_names(const std::string& prefix, Eigen::Index k);

std::string read_text(const std::filesystem::path& path);

// Scenario files -------------------------------------------------------------

inline constexpr int kScenarioFormatVersion = 1;

std::string scenario_to_json(const Scenario& sc);
Scenario scenario_from_json(const std::string& text);

// Fit artifacts --------------------------------------------------------------

inline constexpr int kFitFormatVersion = 1;

struct FitArtifact {
  int version = kFitFormatVersion;
  Method method = Method::mrcs;
  Matrix B;
  Vector intercept;
  std::optional<CovParams> cov;
  double lambda = 0.0;  ///< NaN for the separate baselines
  Vector lambdas;       ///< per-response lambdas of the separate baselines
  std::vector<double> grid;
  /// Summed CV loss per grid entry (one column) or per grid entry and
  /// response (baselines, q columns). Empty when lambda was given.
  Matrix cv_table;
  std::uint64_t seed = 0;
  bool converged = true;
  int outer_iters = 0;
  std::vector<double> objective_trace;
};

std::string artifact_to_json(const FitArtifact& fit);
FitArtifact artifact_from_json(const std::string& text);

/// 1 intercept' + X B.
Matrix predict(const FitArtifact& fit, const Matrix& X);

}  // namespace mrcs::cli
