#include "mrcs_cli/io.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <system_error>

#include <unistd.h>

#include "json.hpp"

namespace mrcs::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

double parse_field(std::string_view field, const fs::path& path, std::size_t line) {
  field = trim(field);
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (!field.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (field.empty() || ec != std::errc() || ptr != last) {
    throw DataError(path.string() + ":" + std::to_string(line) + ": not a number: '" +
                    std::string(field) + "'");
  }
  return value;
}

json matrix_to_json(const Matrix& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, const char* what) {
  if (!j.is_array()) throw DataError(std::string(what) + " must be an array of rows");
  if (j.empty()) return Matrix();
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  Matrix M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw DataError(std::string(what) + " rows must have equal length");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      M(i, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
  }
  return M;
}

json vector_to_json(const Vector& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Vector vector_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

// NaN is not representable in JSON; it is written as null.
json number_or_null(double v) { return std::isnan(v) ? json(nullptr) : json(v); }
double number_from(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

template <typename T>
T value_or(const json& j, const char* key, T fallback) {
  const auto it = j.find(key);
  return it == j.end() ? fallback : it->get<T>();
}

void check_version(const json& j, int supported, const char* what) {
  const auto it = j.find("version");
  if (it == j.end()) throw DataError(std::string(what) + " has no version field");
  const int version = it->get<int>();
  if (version != supported) {
    throw DataError(std::string(what) + " version " + std::to_string(version) +
                    " is not supported (expected " + std::to_string(supported) + ")");
  }
}

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string(what) + " is not valid JSON: " + e.what());
  }
}

}  // namespace

Matrix read_csv(const fs::path& path, bool header) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (header && line_no == 1) continue;
    if (trim(line).empty()) continue;
    std::vector<double> row;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      row.push_back(parse_field(rest.substr(0, comma), path, line_no));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(rows.front().size()) + " fields, found " +
                      std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(path.string() + " contains no data rows");
  Matrix M(static_cast<Eigen::Index>(rows.size()),
           static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      M(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  return M;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_csv(const Matrix& M, const std::vector<std::string>& header) {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    out += (i ? "," : "") + header[i];
  }
  if (!header.empty()) out += '\n';
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      if (j) out += ',';
      out += format_double(M(i, j));
    }
    out += '\n';
  }
  return out;
}

void write_atomic(const fs::path& path, const std::string& content) {
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  if (!fs::is_directory(dir)) throw DataError("directory does not exist: " + dir.string());
  const fs::path tmp =
      dir / ("." + path.filename().string() + ".tmp" + std::to_string(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << content;
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw DataError("write failed for " + path.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw DataError("cannot move output into place: " + path.string());
  }
}

void write_csv(const fs::path& path, const Matrix& M,
               const std::vector<std::string>& header) {
  write_atomic(path, format_csv(M, header));
}

std::vector<std::string> column_names(const std::string& prefix, Eigen::Index k) {
  std::vector<std::string> names;
  for (Eigen::Index i = 1; i <= k; ++i) names.push_back(prefix + std::to_string(i));
  return names;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------

namespace {

const char* cov_family_name(CovFamily f) {
  switch (f) {
    case CovFamily::compound_symmetry:
      return "compound-symmetry";
    case CovFamily::general_equicorrelation:
      return "general-equicorrelation";
    case CovFamily::corrupted:
      break;
  }
  return "corrupted";
}

CovFamily parse_cov_family(const std::string& s) {
  if (s == "compound-symmetry") return CovFamily::compound_symmetry;
  if (s == "general-equicorrelation") return CovFamily::general_equicorrelation;
  if (s == "corrupted") return CovFamily::corrupted;
  throw DataError("unknown covariance family '" + s + "'");
}

}  // namespace

std::string scenario_to_json(const Scenario& sc) {
  json j;
  j["version"] = kScenarioFormatVersion;
  j["n"] = sc.n;
  j["p"] = sc.p;
  j["q"] = sc.q;
  j["s1"] = sc.s1;
  j["s2"] = sc.s2;
  j["theta"] = sc.theta;
  switch (sc.eta.kind) {
    case EtaSpec::Kind::constant:
      j["eta"] = {{"kind", "constant"}, {"value", sc.eta.value}};
      break;
    case EtaSpec::Kind::explicit_vector:
      j["eta"] = {{"kind", "vector"}, {"values", vector_to_json(sc.eta.values)}};
      break;
    case EtaSpec::Kind::asymmetric_preset:
      j["eta"] = {{"kind", "asymmetric"}};
      break;
  }
  j["covariance"] = {{"family", cov_family_name(sc.cov_family)}};
  if (sc.cov_family == CovFamily::corrupted) {
    j["covariance"]["omega"] = sc.omega;
    j["covariance"]["d_law"] = {{"p", sc.d_law.p}, {"a", sc.d_law.a}, {"b", sc.d_law.b}};
  }
  if (sc.b_family == BFamily::bernoulli_mask) {
    j["coefficients"] = {{"family", "bernoulli-mask"}};
  } else {
    j["coefficients"] = {{"family", "uniform-dense"}, {"bound", sc.b_bound}};
  }
  j["test_n"] = sc.test_n;
  j["seed"] = sc.seed;
  return j.dump(2) + "\n";
}

Scenario scenario_from_json(const std::string& text) {
  const json j = parse_json(text, "scenario");
  try {
    check_version(j, kScenarioFormatVersion, "scenario");
    Scenario sc;
    sc.n = value_or(j, "n", sc.n);
    sc.p = value_or(j, "p", sc.p);
    sc.q = value_or(j, "q", sc.q);
    sc.s1 = value_or(j, "s1", sc.s1);
    sc.s2 = value_or(j, "s2", sc.s2);
    sc.theta = value_or(j, "theta", sc.theta);
    if (const auto it = j.find("eta"); it != j.end()) {
      const std::string kind = value_or<std::string>(*it, "kind", "constant");
      if (kind == "constant") {
        sc.eta.kind = EtaSpec::Kind::constant;
        sc.eta.value = value_or(*it, "value", 1.0);
      } else if (kind == "vector") {
        sc.eta.kind = EtaSpec::Kind::explicit_vector;
        sc.eta.values = vector_from_json(it->at("values"));
      } else if (kind == "asymmetric") {
        sc.eta.kind = EtaSpec::Kind::asymmetric_preset;
      } else {
        throw DataError("unknown eta kind '" + kind + "'");
      }
    }
    if (const auto it = j.find("covariance"); it != j.end()) {
      sc.cov_family = parse_cov_family(value_or<std::string>(*it, "family", "compound-symmetry"));
      sc.omega = value_or(*it, "omega", sc.omega);
      if (const auto d = it->find("d_law"); d != it->end()) {
        sc.d_law.p = value_or(*d, "p", sc.d_law.p);
        sc.d_law.a = value_or(*d, "a", sc.d_law.a);
        sc.d_law.b = value_or(*d, "b", sc.d_law.b);
      }
    }
    if (const auto it = j.find("coefficients"); it != j.end()) {
      const std::string family = value_or<std::string>(*it, "family", "bernoulli-mask");
      if (family == "bernoulli-mask") {
        sc.b_family = BFamily::bernoulli_mask;
      } else if (family == "uniform-dense") {
        sc.b_family = BFamily::uniform_dense;
        sc.b_bound = value_or(*it, "bound", sc.b_bound);
      } else {
        throw DataError("unknown coefficient family '" + family + "'");
      }
    }
    sc.test_n = value_or(j, "test_n", sc.test_n);
    sc.seed = value_or<std::uint64_t>(j, "seed", sc.seed);
    sc.validate();
    return sc;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed scenario: ") + e.what());
  } catch (const InvalidInput& e) {
    throw DataError(std::string("invalid scenario: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

std::string artifact_to_json(const FitArtifact& fit) {
  json j;
  j["version"] = fit.version;
  j["method"] = to_string(fit.method);
  j["B"] = matrix_to_json(fit.B);
  j["intercept"] = vector_to_json(fit.intercept);
  if (!fit.cov) {
    j["covariance"] = nullptr;
  } else if (const auto* cs = std::get_if<CsParams>(&*fit.cov)) {
    j["covariance"] = {{"family", "compound-symmetry"}, {"eta2", cs->eta2}, {"theta", cs->theta}};
  } else {
    const auto& ge = std::get<GenEqParams>(*fit.cov);
    j["covariance"] = {{"family", "general-equicorrelation"},
                       {"etas", vector_to_json(ge.etas)},
                       {"theta", ge.theta}};
  }
  j["lambda"] = number_or_null(fit.lambda);
  j["lambdas"] = vector_to_json(fit.lambdas);
  j["grid"] = fit.grid;
  j["cv_table"] = matrix_to_json(fit.cv_table);
  j["seed"] = fit.seed;
  j["converged"] = fit.converged;
  j["outer_iters"] = fit.outer_iters;
  j["objective_trace"] = fit.objective_trace;
  return j.dump(2) + "\n";
}

FitArtifact artifact_from_json(const std::string& text) {
  const json j = parse_json(text, "fit artifact");
  try {
    check_version(j, kFitFormatVersion, "fit artifact");
    FitArtifact fit;
    const auto method = parse_method(j.at("method").get<std::string>());
    if (!method) throw DataError("fit artifact names an unknown method");
    fit.method = *method;
    fit.B = matrix_from_json(j.at("B"), "B");
    fit.intercept = vector_from_json(j.at("intercept"));
    if (fit.intercept.size() != fit.B.cols()) {
      throw DataError("fit artifact intercept length does not match B");
    }
    const json& cov = j.at("covariance");
    if (!cov.is_null()) {
      const std::string family = cov.at("family").get<std::string>();
      if (family == "compound-symmetry") {
        fit.cov = CsParams{cov.at("eta2").get<double>(), cov.at("theta").get<double>()};
      } else if (family == "general-equicorrelation") {
        fit.cov = GenEqParams{vector_from_json(cov.at("etas")), cov.at("theta").get<double>()};
      } else {
        throw DataError("unknown covariance family '" + family + "'");
      }
    }
    fit.lambda = number_from(j.at("lambda"));
    fit.lambdas = vector_from_json(j.at("lambdas"));
    fit.grid = j.at("grid").get<std::vector<double>>();
    fit.cv_table = matrix_from_json(j.at("cv_table"), "cv_table");
    fit.seed = j.at("seed").get<std::uint64_t>();
    fit.converged = j.at("converged").get<bool>();
    fit.outer_iters = j.at("outer_iters").get<int>();
    fit.objective_trace = j.at("objective_trace").get<std::vector<double>>();
    return fit;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed fit artifact: ") + e.what());
  }
}

Matrix predict(const FitArtifact& fit, const Matrix& X) {
  if (X.cols() != fit.B.rows()) {
    throw DataError("X has " + std::to_string(X.cols()) + " columns but the fit expects " +
                    std::to_string(fit.B.rows()));
  }
  Matrix Y = X * fit.B;
  Y.rowwise() += fit.intercept.transpose();
  return Y;
}

}  // namespace mrcs::cli
