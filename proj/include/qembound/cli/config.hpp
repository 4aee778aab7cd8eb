#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qembound/ccr_algebra.hpp"
#include "qembound/error.hpp"
#include "qembound/oqho.hpp"
#include "qembound/states.hpp"

namespace qembound::cli {

enum class ScenarioKind { gaussian_exact, randomized_mc, upper_bound, tail, oqho_sweep, verify };

/// Which CGF feeds the Chernoff bound of a tail scenario.
enum class CgfSource { exact, upper_bound };

constexpr std::string_view to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::gaussian_exact: return "gaussian_exact";
    case ScenarioKind::randomized_mc: return "randomized_mc";
    case ScenarioKind::upper_bound: return "upper_bound";
    case ScenarioKind::tail: return "tail";
    case ScenarioKind::oqho_sweep: return "oqho_sweep";
    case ScenarioKind::verify: return "verify";
  }
  return "unknown";
}

inline constexpr std::uint64_t kDefaultSamples = 100000;
inline constexpr std::uint64_t kDefaultSeed = 42;

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::gaussian_exact;
  std::optional<CcrMatrix> ccr;
  std::optional<MixtureMgf> state;
  std::optional<OqhoModel> model;
  std::vector<double> mu_grid;
  std::vector<double> t_grid;
  std::vector<double> eps_grid;
  CgfSource cgf = CgfSource::exact;
  std::uint64_t samples = kDefaultSamples;
  std::uint64_t seed = kDefaultSeed;
  std::optional<std::string> output;
  bool quick = false;
};

namespace detail {

using nlohmann::json;

/// 1-based line of the first `"key":` in the document, if any.
inline std::optional<std::size_t> line_of_key(std::string_view text, std::string_view key) {
  const std::string quoted = "\"" + std::string(key) + "\"";
  std::size_t pos = 0;
  while ((pos = text.find(quoted, pos)) != std::string_view::npos) {
    std::size_t after = pos + quoted.size();
    while (after < text.size() && (text[after] == ' ' || text[after] == '\t' || text[after] == '\r' ||
                                   text[after] == '\n'))
      ++after;
    if (after < text.size() && text[after] == ':')
      return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(pos), '\n'));
    pos = after;
  }
  return std::nullopt;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  /// Raises ConfigParse naming the field and, when found, its line.
  [[noreturn]] void error(const std::string& field, const std::string& message) const {
    std::string where = "field '" + field + "'";
    const auto dot = field.find_last_of('.');
    std::string key = dot == std::string::npos ? field : field.substr(dot + 1);
    key = key.substr(0, key.find('['));
    if (const auto line = line_of_key(text_, key)) where = "line " + std::to_string(*line) + ", " + where;
    fail(ErrorKind::config_parse, where + ": " + message);
  }

  void check_keys(const json& object, const std::string& path, const std::set<std::string>& allowed) const {
    for (const auto& [key, value] : object.items()) {
      if (!allowed.contains(key)) {
        const std::string field = path.empty() ? key : path + "." + key;
        error(field, "unknown key \"" + key + "\"");
      }
    }
  }

  double number(const json& value, const std::string& field) const {
    if (!value.is_number()) error(field, "expected a number");
    const double x = value.get<double>();
    if (!std::isfinite(x)) error(field, "expected a finite number");
    return x;
  }

  std::vector<double> numbers(const json& value, const std::string& field) const {
    if (!value.is_array()) error(field, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < value.size(); ++i) out.push_back(number(value[i], field + "[" + std::to_string(i) + "]"));
    return out;
  }

  Vector vector(const json& value, const std::string& field) const {
    const auto v = numbers(value, field);
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
  }

  /// Row-major nested array; an empty array is a matrix with no rows.
  Matrix matrix(const json& value, const std::string& field, Eigen::Index empty_cols = 0) const {
    if (!value.is_array()) error(field, "expected a matrix (array of rows)");
    if (value.empty()) return Matrix(0, empty_cols);
    const auto rows = static_cast<Eigen::Index>(value.size());
    Eigen::Index cols = -1;
    Matrix m;
    for (Eigen::Index i = 0; i < rows; ++i) {
      const std::string row_field = field + "[" + std::to_string(i) + "]";
      const auto row = numbers(value[static_cast<std::size_t>(i)], row_field);
      if (cols < 0) {
        cols = static_cast<Eigen::Index>(row.size());
        m.resize(rows, cols);
      }
      if (static_cast<Eigen::Index>(row.size()) != cols) error(row_field, "rows have different lengths");
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = row[static_cast<std::size_t>(j)];
    }
    return m;
  }

  std::uint64_t unsigned_integer(const json& value, const std::string& field, std::uint64_t min_value) const {
    if (!value.is_number_integer() || (value.is_number_integer() && !value.is_number_unsigned() && value.get<std::int64_t>() < 0))
      error(field, "expected a nonnegative integer");
    const auto x = value.get<std::uint64_t>();
    if (x < min_value) error(field, "must be at least " + std::to_string(min_value));
    return x;
  }

  enum class GridFloor { positive, nonnegative };

  std::vector<double> grid(const json& value, const std::string& field, GridFloor floor) const {
    auto g = numbers(value, field);
    if (g.empty()) error(field, "grid must be nonempty");
    for (std::size_t i = 0; i < g.size(); ++i) {
      const std::string item = field + "[" + std::to_string(i) + "]";
      if (floor == GridFloor::positive && !(g[i] > 0.0)) error(item, "values must be positive");
      if (floor == GridFloor::nonnegative && !(g[i] >= 0.0)) error(item, "values must be nonnegative");
      if (i > 0 && !(g[i] > g[i - 1])) error(item, "grid must be strictly increasing");
    }
    return g;
  }

  CcrMatrix ccr(const json& value) const {
    if (!value.is_array() || value.empty()) error("ccr", "expected eigenfrequencies [θ_1..θ_ν] or a square matrix");
    if (value.front().is_number()) return CcrMatrix::from_eigenfrequencies(numbers(value, "ccr"));
    return validate_ccr(matrix(value, "ccr"));
  }

  MixtureMgf state(const json& value, const CcrMatrix& ccr) const {
    if (!value.is_object()) error("state", "expected an object");
    const bool single = value.contains("mean") || value.contains("cov");
    if (single) {
      check_keys(value, "state", {"mean", "cov"});
      if (!value.contains("mean")) error("state.mean", "missing");
      if (!value.contains("cov")) error("state.cov", "missing");
      return MixtureMgf(GaussianState(vector(value["mean"], "state.mean"), matrix(value["cov"], "state.cov"), ccr));
    }
    check_keys(value, "state", {"weights", "means", "covs"});
    for (const char* key : {"weights", "means", "covs"})
      if (!value.contains(key)) error(std::string("state.") + key, "missing");
    const auto weights = numbers(value["weights"], "state.weights");
    const json& means = value["means"];
    const json& covs = value["covs"];
    if (!means.is_array() || means.size() != weights.size())
      error("state.means", "expected one mean per weight");
    if (!covs.is_array() || covs.size() != weights.size()) error("state.covs", "expected one covariance per weight");
    std::vector<GaussianState> components;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      const std::string suffix = "[" + std::to_string(i) + "]";
      components.emplace_back(vector(means[i], "state.means" + suffix), matrix(covs[i], "state.covs" + suffix), ccr);
    }
    return MixtureMgf(weights, std::move(components));
  }

  OqhoModel model(const json& value, const CcrMatrix& ccr) const {
    if (!value.is_object()) error("model", "expected an object with R and N");
    check_keys(value, "model", {"R", "N"});
    if (!value.contains("R")) error("model.R", "missing");
    if (!value.contains("N")) error("model.N", "missing");
    return OqhoModel(matrix(value["R"], "model.R"), matrix(value["N"], "model.N", ccr.n()), ccr);
  }

 private:
  std::string_view text_;
};

}  // namespace detail

/// Parses and validates a scenario document. Unknown keys, malformed values
/// and keys that do not apply to the scenario kind raise ConfigParse;
/// inconsistent dimensions raise DimensionMismatch.
inline ScenarioConfig parse_config(std::string_view text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto byte = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(byte), '\n');
    fail(ErrorKind::config_parse, "line " + std::to_string(line) + ": invalid JSON (" + e.what() + ")");
  }
  const detail::Parser p(text);
  if (!doc.is_object()) fail(ErrorKind::config_parse, "line 1: top level must be a JSON object");

  ScenarioConfig config;
  if (!doc.contains("kind")) p.error("kind", "missing");
  if (!doc["kind"].is_string()) p.error("kind", "expected a string");
  const std::string kind = doc["kind"].get<std::string>();
  bool known = false;
  for (ScenarioKind k : {ScenarioKind::gaussian_exact, ScenarioKind::randomized_mc, ScenarioKind::upper_bound,
                         ScenarioKind::tail, ScenarioKind::oqho_sweep, ScenarioKind::verify}) {
    if (kind == to_string(k)) {
      config.kind = k;
      known = true;
    }
  }
  if (!known) p.error("kind", "unknown scenario kind \"" + kind + "\"");

  std::set<std::string> allowed{"kind", "samples", "seed", "output"};
  std::set<std::string> required;
  switch (config.kind) {
    case ScenarioKind::gaussian_exact:
    case ScenarioKind::randomized_mc:
    case ScenarioKind::upper_bound: required = {"ccr", "state", "mu_grid"}; break;
    case ScenarioKind::tail:
      required = {"ccr", "state", "eps_grid"};
      allowed.insert("cgf");
      break;
    case ScenarioKind::oqho_sweep: required = {"ccr", "state", "model", "mu_grid", "t_grid"}; break;
    case ScenarioKind::verify: allowed.insert("quick"); break;
  }
  allowed.insert(required.begin(), required.end());
  for (const auto& [key, value] : doc.items()) {
    if (allowed.contains(key)) continue;
    static const std::set<std::string> schema{"kind", "ccr",      "state", "model", "mu_grid", "t_grid", "eps_grid",
                                              "cgf",  "samples", "seed",  "output", "quick"};
    if (schema.contains(key)) p.error(key, "not used by scenario kind \"" + kind + "\"");
    p.error(key, "unknown key \"" + key + "\"");
  }
  for (const auto& key : required)
    if (!doc.contains(key)) p.error(key, "required for scenario kind \"" + kind + "\"");

  if (doc.contains("samples")) config.samples = p.unsigned_integer(doc["samples"], "samples", 2);
  if (doc.contains("seed")) config.seed = p.unsigned_integer(doc["seed"], "seed", 0);
  if (doc.contains("output")) {
    if (!doc["output"].is_string() || doc["output"].get<std::string>().empty())
      p.error("output", "expected a nonempty path string");
    config.output = doc["output"].get<std::string>();
  }
  if (doc.contains("quick")) {
    if (!doc["quick"].is_boolean()) p.error("quick", "expected true or false");
    config.quick = doc["quick"].get<bool>();
  }
  if (doc.contains("cgf")) {
    const json& cgf = doc["cgf"];
    if (cgf == "exact") config.cgf = CgfSource::exact;
    else if (cgf == "upper_bound") config.cgf = CgfSource::upper_bound;
    else p.error("cgf", "expected \"exact\" or \"upper_bound\"");
  }
  using Floor = detail::Parser::GridFloor;
  if (doc.contains("mu_grid")) config.mu_grid = p.grid(doc["mu_grid"], "mu_grid", Floor::positive);
  if (doc.contains("t_grid")) config.t_grid = p.grid(doc["t_grid"], "t_grid", Floor::nonnegative);
  if (doc.contains("eps_grid")) config.eps_grid = p.grid(doc["eps_grid"], "eps_grid", Floor::nonnegative);

  if (doc.contains("ccr")) {
    config.ccr = p.ccr(doc["ccr"]);
    config.state = p.state(doc["state"], *config.ccr);
    if (doc.contains("model")) config.model = p.model(doc["model"], *config.ccr);
  }
  return config;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::io_error, "cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  require(!in.bad(), ErrorKind::io_error, "failed reading '" + path + "'");
  return buffer.str();
}

inline ScenarioConfig load_config(const std::string& path) { return parse_config(read_text_file(path)); }

}  // namespace qembound::cli
