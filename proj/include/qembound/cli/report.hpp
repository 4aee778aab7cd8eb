#pragma once

#include <array>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "qembound/error.hpp"

namespace qembound::cli {

enum class RowStatus { ok, infeasible_mu, empty_interval, divergent_norm };

constexpr std::string_view to_string(RowStatus status) {
  switch (status) {
    case RowStatus::ok: return "ok";
    case RowStatus::infeasible_mu: return "infeasible_mu";
    case RowStatus::empty_interval: return "empty_interval";
    case RowStatus::divergent_norm: return "divergent_norm";
  }
  return "unknown";
}

struct ReportRow {
  std::optional<double> t;
  std::optional<double> mu;
  std::optional<double> upsilon_exact;
  std::optional<double> upsilon_mc;
  std::optional<double> mc_se;
  std::optional<double> upsilon_bound;
  std::optional<double> lambda_opt;
  std::optional<double> tail_eps;
  std::optional<double> tail_log_bound;
  RowStatus status = RowStatus::ok;

  bool operator==(const ReportRow&) const = default;
};

struct BoundReport {
  std::vector<ReportRow> rows;

  bool all_ok() const {
    for (const auto& r : rows)
      if (r.status != RowStatus::ok) return false;
    return true;
  }

  bool operator==(const BoundReport&) const = default;
};

inline constexpr std::string_view kCsvHeader =
    "t,mu,upsilon_exact,upsilon_mc,mc_se,upsilon_bound,lambda_opt,tail_eps,tail_log_bound,status";

/// 17 significant digits: enough to round-trip every double.
inline std::string format_double(double x) {
  std::array<char, 32> buffer{};
  std::snprintf(buffer.data(), buffer.size(), "%.17g", x);
  return buffer.data();
}

namespace detail {

inline std::array<std::optional<double> ReportRow::*, 9> numeric_columns() {
  return {&ReportRow::t,          &ReportRow::mu,         &ReportRow::upsilon_exact,
          &ReportRow::upsilon_mc, &ReportRow::mc_se,      &ReportRow::upsilon_bound,
          &ReportRow::lambda_opt, &ReportRow::tail_eps,   &ReportRow::tail_log_bound};
}

inline std::optional<double> parse_field(const std::string& field, std::size_t line) {
  if (field.empty()) return std::nullopt;
  errno = 0;
  char* end = nullptr;
  const double x = std::strtod(field.c_str(), &end);
  require(end == field.c_str() + field.size() && errno != EINVAL, ErrorKind::io_error,
          "line " + std::to_string(line) + ": malformed number '" + field + "'");
  return x;
}

inline RowStatus parse_status(const std::string& field, std::size_t line) {
  for (RowStatus s : {RowStatus::ok, RowStatus::infeasible_mu, RowStatus::empty_interval, RowStatus::divergent_norm})
    if (field == to_string(s)) return s;
  fail(ErrorKind::io_error, "line " + std::to_string(line) + ": unknown status '" + field + "'");
}

}  // namespace detail

inline void write_csv(std::ostream& out, const BoundReport& report) {
  out << kCsvHeader << '\n';
  for (const auto& row : report.rows) {
    for (auto column : detail::numeric_columns()) {
      const auto& value = row.*column;
      if (value) out << format_double(*value);
      out << ',';
    }
    out << to_string(row.status) << '\n';
  }
}

inline std::string to_csv(const BoundReport& report) {
  std::ostringstream out;
  write_csv(out, report);
  return out.str();
}

inline BoundReport read_csv(std::istream& in) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::io_error, "empty report");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  require(line == kCsvHeader, ErrorKind::io_error, "line 1: unexpected header '" + line + "'");
  BoundReport report;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      fields.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    require(fields.size() == 10, ErrorKind::io_error,
            "line " + std::to_string(number) + ": expected 10 fields, got " + std::to_string(fields.size()));
    ReportRow row;
    const auto columns = detail::numeric_columns();
    for (std::size_t i = 0; i < columns.size(); ++i) row.*columns[i] = detail::parse_field(fields[i], number);
    row.status = detail::parse_status(fields[9], number);
    report.rows.push_back(row);
  }
  return report;
}

inline BoundReport read_csv(const std::string& text) {
  std::istringstream in(text);
  return read_csv(in);
}

inline void write_csv_file(const std::string& path, const BoundReport& report) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::io_error, "cannot write '" + path + "'");
  write_csv(out, report);
  out.flush();
  require(out.good(), ErrorKind::io_error, "failed writing '" + path + "'");
}

}  // namespace qembound::cli
