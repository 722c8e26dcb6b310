#pragma once

// Result rows and their CSV form. Empty cells stand for "not applicable"; numbers are
// written with 17 significant digits so a parse-back reproduces them exactly.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bdris/error.hpp"
#include "bdris/harness/config.hpp"

namespace bdris::harness {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct ResultRecord {
  std::string experiment;
  std::size_t trial = 0;
  std::string design;
  std::size_t m = 0;
  double snr_db = kNaN;
  std::string sweep_variable;
  double sweep_value = 0.0;
  double rho = kNaN;
  double rate_bits = kNaN;
  double abs_det = kNaN;
  double d_max = kNaN;
  double rate_gap_bound_bits = kNaN;
  std::optional<double> qstem_residual;
  std::optional<double> sigma_min_h;
  std::optional<double> phase;  // global phase applied to Theta, radians
  std::vector<double> sigma_h;
  std::string error;  // empty on success

  bool ok() const noexcept { return error.empty(); }
};

inline const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols = {
      "experiment", "trial", "design", "m", "snr_db", "sweep_variable", "sweep_value", "rho", "rate_bits", "abs_det", "d_max",
      "rate_gap_bound_bits", "qstem_residual", "sigma_min_h", "phase", "sigma_h", "error"};
  return cols;
}

namespace detail {

inline std::string fmt_double(double v) {
  if (std::isnan(v)) return {};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fmt_opt(const std::optional<double>& v) { return v ? fmt_double(*v) : std::string{}; }

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

/// RFC 4180 field splitting over the whole document (quoted fields may hold newlines).
inline std::vector<std::vector<std::string>> csv_rows(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) throw ParseError(rows.size() + 1, "unterminated quoted field");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline double cell_double(const std::string& s, std::size_t line) {
  if (s.empty()) return kNaN;
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(line, "malformed number '" + s + "'");
  }
}

inline std::optional<double> cell_opt(const std::string& s, std::size_t line) {
  if (s.empty()) return std::nullopt;
  return cell_double(s, line);
}

inline std::size_t cell_count(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw ParseError(line, "malformed integer '" + s + "'");
  }
}

}  // namespace detail

inline std::string to_csv(const std::vector<ResultRecord>& records) {
  std::string out;
  const auto& cols = csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
  out += '\n';
  for (const auto& r : records) {
    std::string sig;
    for (std::size_t i = 0; i < r.sigma_h.size(); ++i) sig += (i ? ";" : "") + detail::fmt_double(r.sigma_h[i]);
    const std::vector<std::string> cells = {detail::csv_quote(r.experiment),
                                            std::to_string(r.trial),
                                            detail::csv_quote(r.design),
                                            std::to_string(r.m),
                                            detail::fmt_double(r.snr_db),
                                            detail::csv_quote(r.sweep_variable),
                                            detail::fmt_double(r.sweep_value),
                                            detail::fmt_double(r.rho),
                                            detail::fmt_double(r.rate_bits),
                                            detail::fmt_double(r.abs_det),
                                            detail::fmt_double(r.d_max),
                                            detail::fmt_double(r.rate_gap_bound_bits),
                                            detail::fmt_opt(r.qstem_residual),
                                            detail::fmt_opt(r.sigma_min_h),
                                            detail::fmt_opt(r.phase),
                                            sig,
                                            detail::csv_quote(r.error)};
    for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
    out += '\n';
  }
  return out;
}

/// Writes header + one row per record. Refuses an empty record list without touching
/// the filesystem.
inline void emit_csv(const std::vector<ResultRecord>& records, const std::string& path) {
  if (records.empty()) throw InvalidInput("emit_csv: no records to write");
  const std::string text = to_csv(records);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("emit_csv: cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("emit_csv: write to '" + path + "' failed");
}

inline std::vector<ResultRecord> parse_csv(std::string_view text) {
  const auto rows = detail::csv_rows(text);
  if (rows.empty() || rows.front() != csv_columns()) throw ParseError(1, "unexpected CSV header");
  std::vector<ResultRecord> out;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const auto& c = rows[k];
    const std::size_t line = k + 1;
    if (c.size() != csv_columns().size()) throw ParseError(line, "wrong number of fields");
    ResultRecord r;
    r.experiment = c[0];
    r.trial = detail::cell_count(c[1], line);
    r.design = c[2];
    r.m = detail::cell_count(c[3], line);
    r.snr_db = detail::cell_double(c[4], line);
    r.sweep_variable = c[5];
    r.sweep_value = detail::cell_double(c[6], line);
    r.rho = detail::cell_double(c[7], line);
    r.rate_bits = detail::cell_double(c[8], line);
    r.abs_det = detail::cell_double(c[9], line);
    r.d_max = detail::cell_double(c[10], line);
    r.rate_gap_bound_bits = detail::cell_double(c[11], line);
    r.qstem_residual = detail::cell_opt(c[12], line);
    r.sigma_min_h = detail::cell_opt(c[13], line);
    r.phase = detail::cell_opt(c[14], line);
    if (!c[15].empty()) {
      std::size_t start = 0;
      while (true) {
        const auto semi = c[15].find(';', start);
        r.sigma_h.push_back(detail::cell_double(c[15].substr(start, semi - start), line));
        if (semi == std::string::npos) break;
        start = semi + 1;
      }
    }
    r.error = c[16];
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<ResultRecord> read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

}  // namespace bdris::harness
