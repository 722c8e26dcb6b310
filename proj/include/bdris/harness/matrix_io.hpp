#pragma once

// Matrix files: one CSV row per matrix row, complex entries as "re+imj" tokens
// ("1.5", "-2j", "0.25-3e-2j" are all accepted). Lines starting with '#' are comments.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "bdris/error.hpp"
#include "bdris/linalg.hpp"
#include "bdris/qstem.hpp"

namespace bdris::harness {

using linalg::ComplexMatrix;
using linalg::cplx;

namespace detail {

inline bool read_real(std::string_view s, double& v) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return !s.empty() && ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(v);
}

}  // namespace detail

inline cplx parse_complex(std::string_view tok, std::size_t line = 0) {
  std::string t;
  for (char c : tok) {
    if (c != ' ' && c != '\t' && c != '\r') t += c;
  }
  auto fail = [&]() -> cplx { throw ParseError(line, "malformed complex number '" + std::string(tok) + "'"); };
  if (t.empty()) return fail();
  if (t.back() != 'j' && t.back() != 'i') {
    double re = 0.0;
    if (!detail::read_real(t, re)) return fail();
    return {re, 0.0};
  }
  t.pop_back();
  // Split at the last sign that is not part of an exponent and not the leading sign.
  std::size_t split = std::string::npos;
  for (std::size_t k = t.size(); k-- > 1;) {
    if ((t[k] == '+' || t[k] == '-') && t[k - 1] != 'e' && t[k - 1] != 'E') {
      split = k;
      break;
    }
  }
  double re = 0.0;
  double im = 0.0;
  std::string_view re_part = split == std::string::npos ? std::string_view{} : std::string_view(t).substr(0, split);
  std::string_view im_part = split == std::string::npos ? std::string_view(t) : std::string_view(t).substr(split);
  if (im_part == "+" || im_part == "-" || im_part.empty()) {
    im = im_part == "-" ? -1.0 : 1.0;
  } else if (!detail::read_real(im_part, im)) {
    return fail();
  }
  if (!re_part.empty() && !detail::read_real(re_part, re)) return fail();
  return {re, im};
}

inline std::string format_complex(const cplx& z) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g%+.17gj", z.real(), z.imag());
  return buf;
}

inline ComplexMatrix parse_matrix(std::string_view text) {
  std::vector<std::vector<cplx>> rows;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto first = raw.find_first_not_of(" \t\r");
    if (first == std::string::npos || raw[first] == '#') continue;
    std::vector<cplx> row;
    std::size_t start = 0;
    while (true) {
      const auto comma = raw.find(',', start);
      row.push_back(parse_complex(std::string_view(raw).substr(start, comma == std::string::npos ? std::string::npos : comma - start), line_no));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError(line_no, "row has " + std::to_string(row.size()) + " entries, expected " +
                                    std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(line_no, "matrix file has no rows");
  ComplexMatrix a(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) a(i, j) = rows[i][j];
  }
  return a;
}

inline std::string format_matrix(const ComplexMatrix& a) {
  std::string out;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) out += (j ? "," : "") + format_complex(a(i, j));
    out += '\n';
  }
  return out;
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

inline ComplexMatrix read_matrix(const std::string& path) {
  try {
    return parse_matrix(slurp(path));
  } catch (const ParseError& e) {
    throw ParseError(e.line(), path + ": " + std::string(e.what()).substr(std::string(e.what()).find(": ") + 2));
  }
}

inline void write_matrix(const std::string& path, const ComplexMatrix& a) { write_text(path, format_matrix(a)); }

/// "# qstem q=<q> M=<M> Z0=<z0>" followed by the real M x M matrix.
inline std::string format_susceptance(const qstem::SusceptanceMatrix& b) {
  char head[96];
  std::snprintf(head, sizeof head, "# qstem q=%zu M=%zu Z0=%.17g\n", b.q(), b.m(), b.z0());
  std::string out = head;
  char buf[32];
  for (std::size_t i = 0; i < b.m(); ++i) {
    for (std::size_t j = 0; j < b.m(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", b.at(i, j));
      out += (j ? "," : "") + std::string(buf);
    }
    out += '\n';
  }
  return out;
}

inline qstem::SusceptanceMatrix parse_susceptance(std::string_view text) {
  const auto nl = text.find('\n');
  const std::string head(text.substr(0, nl));
  std::size_t q = 0;
  std::size_t m = 0;
  double z0 = 0.0;
  if (std::sscanf(head.c_str(), "# qstem q=%zu M=%zu Z0=%lf", &q, &m, &z0) != 3) {
    throw ParseError(1, "expected '# qstem q=<q> M=<M> Z0=<z0>' header");
  }
  const ComplexMatrix a = parse_matrix(nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1));
  if (a.rows() != m || a.cols() != m) throw ParseError(1, "header size does not match the matrix");
  linalg::RealMatrix b(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (a(i, j).imag() != 0.0) throw ParseError(i + 2, "susceptance entries must be real");
      b(i, j) = a(i, j).real();
    }
  }
  return qstem::SusceptanceMatrix::from_dense(b, q, z0);
}

}  // namespace bdris::harness
