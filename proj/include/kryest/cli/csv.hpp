#pragma once

/// \file kryest/cli/csv.hpp
/// \brief Minimal CSV writer: fixed header, 17 significant digits, `nan`
/// for non-finite values.

#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "kryest/error.hpp"

namespace kryest::cli {

/// Scientific notation with 17 significant digits; non-finite values print
/// as `nan`.
inline std::string format_double(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

/// Quote a field when it holds a comma, quote or line break.
inline std::string quote_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

class CsvWriter {
 public:
  CsvWriter(std::ostream& out, std::vector<std::string> header) : out_(out), width_(header.size()) {
    for (const std::string& h : header) field(h);
    end_row();
  }

  CsvWriter& num(double v) { return field(format_double(v)); }
  CsvWriter& integer(long long v) { return field(std::to_string(v)); }
  CsvWriter& index(std::optional<std::size_t> v) { return field(v ? std::to_string(*v) : std::string("nan")); }
  CsvWriter& text(const std::string& s) { return field(quote_field(s)); }

  void end_row() {
    if (col_ != width_)
      throw DomainError("CsvWriter: row has " + std::to_string(col_) + " fields, header has " + std::to_string(width_));
    out_ << '\n';
    col_ = 0;
  }

  /// Comment line outside the table, prefixed with '#'.
  void comment(const std::string& s) {
    if (col_ != 0) throw DomainError("CsvWriter: comment inside a row");
    out_ << "# " << s << '\n';
  }

  std::size_t width() const noexcept { return width_; }

 private:
  CsvWriter& field(const std::string& s) {
    if (col_ > 0) out_ << ',';
    out_ << s;
    ++col_;
    return *this;
  }

  std::ostream& out_;
  std::size_t width_;
  std::size_t col_ = 0;
};

}  // namespace kryest::cli
