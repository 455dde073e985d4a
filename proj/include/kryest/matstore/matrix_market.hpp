#pragma once

/// \file kryest/matstore/matrix_market.hpp
/// \brief Matrix Market (NIST exchange format) reader and writer.
///
/// Supported: `matrix` objects in `coordinate` or `array` format with
/// `real`/`integer` fields and `general`/`symmetric` symmetry. Sparse input
/// is densified.

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "kryest/error.hpp"
#include "kryest/matstore/dense_matrix.hpp"

namespace kryest {

enum class MmFormat { coordinate, array };

namespace detail {

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

inline bool blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace detail

/// Parse Matrix Market text from a stream. `name` is used in error messages.
inline DenseMatrix mm_read(std::istream& in, const std::string& name = "<stream>") {
  std::string line;
  std::size_t lineno = 0;

  if (!std::getline(in, line)) throw ParseError(name, 1, "empty file");
  ++lineno;
  std::istringstream banner(line);
  std::string tag, object, format, field, symmetry;
  banner >> tag >> object >> format >> field >> symmetry;
  if (tag != "%%MatrixMarket" || symmetry.empty())
    throw ParseError(name, lineno, "malformed Matrix Market banner");
  object = detail::lower(object);
  format = detail::lower(format);
  field = detail::lower(field);
  symmetry = detail::lower(symmetry);

  if (object != "matrix") throw UnsupportedFormat(name + ": object '" + object + "' not supported");
  MmFormat fmt;
  if (format == "coordinate")
    fmt = MmFormat::coordinate;
  else if (format == "array")
    fmt = MmFormat::array;
  else
    throw ParseError(name, lineno, "unknown format '" + format + "'");
  if (field == "complex" || field == "pattern")
    throw UnsupportedFormat(name + ": field '" + field + "' not supported");
  if (field != "real" && field != "integer" && field != "double")
    throw ParseError(name, lineno, "unknown field '" + field + "'");
  bool symmetric;
  if (symmetry == "general")
    symmetric = false;
  else if (symmetry == "symmetric")
    symmetric = true;
  else if (symmetry == "skew-symmetric" || symmetry == "hermitian")
    throw UnsupportedFormat(name + ": symmetry '" + symmetry + "' not supported");
  else
    throw ParseError(name, lineno, "unknown symmetry '" + symmetry + "'");

  // skip comments
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line[0] == '%') continue;
    if (detail::blank(line)) continue;
    break;
  }
  if (!in && line.empty()) throw ParseError(name, lineno, "missing size line");

  std::istringstream size_line(line);
  long long rows = 0, cols = 0, nnz = 0;
  size_line >> rows >> cols;
  if (fmt == MmFormat::coordinate) size_line >> nnz;
  if (!size_line || rows <= 0 || cols <= 0 || nnz < 0)
    throw ParseError(name, lineno, "malformed size line");
  if (symmetric && rows != cols) throw StructuralError(name + ": symmetric matrix must be square");

  DenseMatrix a(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));

  auto next_data_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line[0] == '%') continue;
      if (detail::blank(line)) continue;
      return true;
    }
    return false;
  };

  if (fmt == MmFormat::coordinate) {
    for (long long e = 0; e < nnz; ++e) {
      if (!next_data_line()) throw ParseError(name, lineno, "unexpected end of file");
      std::istringstream ls(line);
      long long i = 0, j = 0;
      double v = 0.0;
      ls >> i >> j >> v;
      if (!ls) throw ParseError(name, lineno, "malformed entry");
      if (i < 1 || i > rows || j < 1 || j > cols)
        throw StructuralError(name + ":" + std::to_string(lineno) + ": index (" + std::to_string(i) + "," +
                              std::to_string(j) + ") out of declared bounds");
      const auto r = static_cast<std::size_t>(i - 1), c = static_cast<std::size_t>(j - 1);
      if (symmetric && c > r)
        throw StructuralError(name + ":" + std::to_string(lineno) + ": symmetric entry above diagonal");
      a(r, c) += v;
      if (symmetric && r != c) a(c, r) += v;
    }
  } else {
    // column-major; symmetric stores the lower triangle only
    for (long long j = 0; j < cols; ++j) {
      for (long long i = symmetric ? j : 0; i < rows; ++i) {
        if (!next_data_line()) throw ParseError(name, lineno, "unexpected end of file");
        std::istringstream ls(line);
        double v = 0.0;
        ls >> v;
        if (!ls) throw ParseError(name, lineno, "malformed value");
        a(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = v;
        if (symmetric) a(static_cast<std::size_t>(j), static_cast<std::size_t>(i)) = v;
      }
    }
  }
  if (!all_finite(a.entries())) throw ParseError(name, lineno, "non-finite value");
  return a;
}

inline DenseMatrix mm_read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return mm_read(in, path);
}

/// Read a dense vector stored as an n x 1 (or 1 x n) Matrix Market matrix.
inline Vector mm_read_vector(const std::string& path) {
  const DenseMatrix m = mm_read(path);
  if (m.cols() != 1 && m.rows() != 1)
    throw StructuralError(path + ": expected a single-column matrix for a vector");
  return Vector(m.entries().begin(), m.entries().end());
}

/// Write with 17 significant digits so that array-format output reads back bit-exact.
inline void mm_write(std::ostream& out, const DenseMatrix& a, MmFormat fmt = MmFormat::array) {
  char buf[64];
  if (fmt == MmFormat::array) {
    out << "%%MatrixMarket matrix array real general\n";
    out << a.rows() << ' ' << a.cols() << '\n';
    for (std::size_t j = 0; j < a.cols(); ++j)
      for (std::size_t i = 0; i < a.rows(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", a(i, j));
        out << buf << '\n';
      }
    return;
  }
  std::size_t nnz = 0;
  for (double v : a.entries()) nnz += (v != 0.0);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << a.rows() << ' ' << a.cols() << ' ' << nnz << '\n';
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t i = 0; i < a.rows(); ++i)
      if (a(i, j) != 0.0) {
        std::snprintf(buf, sizeof buf, "%.17g", a(i, j));
        out << (i + 1) << ' ' << (j + 1) << ' ' << buf << '\n';
      }
}

inline void mm_write(const std::string& path, const DenseMatrix& a, MmFormat fmt = MmFormat::array) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  mm_write(out, a, fmt);
}

}  // namespace kryest
