#pragma once

#include <charconv>
#include <cstddef>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "loram/dense.hpp"
#include "loram/errors.hpp"
#include "loram/sparse.hpp"

// Text matrix formats. Values are written with 17 significant digits so a
// write/read cycle reproduces every double exactly.
//
//   sparse:  "d d nnz" then nnz lines "i j value" (0-based)
//   dense:   "d r"     then d lines of r values

namespace loram::io {

inline std::string format_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return {buf, res.ptr};
}

namespace detail {

inline double parse_double(const std::string& tok) {
  double v = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    throw FormatError("cannot parse real value '" + tok + "'");
  }
  return v;
}

inline std::size_t parse_index(const std::string& tok) {
  std::size_t v = 0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    throw FormatError("cannot parse index '" + tok + "'");
  }
  return v;
}

inline std::vector<std::string> next_tokens(std::istream& in, std::size_t expected,
                                            const char* what) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::vector<std::string> toks;
    for (std::string t; ls >> t;) toks.push_back(std::move(t));
    if (toks.size() != expected) {
      throw FormatError(std::string(what) + ": expected " + std::to_string(expected) +
                        " fields, got " + std::to_string(toks.size()));
    }
    return toks;
  }
  throw FormatError(std::string(what) + ": unexpected end of input");
}

}  // namespace detail

inline void write_sparse(std::ostream& out, const SparseGraphMatrix& a) {
  out << a.dim() << ' ' << a.dim() << ' ' << a.nnz() << '\n';
  for (std::size_t k = 0; k < a.nnz(); ++k) {
    out << a.row(k) << ' ' << a.col(k) << ' ' << format_double(a.value(k)) << '\n';
  }
}

inline SparseGraphMatrix read_sparse(std::istream& in) {
  auto head = detail::next_tokens(in, 3, "sparse header");
  const std::size_t d = detail::parse_index(head[0]);
  if (detail::parse_index(head[1]) != d) throw FormatError("sparse matrix must be square");
  const std::size_t nnz = detail::parse_index(head[2]);
  std::vector<Entry> triples;
  triples.reserve(nnz);
  for (std::size_t k = 0; k < nnz; ++k) {
    auto t = detail::next_tokens(in, 3, "sparse entry");
    triples.push_back(
        {detail::parse_index(t[0]), detail::parse_index(t[1]), detail::parse_double(t[2])});
  }
  // Stored entries are kept as written (explicit zeros included); only the
  // order is normalized to row-major.
  std::stable_sort(triples.begin(), triples.end(), [](const Entry& a, const Entry& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<double> values;
  for (const auto& e : triples) {
    pairs.emplace_back(e.row, e.col);
    values.push_back(e.value);
  }
  try {
    return {std::make_shared<CandidateSet>(d, std::move(pairs)), std::move(values)};
  } catch (const InvalidArgument& e) {
    throw FormatError(e.what());
  }
}

inline void write_dense(std::ostream& out, const DenseThin& m) {
  out << m.rows() << ' ' << m.cols() << '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t k = 0; k < m.cols(); ++k) {
      if (k) out << ' ';
      out << format_double(m(i, k));
    }
    out << '\n';
  }
}

inline DenseThin read_dense(std::istream& in) {
  auto head = detail::next_tokens(in, 2, "dense header");
  const std::size_t rows = detail::parse_index(head[0]);
  const std::size_t cols = detail::parse_index(head[1]);
  std::vector<double> data;
  data.reserve(rows * cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (const auto& t : detail::next_tokens(in, cols, "dense row")) {
      data.push_back(detail::parse_double(t));
    }
  }
  return {rows, cols, std::move(data)};
}

inline void save_sparse(const std::string& path, const SparseGraphMatrix& a) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  write_sparse(out, a);
}

inline SparseGraphMatrix load_sparse(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "'");
  return read_sparse(in);
}

inline void save_dense(const std::string& path, const DenseThin& m) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  write_dense(out, m);
}

inline DenseThin load_dense(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "'");
  return read_dense(in);
}

}  // namespace loram::io
