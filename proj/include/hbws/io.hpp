#pragma once

#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "hbws/common.hpp"

namespace hbws {

/// Text matrix dump: "# hbws-matrix <rows> <cols>" followed by optional
/// "# key value" metadata lines, then one row per line of space-separated
/// "re im" pairs (row-major, 17 significant digits so doubles round-trip).
inline void write_matrix(std::ostream& os, const CMatrix& m,
                         const std::map<std::string, std::string>& meta = {}) {
  os << "# hbws-matrix " << m.rows() << ' ' << m.cols() << '\n';
  for (const auto& [k, v] : meta) os << "# " << k << ' ' << v << '\n';
  os << std::setprecision(17);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      os << (c ? " " : "") << m(r, c).real() << ' ' << m(r, c).imag();
    os << '\n';
  }
}

inline CMatrix read_matrix(std::istream& is, std::map<std::string, std::string>* meta = nullptr) {
  std::string line;
  if (!std::getline(is, line)) throw ArgumentError("read_matrix: empty input");
  std::istringstream hdr(line);
  std::string hash, tag;
  Eigen::Index rows = 0, cols = 0;
  if (!(hdr >> hash >> tag >> rows >> cols) || hash != "#" || tag != "hbws-matrix" || rows < 1 ||
      cols < 1)
    throw ArgumentError("read_matrix: bad header (expected '# hbws-matrix rows cols')");
  std::streampos pos = is.tellg();
  while (std::getline(is, line)) {
    if (line.empty() || line[0] != '#') {
      is.seekg(pos);
      break;
    }
    std::istringstream ms(line);
    std::string h, key;
    ms >> h >> key;
    std::string value;
    std::getline(ms, value);
    if (!value.empty() && value[0] == ' ') value.erase(0, 1);
    if (meta) (*meta)[key] = value;
    pos = is.tellg();
  }
  CMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (!std::getline(is, line)) throw ArgumentError("read_matrix: truncated matrix body");
    std::istringstream ls(line);
    for (Eigen::Index c = 0; c < cols; ++c) {
      double re, im;
      if (!(ls >> re >> im)) throw ArgumentError("read_matrix: short row");
      m(r, c) = Complex(re, im);
    }
  }
  return m;
}

}  // namespace hbws
