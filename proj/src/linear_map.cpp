#include "xanchor/linear_map.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "xanchor/embed_io.hpp"
#include "xanchor/error.hpp"

namespace xanchor {

LinearMap LinearMap::identity(std::size_t dim) {
  LinearMap m;
  m.w = RowMatrix::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  m.orthogonal = true;
  return m;
}

double LinearMap::orthogonality_defect() const {
  return (w.transpose() * w - RowMatrix::Identity(w.cols(), w.cols())).norm();
}

std::vector<double> LinearMap::apply(std::span<const double> x) const {
  if (x.size() != dim()) {
    throw DataError("vector of length " + std::to_string(x.size()) + " for a " +
                    std::to_string(dim()) + "-d map");
  }
  Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
  Eigen::VectorXd y = w * v;
  return {y.data(), y.data() + y.size()};
}

AnchorTable LinearMap::apply(const AnchorTable& table) const {
  if (table.dim() != dim()) {
    throw DataError("table dim " + std::to_string(table.dim()) + " does not match map dim " +
                    std::to_string(dim()));
  }
  const RowMatrix mapped = table.matrix() * w.transpose();
  AnchorTable out(dim());
  for (std::size_t i = 0; i < table.size(); ++i) {
    out.add(table.key(i),
            std::span<const double>(mapped.row(static_cast<Eigen::Index>(i)).data(), dim()),
            table.count(i));
  }
  return out;
}

bool LinearMap::operator==(const LinearMap& other) const {
  return orthogonal == other.orthogonal && normalized == other.normalized &&
         w.rows() == other.w.rows() && w.cols() == other.w.cols() && w == other.w;
}

void write_map(const LinearMap& map, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  const auto d = map.w.rows();
  out << d << '\n';
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      if (j) out << ' ';
      out << format_double(map.w(i, j));
    }
    out << '\n';
  }
  out << "orthogonal: " << (map.orthogonal ? "true" : "false") << '\n';
  out << "normalized: " << (map.normalized ? "true" : "false") << '\n';
}

namespace {

bool parse_flag(const std::string& line, const std::string& name, std::size_t lineno) {
  const std::string prefix = name + ": ";
  if (line.rfind(prefix, 0) != 0) {
    throw FormatError("line " + std::to_string(lineno) + ": expected '" + name + ": true|false'", lineno);
  }
  const auto value = line.substr(prefix.size());
  if (value == "true") return true;
  if (value == "false") return false;
  throw FormatError("line " + std::to_string(lineno) + ": bad " + name + " value '" + value + "'", lineno);
}

}  // namespace

LinearMap read_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line)) throw FormatError("empty map file " + path.string(), 1);
  long long d = 0;
  {
    std::istringstream ss(line);
    std::string rest;
    if (!(ss >> d) || (ss >> rest) || d < 1) throw FormatError("line 1: expected dimension", 1);
  }
  LinearMap map;
  map.w.resize(d, d);
  for (long long i = 0; i < d; ++i) {
    ++lineno;
    if (!std::getline(in, line)) throw FormatError("map ends before row " + std::to_string(i + 1), lineno);
    std::istringstream ss(line);
    std::string tok;
    long long j = 0;
    while (ss >> tok) {
      if (j >= d) throw FormatError("line " + std::to_string(lineno) + ": too many values", lineno);
      char* end = nullptr;
      const double v = std::strtod(tok.c_str(), &end);
      if (end != tok.c_str() + tok.size() || !std::isfinite(v)) {
        throw FormatError("line " + std::to_string(lineno) + ": bad number '" + tok + "'", lineno);
      }
      map.w(i, j++) = v;
    }
    if (j != d) throw FormatError("line " + std::to_string(lineno) + ": expected " + std::to_string(d) + " values", lineno);
  }
  ++lineno;
  if (!std::getline(in, line)) throw FormatError("missing orthogonal flag", lineno);
  map.orthogonal = parse_flag(line, "orthogonal", lineno);
  ++lineno;
  if (std::getline(in, line) && !line.empty()) map.normalized = parse_flag(line, "normalized", lineno);
  return map;
}

}  // namespace xanchor
