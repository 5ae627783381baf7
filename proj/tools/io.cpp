#include "homtype/io.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace homtype::io {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(std::string_view(line).substr(
        start, pos == std::string::npos ? std::string::npos : pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_number(const std::string& text, double& out) {
  if (text.empty()) return false;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

bool parse_int(const std::string& text, int& out) {
  if (text.empty()) return false;
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), last, out);
  return ec == std::errc() && ptr == last;
}

[[noreturn]] void fail(const std::string& source, int line, const std::string& what) {
  throw ValidationError(fmt::format("{}:{}: {}", source, line, what));
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(fmt::format("cannot open {}", path.string()));
  return in;
}

/// Maps a point id string back to its index.
std::map<std::string, int> id_index(const QuasiMetricSpace& space) {
  std::map<std::string, int> idx;
  for (int i = 0; i < space.n(); ++i) idx[space.ids()[static_cast<std::size_t>(i)]] = i;
  return idx;
}

}  // namespace

PointSet parse_points_csv(std::istream& in, const std::string& source) {
  std::string line;
  int lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (!trim(line).empty()) {
      header = split(line, ',');
      break;
    }
  }
  if (header.empty()) fail(source, lineno, "missing header row");
  if (header.front() != "id") fail(source, lineno, "header must start with 'id'");
  const bool weighted = header.back() == "weight";
  const int dim = static_cast<int>(header.size()) - 1 - (weighted ? 1 : 0);
  if (dim < 1) fail(source, lineno, "header names no coordinate columns");

  PointSet pts;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != header.size())
      fail(source, lineno,
           fmt::format("expected {} fields, found {}", header.size(), cells.size()));
    if (cells[0].empty()) fail(source, lineno, "empty id");
    std::vector<double> x(static_cast<std::size_t>(dim));
    for (int j = 0; j < dim; ++j)
      if (!parse_number(cells[static_cast<std::size_t>(j) + 1], x[static_cast<std::size_t>(j)]) ||
          !std::isfinite(x[static_cast<std::size_t>(j)]))
        fail(source, lineno, fmt::format("bad coordinate '{}'", cells[static_cast<std::size_t>(j) + 1]));
    if (weighted) {
      double w = 0.0;
      if (!parse_number(cells.back(), w) || !std::isfinite(w))
        fail(source, lineno, fmt::format("bad weight '{}'", cells.back()));
      if (!(w > 0.0))
        fail(source, lineno, fmt::format("weight must be positive, got {}", cells.back()));
      pts.weights.push_back(w);
    }
    pts.ids.push_back(cells[0]);
    pts.coords.push_back(std::move(x));
  }
  return pts;
}

PointSet read_points_csv(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  return parse_points_csv(in, path.string());
}

Matrix parse_distance_matrix(std::istream& in, double tolerance,
                             const std::string& source) {
  std::string line;
  int lineno = 0;
  int n = -1;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (!parse_int(t, n) || n < 1) fail(source, lineno, fmt::format("bad size '{}'", t));
    break;
  }
  if (n < 0) fail(source, lineno, "missing size line");
  Matrix d(n, n);
  int row = 0;
  while (row < n && std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::istringstream cells(line);
    cells.imbue(std::locale::classic());
    std::string tok;
    int col = 0;
    while (cells >> tok) {
      if (col >= n) fail(source, lineno, fmt::format("more than {} entries", n));
      double v = 0.0;
      if (!parse_number(tok, v) || !std::isfinite(v))
        fail(source, lineno, fmt::format("bad entry '{}'", tok));
      if (v < 0.0) fail(source, lineno, fmt::format("negative distance {}", tok));
      d(row, col++) = v;
    }
    if (col != n) fail(source, lineno, fmt::format("expected {} entries, found {}", n, col));
    ++row;
  }
  if (row != n) fail(source, lineno, fmt::format("expected {} rows, found {}", n, row));

  const double scale = std::max(1.0, d.cwiseAbs().maxCoeff());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double gap = std::abs(d(i, j) - d(j, i));
      if (gap > tolerance * scale)
        throw ValidationError(fmt::format(
            "{}: asymmetric entries ({}, {}) differ by {:.3g}", source, i, j, gap));
      d(i, j) = d(j, i) = 0.5 * (d(i, j) + d(j, i));
    }
  return d;
}

Matrix read_distance_matrix(const std::filesystem::path& path, double tolerance) {
  std::ifstream in = open_input(path);
  return parse_distance_matrix(in, tolerance, path.string());
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", v);
}

void write_coefficients_csv(std::ostream& out, const CoefficientSequence& seq) {
  const CubeFamily& fam = *seq.family;
  const auto& ids = fam.tree().space().ids();
  out << "level,alpha,value\n";
  for (std::size_t i = 0; i < fam.size(); ++i)
    out << fam[i].level << ',' << ids[static_cast<std::size_t>(fam[i].center)] << ','
        << format_double(seq.values[static_cast<Eigen::Index>(i)]) << '\n';
}

CoefficientSequence parse_coefficients_csv(std::istream& in,
                                           const FamilyPtr& family,
                                           const std::string& source) {
  const auto idx = id_index(family->tree().space());
  CoefficientSequence seq(family);
  std::string line;
  int lineno = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    if (header) {
      header = false;
      if (cells.size() == 3 && cells[0] == "level") continue;
    }
    if (cells.size() != 3) fail(source, lineno, "expected level,alpha,value");
    int level = 0;
    double value = 0.0;
    if (!parse_int(cells[0], level)) fail(source, lineno, "bad level");
    const auto it = idx.find(cells[1]);
    if (it == idx.end()) fail(source, lineno, fmt::format("unknown point '{}'", cells[1]));
    if (!parse_number(cells[2], value)) fail(source, lineno, "bad value");
    const int i = family->find(level, it->second);
    if (i < 0)
      fail(source, lineno, fmt::format("no cube at level {} centered at {}", level, cells[1]));
    seq.values[i] = value;
  }
  return seq;
}

void write_operator_csv(std::ostream& out, const CubeOperator& op) {
  const CubeFamily& fam = *op.family;
  const auto& ids = fam.tree().space().ids();
  out << "qlevel,qalpha,plevel,palpha,value\n";
  for (Eigen::Index r = 0; r < op.entries.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(op.entries, r); it; ++it) {
      if (it.value() == 0.0) continue;
      const FamilyCube& q = fam[static_cast<std::size_t>(it.row())];
      const FamilyCube& p = fam[static_cast<std::size_t>(it.col())];
      out << q.level << ',' << ids[static_cast<std::size_t>(q.center)] << ','
          << p.level << ',' << ids[static_cast<std::size_t>(p.center)] << ','
          << format_double(it.value()) << '\n';
    }
}

CubeOperator parse_operator_csv(std::istream& in, const FamilyPtr& family,
                                const std::string& source) {
  const auto idx = id_index(family->tree().space());
  std::vector<Eigen::Triplet<double>> triplets;
  std::string line;
  int lineno = 0;
  bool header = true;
  auto locate = [&](const std::string& lv, const std::string& id) {
    int level = 0;
    if (!parse_int(lv, level)) fail(source, lineno, fmt::format("bad level '{}'", lv));
    const auto it = idx.find(id);
    if (it == idx.end()) fail(source, lineno, fmt::format("unknown point '{}'", id));
    const int i = family->find(level, it->second);
    if (i < 0)
      fail(source, lineno, fmt::format("no cube at level {} centered at {}", level, id));
    return i;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    if (header) {
      header = false;
      if (cells.size() == 5 && cells[0] == "qlevel") continue;
    }
    if (cells.size() != 5) fail(source, lineno, "expected qlevel,qalpha,plevel,palpha,value");
    const int q = locate(cells[0], cells[1]);
    const int p = locate(cells[2], cells[3]);
    double v = 0.0;
    if (!parse_number(cells[4], v) || !std::isfinite(v)) fail(source, lineno, "bad value");
    triplets.emplace_back(q, p, v);
  }
  CubeOperator op(family);
  op.entries.setFromTriplets(triplets.begin(), triplets.end());
  return op;
}

void write_vector_csv(std::ostream& out, const QuasiMetricSpace& space,
                      const Vector& v) {
  out << "point_id,value\n";
  for (int i = 0; i < space.n(); ++i)
    out << space.ids()[static_cast<std::size_t>(i)] << ',' << format_double(v[i]) << '\n';
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  out << text;
}

}  // namespace homtype::io
