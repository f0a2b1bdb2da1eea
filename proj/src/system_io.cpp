#include "qo/system_io.hpp"

#include "qo/errors.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace qo::io {

namespace {

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot open '" + path.string() + "' for writing");
  return out;
}

bool next_content_line(std::istream& in, std::string& line, long& line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
  }
  return false;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, res.ptr};
}

void write_system(std::ostream& out, const SparseSymd& m) {
  out << m.dim() << ' ' << m.nnz() << '\n';
  const auto offs = m.row_offsets();
  const auto cols = m.col_indices();
  const auto vals = m.values();
  for (Eigen::Index i = 0; i < m.dim(); ++i)
    for (auto k = offs[i]; k < offs[i + 1]; ++k)
      out << i << ' ' << cols[k] << ' ' << format_double(vals[k]) << '\n';
}

void write_system(const std::filesystem::path& path, const SparseSymd& m) {
  auto out = open_out(path);
  write_system(out, m);
}

SparseSymd read_system(std::istream& in) {
  std::string line;
  long line_no = 0;
  if (!next_content_line(in, line, line_no)) throw InvalidArgument("system file is empty");
  long dim = -1, nnz = -1;
  {
    std::istringstream header(line);
    if (!(header >> dim >> nnz) || dim < 1 || nnz < 0)
      throw InvalidArgument("system file header must be `dim nnz`, got '" + line + "'");
  }
  std::vector<SparseSymd::Triplet> trips;
  trips.reserve(static_cast<std::size_t>(nnz));
  while (next_content_line(in, line, line_no)) {
    std::istringstream row(line);
    long i = -1, j = -1;
    double v = 0;
    if (!(row >> i >> j >> v))
      throw InvalidArgument("line " + std::to_string(line_no) + ": expected `row col value`");
    if (i < 0 || i >= dim || j < 0 || j >= dim)
      throw InvalidArgument("line " + std::to_string(line_no) + ": index out of range");
    trips.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
  }
  if (static_cast<long>(trips.size()) != nnz)
    throw InvalidArgument("system file declares " + std::to_string(nnz) + " entries but has " +
                          std::to_string(trips.size()));
  auto m = SparseSymd::from_triplets(dim, trips);
  if (m.nnz() != nnz) throw InvalidArgument("system file contains duplicate entries");
  return m;
}

SparseSymd read_system(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_system(in);
}

void write_vector(std::ostream& out, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) out << format_double(v[i]) << '\n';
}

void write_vector(const std::filesystem::path& path, const Eigen::VectorXd& v) {
  auto out = open_out(path);
  write_vector(out, v);
}

Eigen::VectorXd read_vector(std::istream& in) {
  std::vector<double> vals;
  std::string line;
  long line_no = 0;
  while (next_content_line(in, line, line_no)) {
    std::istringstream row(line);
    double v = 0;
    if (!(row >> v)) throw InvalidArgument("line " + std::to_string(line_no) + ": expected a number");
    vals.push_back(v);
  }
  return Eigen::Map<const Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

Eigen::VectorXd read_vector(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_vector(in);
}

}  // namespace qo::io
