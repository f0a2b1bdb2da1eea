#pragma once

// Plain-text exchange formats.
//
// System file: a header line `dim nnz`, then one `row col value` triple per line,
// 0-based, both triangles stored, rows ascending and columns ascending within a row.
// Vector file: one value per line.
//
// Values are written in shortest round-trip form, so a write/read cycle is exact.

#include "qo/sparse_sym.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <iosfwd>
#include <string>

namespace qo::io {

void write_system(std::ostream& out, const SparseSymd& m);
void write_system(const std::filesystem::path& path, const SparseSymd& m);

/// Parses a system file. Throws qo::InvalidArgument on malformed input, a
/// triple count that disagrees with the header, out-of-range indices or an
/// asymmetric matrix.
SparseSymd read_system(std::istream& in);
SparseSymd read_system(const std::filesystem::path& path);

void write_vector(std::ostream& out, const Eigen::VectorXd& v);
void write_vector(const std::filesystem::path& path, const Eigen::VectorXd& v);

Eigen::VectorXd read_vector(std::istream& in);
Eigen::VectorXd read_vector(const std::filesystem::path& path);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace qo::io
