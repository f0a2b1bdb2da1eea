#pragma once

#include "qo/errors.hpp"
#include "qo/grid_graph.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace qo {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Symmetric sparse matrix in compressed-sparse-row layout. Both triangles are
/// stored; the pattern is structurally symmetric and column indices are strictly
/// increasing within each row. Once built the pattern never changes, only values.
template <typename Scalar>
class SparseSym {
 public:
  using StorageIndex = int;
  using Matrix = Eigen::SparseMatrix<Scalar, Eigen::RowMajor, StorageIndex>;
  using Triplet = Eigen::Triplet<Scalar, StorageIndex>;

  SparseSym() = default;

  /// Builds from triplets. Duplicates are summed. Throws unless the result is
  /// structurally and numerically symmetric (within `tol`).
  static SparseSym from_triplets(Eigen::Index dim, const std::vector<Triplet>& triplets,
                                 Scalar tol = Scalar(0)) {
    Matrix m(dim, dim);
    m.setFromTriplets(triplets.begin(), triplets.end());
    return SparseSym(std::move(m), tol);
  }

  /// Takes ownership of an Eigen matrix after checking symmetry.
  explicit SparseSym(Matrix m, Scalar tol = Scalar(0)) : m_(std::move(m)) {
    if (m_.rows() != m_.cols()) throw DimensionMismatch("square matrix", m_.rows(), m_.cols());
    m_.makeCompressed();
    check_symmetric(tol);
    index_diagonal();
  }

  Eigen::Index dim() const noexcept { return m_.rows(); }
  Eigen::Index nnz() const noexcept { return m_.nonZeros(); }
  const Matrix& matrix() const noexcept { return m_; }

  std::span<const StorageIndex> row_offsets() const {
    return {m_.outerIndexPtr(), static_cast<std::size_t>(dim() + 1)};
  }
  std::span<const StorageIndex> col_indices() const {
    return {m_.innerIndexPtr(), static_cast<std::size_t>(nnz())};
  }
  std::span<const Scalar> values() const { return {m_.valuePtr(), static_cast<std::size_t>(nnz())}; }

  /// Position of (row, col) in values(), or -1 when outside the pattern.
  Eigen::Index find(Eigen::Index row, Eigen::Index col) const {
    const auto cols = col_indices();
    const auto begin = cols.begin() + row_offsets()[row];
    const auto end = cols.begin() + row_offsets()[row + 1];
    const auto it = std::lower_bound(begin, end, static_cast<StorageIndex>(col));
    return (it != end && *it == col) ? static_cast<Eigen::Index>(it - cols.begin()) : -1;
  }

  Scalar coeff(Eigen::Index row, Eigen::Index col) const {
    const Eigen::Index k = find(row, col);
    return k < 0 ? Scalar(0) : m_.valuePtr()[k];
  }

  bool has_full_diagonal() const noexcept {
    return std::none_of(diag_.begin(), diag_.end(), [](StorageIndex k) { return k < 0; });
  }

  /// Position of the diagonal entry of each row (-1 when absent).
  std::span<const StorageIndex> diagonal_positions() const { return diag_; }

  Vector<Scalar> diagonal() const {
    Vector<Scalar> d = Vector<Scalar>::Zero(dim());
    for (Eigen::Index i = 0; i < dim(); ++i)
      if (diag_[i] >= 0) d[i] = m_.valuePtr()[diag_[i]];
    return d;
  }

  /// Same pattern, new values (one per stored entry, in storage order).
  /// Values must respect symmetry; this is checked.
  SparseSym with_values(const Vector<Scalar>& v, Scalar tol = Scalar(0)) const {
    if (v.size() != nnz()) throw DimensionMismatch("pattern values", nnz(), v.size());
    SparseSym out = *this;
    std::copy(v.data(), v.data() + v.size(), out.m_.valuePtr());
    out.check_symmetric(tol);
    return out;
  }

  /// Adds `lambda` to every stored diagonal entry in place.
  void shift_diagonal(Scalar lambda) {
    for (auto k : diag_)
      if (k >= 0) m_.valuePtr()[k] += lambda;
  }

  /// Same pattern with every value set to zero.
  SparseSym zeros_like() const {
    SparseSym out = *this;
    std::fill(out.m_.valuePtr(), out.m_.valuePtr() + nnz(), Scalar(0));
    return out;
  }

  /// Stored values as a dense vector in storage order.
  Vector<Scalar> value_vector() const {
    return Eigen::Map<const Vector<Scalar>>(m_.valuePtr(), nnz());
  }

  /// Position of the transposed entry for every stored entry.
  std::vector<Eigen::Index> transpose_positions() const {
    std::vector<Eigen::Index> out(static_cast<std::size_t>(nnz()));
    const auto offs = row_offsets();
    const auto cols = col_indices();
    for (Eigen::Index i = 0; i < dim(); ++i)
      for (auto k = offs[i]; k < offs[i + 1]; ++k) out[k] = find(cols[k], i);
    return out;
  }

  bool same_pattern(const SparseSym& other) const {
    return dim() == other.dim() && nnz() == other.nnz() &&
           std::equal(row_offsets().begin(), row_offsets().end(), other.row_offsets().begin()) &&
           std::equal(col_indices().begin(), col_indices().end(), other.col_indices().begin());
  }

 private:
  void check_symmetric(Scalar tol) const {
    const auto offs = row_offsets();
    const auto cols = col_indices();
    const Scalar* vals = m_.valuePtr();
    for (Eigen::Index i = 0; i < dim(); ++i) {
      for (auto k = offs[i]; k < offs[i + 1]; ++k) {
        const Eigen::Index t = find(cols[k], i);
        if (t < 0)
          throw InvalidArgument("pattern is not structurally symmetric at (" + std::to_string(i) +
                                "," + std::to_string(cols[k]) + ")");
        using std::abs;
        if (abs(vals[k] - vals[t]) > tol)
          throw InvalidArgument("matrix is not symmetric at (" + std::to_string(i) + "," +
                                std::to_string(cols[k]) + ")");
      }
    }
  }

  void index_diagonal() {
    diag_.assign(static_cast<std::size_t>(dim()), -1);
    for (Eigen::Index i = 0; i < dim(); ++i) diag_[i] = static_cast<StorageIndex>(find(i, i));
  }

  Matrix m_;
  std::vector<StorageIndex> diag_;
};

using SparseSymd = SparseSym<double>;

/// Zero-valued pattern for a grid. With `label_coupled` the matrix is P*L square and every
/// label pair at neighbouring pixels interacts; otherwise it is P x P over pixels.
/// The full diagonal is always present.
template <typename Scalar = double>
SparseSym<Scalar> build_pattern(const GridGraph& graph, bool label_coupled) {
  using T = typename SparseSym<Scalar>::Triplet;
  const Eigen::Index L = label_coupled ? graph.labels() : 1;
  const Eigen::Index n = graph.pixels() * L;
  const auto edges = graph.edges();
  std::vector<T> trips;
  trips.reserve(static_cast<std::size_t>(n + 2 * edges.size() * L * L));
  for (Eigen::Index i = 0; i < n; ++i) trips.emplace_back(i, i, Scalar(0));
  for (const auto& [p, q] : edges) {
    for (Eigen::Index a = 0; a < L; ++a) {
      for (Eigen::Index b = 0; b < L; ++b) {
        trips.emplace_back(p * L + a, q * L + b, Scalar(0));
        trips.emplace_back(q * L + b, p * L + a, Scalar(0));
      }
    }
  }
  return SparseSym<Scalar>::from_triplets(n, trips);
}

template <typename Scalar, typename Derived>
Vector<Scalar> spmv(const SparseSym<Scalar>& m, const Eigen::MatrixBase<Derived>& v) {
  if (v.size() != m.dim()) throw DimensionMismatch("spmv operand", m.dim(), v.size());
  return m.matrix() * v;
}

/// M + lambda * I. Requires the diagonal to be present in the pattern, so the
/// pattern of the result equals that of M.
template <typename Scalar>
SparseSym<Scalar> add_scaled_identity(const SparseSym<Scalar>& m, Scalar lambda) {
  if (!m.has_full_diagonal())
    throw InvalidArgument("add_scaled_identity needs a structurally full diagonal");
  SparseSym<Scalar> out = m;
  out.shift_diagonal(lambda);
  return out;
}

/// Smallest Gershgorin lower bound min_i (a_ii - sum_{j != i} |a_ij|). A positive
/// value certifies positive definiteness; a non-positive one is inconclusive.
template <typename Scalar>
Scalar gershgorin_lower_bound(const SparseSym<Scalar>& m) {
  using std::abs;
  Scalar bound = std::numeric_limits<Scalar>::infinity();
  const auto offs = m.row_offsets();
  const auto cols = m.col_indices();
  const auto vals = m.values();
  for (Eigen::Index i = 0; i < m.dim(); ++i) {
    Scalar diag(0), off(0);
    for (auto k = offs[i]; k < offs[i + 1]; ++k) {
      if (cols[k] == i) diag = vals[k];
      else off += abs(vals[k]);
    }
    bound = std::min(bound, diag - off);
  }
  return bound;
}

}  // namespace qo
