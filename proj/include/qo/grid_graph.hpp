#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace qo {

/// Neighbourhood shapes on the pixel lattice.
///   Four    left/right/top/bottom
///   Eight   Four plus the diagonals
///   Twelve  Eight plus the distance-2 axial neighbours
enum class Stencil { Four = 4, Eight = 8, Twelve = 12 };

Stencil stencil_from_int(int connectivity);
int to_int(Stencil s) noexcept;

/// Undirected pixel edge with first < second.
using PixelEdge = std::pair<Eigen::Index, Eigen::Index>;

/// Pixel-lattice connectivity descriptor. Pixels are numbered row-major and a
/// (pixel, label) pair maps to the flat index pixel * labels + label.
class GridGraph {
 public:
  GridGraph(Eigen::Index height, Eigen::Index width, Eigen::Index labels,
            Stencil stencil = Stencil::Four);

  Eigen::Index height() const noexcept { return height_; }
  Eigen::Index width() const noexcept { return width_; }
  Eigen::Index labels() const noexcept { return labels_; }
  Stencil stencil() const noexcept { return stencil_; }

  Eigen::Index pixels() const noexcept { return height_ * width_; }
  Eigen::Index dim() const noexcept { return pixels() * labels_; }

  Eigen::Index pixel(Eigen::Index row, Eigen::Index col) const noexcept { return row * width_ + col; }
  Eigen::Index index(Eigen::Index pixel, Eigen::Index label) const noexcept {
    return pixel * labels_ + label;
  }

  GridGraph with_stencil(Stencil s) const { return {height_, width_, labels_, s}; }
  GridGraph with_labels(Eigen::Index labels) const { return {height_, width_, labels, stencil_}; }

  /// Undirected, duplicate-free edge list in ascending (first, second) order.
  std::vector<PixelEdge> edges() const;

  /// In-bounds neighbours of one pixel, ascending.
  std::vector<Eigen::Index> neighbours(Eigen::Index pixel) const;

  friend bool operator==(const GridGraph&, const GridGraph&) = default;

 private:
  Eigen::Index height_;
  Eigen::Index width_;
  Eigen::Index labels_;
  Stencil stencil_;
};

/// Real-valued field indexed by (pixel, label), flat index pixel * L + label.
struct ScoreField {
  ScoreField(GridGraph g, Eigen::VectorXd v);
  explicit ScoreField(GridGraph g) : ScoreField(g, Eigen::VectorXd::Zero(g.dim())) {}

  double operator()(Eigen::Index pixel, Eigen::Index label) const {
    return values[graph.index(pixel, label)];
  }
  double& operator()(Eigen::Index pixel, Eigen::Index label) {
    return values[graph.index(pixel, label)];
  }

  using RowMajorMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

  /// P x L view; column k holds the scores of class k.
  RowMajorMap per_class() const { return {values.data(), graph.pixels(), graph.labels()}; }

  GridGraph graph;
  Eigen::VectorXd values;
};

/// Converts a P x L per-class matrix to the pixel-major flat layout.
Eigen::VectorXd flatten_per_class(const Eigen::MatrixXd& per_class);

}  // namespace qo
