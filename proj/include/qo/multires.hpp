#pragma once

// Coupled multi-resolution systems. Each scale is its own pixel grid with its own
// neighbourhood terms; cross-links tie every pixel to the pixel it falls on at
// each coarser scale. All scales are stacked into one block system, scale 0 first.
//
// Fine-to-coarse correspondence: row r of a grid with H_f rows maps to
// floor(r * H_c / H_f) of a grid with H_c rows, likewise for columns.

#include "qo/general.hpp"
#include "qo/grid_graph.hpp"
#include "qo/solvers.hpp"
#include "qo/sparse_sym.hpp"

#include <Eigen/Core>

#include <span>
#include <vector>

namespace qo {

struct CrossLink {
  Eigen::Index scale_a;
  Eigen::Index pixel_a;
  Eigen::Index scale_b;
  Eigen::Index pixel_b;

  friend bool operator==(const CrossLink&, const CrossLink&) = default;
};

enum class Coupling { Coupled, Decoupled };

class MultiResGraph {
 public:
  MultiResGraph(std::vector<GridGraph> scales, std::vector<CrossLink> cross_links);

  const std::vector<GridGraph>& scales() const noexcept { return scales_; }
  const std::vector<CrossLink>& cross_links() const noexcept { return links_; }
  Eigen::Index labels() const noexcept { return scales_.front().labels(); }

  /// First pixel of scale s in the stacked pixel numbering.
  Eigen::Index pixel_offset(Eigen::Index s) const { return pixel_offsets_[s]; }
  Eigen::Index total_pixels() const noexcept { return pixel_offsets_.back(); }
  Eigen::Index total_dim() const noexcept { return total_pixels() * labels(); }

 private:
  std::vector<GridGraph> scales_;
  std::vector<CrossLink> links_;
  std::vector<Eigen::Index> pixel_offsets_;
};

/// Fine-to-coarse pixel correspondence under floor coordinate scaling.
Eigen::Index corresponding_pixel(const GridGraph& from, Eigen::Index pixel, const GridGraph& to);

/// Grid dimensions of a scale that is `factor` times the base size (ceil, at least 1).
GridGraph scaled_grid(const GridGraph& base, double factor);

/// Scales must share one label count; each keeps its own stencil. Coupled mode links
/// every pixel of scale a to its corresponding pixel in every scale b that has fewer
/// pixels (ties broken by order), decoupled mode emits no links.
MultiResGraph build_multires(std::vector<GridGraph> scales, Coupling coupling);

/// Stacked pattern: per-scale grid patterns on the diagonal blocks plus cross-link
/// entries. `label_coupled` gives every label pair per link (general path);
/// otherwise one entry per link on the stacked pixel index (Potts path).
SparseSymd build_multires_pattern(const MultiResGraph& graph, bool label_coupled);

struct MultiResResult {
  std::vector<ScoreField> per_scale;
  SolveReport report;
};

/// Splits a stacked vector into per-scale score fields.
std::vector<ScoreField> split_scales(const MultiResGraph& graph, const Eigen::VectorXd& stacked);

/// Concatenates per-scale unaries into the stacked layout.
Eigen::VectorXd stack_scales(const MultiResGraph& graph, std::span<const ScoreField> fields);

/// Solves (A + lambda I) x = B over the stacked system and splits x per scale.
MultiResResult multires_infer(const GeneralQO& model, const MultiResGraph& graph,
                              const Eigen::VectorXd& stacked_unary, const SolverConfig& cfg = {});

/// Nearest-neighbour upsampling of every field onto the grid with the most pixels,
/// then an elementwise mean.
ScoreField fuse_scores(std::span<const ScoreField> fields);

}  // namespace qo
