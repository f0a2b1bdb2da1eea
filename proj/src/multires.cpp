#include "qo/multires.hpp"

#include "qo/errors.hpp"

#include <cmath>
#include <string>

namespace qo {

MultiResGraph::MultiResGraph(std::vector<GridGraph> scales, std::vector<CrossLink> cross_links)
    : scales_(std::move(scales)), links_(std::move(cross_links)) {
  if (scales_.empty()) throw InvalidArgument("multi-resolution graph needs at least one scale");
  pixel_offsets_.push_back(0);
  for (const auto& g : scales_) {
    if (g.labels() != scales_.front().labels())
      throw InvalidArgument("all scales must share one label count");
    pixel_offsets_.push_back(pixel_offsets_.back() + g.pixels());
  }
  const auto n_scales = static_cast<Eigen::Index>(scales_.size());
  for (const auto& l : links_) {
    if (l.scale_a == l.scale_b) throw InvalidArgument("cross-link must connect distinct scales");
    if (l.scale_a < 0 || l.scale_a >= n_scales || l.scale_b < 0 || l.scale_b >= n_scales)
      throw InvalidArgument("cross-link scale out of range");
    if (l.pixel_a < 0 || l.pixel_a >= scales_[l.scale_a].pixels() || l.pixel_b < 0 ||
        l.pixel_b >= scales_[l.scale_b].pixels())
      throw InvalidArgument("cross-link pixel out of range");
  }
}

Eigen::Index corresponding_pixel(const GridGraph& from, Eigen::Index pixel, const GridGraph& to) {
  const Eigen::Index r = pixel / from.width();
  const Eigen::Index c = pixel % from.width();
  return to.pixel(r * to.height() / from.height(), c * to.width() / from.width());
}

GridGraph scaled_grid(const GridGraph& base, double factor) {
  if (!(factor > 0) || factor > 1) throw InvalidArgument("scale factors must lie in (0, 1]");
  auto scale = [factor](Eigen::Index n) {
    return std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::ceil(n * factor - 1e-9)));
  };
  return {scale(base.height()), scale(base.width()), base.labels(), base.stencil()};
}

MultiResGraph build_multires(std::vector<GridGraph> scales, Coupling coupling) {
  if (scales.empty()) throw InvalidArgument("multi-resolution graph needs at least one scale");
  std::vector<CrossLink> links;
  if (coupling == Coupling::Coupled) {
    const auto n = static_cast<Eigen::Index>(scales.size());
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = a + 1; b < n; ++b) {
        const bool a_finer = scales[a].pixels() >= scales[b].pixels();
        const Eigen::Index fine = a_finer ? a : b;
        const Eigen::Index coarse = a_finer ? b : a;
        for (Eigen::Index p = 0; p < scales[fine].pixels(); ++p)
          links.push_back({fine, p, coarse, corresponding_pixel(scales[fine], p, scales[coarse])});
      }
    }
  }
  return {std::move(scales), std::move(links)};
}

SparseSymd build_multires_pattern(const MultiResGraph& graph, bool label_coupled) {
  const Eigen::Index L = label_coupled ? graph.labels() : 1;
  std::vector<SparseSymd::Triplet> trips;
  for (std::size_t s = 0; s < graph.scales().size(); ++s) {
    const SparseSymd block = build_pattern(graph.scales()[s], label_coupled);
    const Eigen::Index base = graph.pixel_offset(static_cast<Eigen::Index>(s)) * L;
    const auto offs = block.row_offsets();
    const auto cols = block.col_indices();
    for (Eigen::Index i = 0; i < block.dim(); ++i)
      for (auto k = offs[i]; k < offs[i + 1]; ++k) trips.emplace_back(base + i, base + cols[k], 0.0);
  }
  for (const auto& link : graph.cross_links()) {
    const Eigen::Index p = graph.pixel_offset(link.scale_a) + link.pixel_a;
    const Eigen::Index q = graph.pixel_offset(link.scale_b) + link.pixel_b;
    for (Eigen::Index a = 0; a < L; ++a) {
      for (Eigen::Index b = 0; b < L; ++b) {
        trips.emplace_back(p * L + a, q * L + b, 0.0);
        trips.emplace_back(q * L + b, p * L + a, 0.0);
      }
    }
  }
  return SparseSymd::from_triplets(graph.total_pixels() * L, trips);
}

std::vector<ScoreField> split_scales(const MultiResGraph& graph, const Eigen::VectorXd& stacked) {
  if (stacked.size() != graph.total_dim())
    throw DimensionMismatch("stacked multi-resolution vector", graph.total_dim(), stacked.size());
  std::vector<ScoreField> out;
  const Eigen::Index L = graph.labels();
  for (std::size_t s = 0; s < graph.scales().size(); ++s) {
    const auto& g = graph.scales()[s];
    out.emplace_back(g, stacked.segment(graph.pixel_offset(static_cast<Eigen::Index>(s)) * L, g.dim()));
  }
  return out;
}

Eigen::VectorXd stack_scales(const MultiResGraph& graph, std::span<const ScoreField> fields) {
  if (fields.size() != graph.scales().size())
    throw DimensionMismatch("per-scale field count", static_cast<long>(graph.scales().size()),
                            static_cast<long>(fields.size()));
  Eigen::VectorXd out(graph.total_dim());
  const Eigen::Index L = graph.labels();
  for (std::size_t s = 0; s < fields.size(); ++s) {
    const auto& g = graph.scales()[s];
    if (fields[s].values.size() != g.dim())
      throw DimensionMismatch("scale " + std::to_string(s) + " field", g.dim(), fields[s].values.size());
    out.segment(graph.pixel_offset(static_cast<Eigen::Index>(s)) * L, g.dim()) = fields[s].values;
  }
  return out;
}

MultiResResult multires_infer(const GeneralQO& model, const MultiResGraph& graph,
                              const Eigen::VectorXd& stacked_unary, const SolverConfig& cfg) {
  if (model.dim() != graph.total_dim())
    throw DimensionMismatch("multi-resolution system", graph.total_dim(), model.dim());
  auto res = infer(model, stacked_unary, cfg);
  return {split_scales(graph, res.x), std::move(res.report)};
}

ScoreField fuse_scores(std::span<const ScoreField> fields) {
  if (fields.empty()) throw InvalidArgument("fuse_scores needs at least one field");
  std::size_t finest = 0;
  for (std::size_t s = 1; s < fields.size(); ++s)
    if (fields[s].graph.pixels() > fields[finest].graph.pixels()) finest = s;
  if (fields.size() == 1) return fields.front();

  const GridGraph& target = fields[finest].graph;
  const Eigen::Index L = target.labels();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(target.dim());
  for (const auto& f : fields) {
    if (f.graph.labels() != L) throw DimensionMismatch("fused label count", L, f.graph.labels());
    for (Eigen::Index p = 0; p < target.pixels(); ++p) {
      const Eigen::Index src = corresponding_pixel(target, p, f.graph);
      sum.segment(p * L, L) += f.values.segment(src * L, L);
    }
  }
  return {target, sum / static_cast<double>(fields.size())};
}

}  // namespace qo
