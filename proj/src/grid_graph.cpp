#include "qo/grid_graph.hpp"

#include "qo/errors.hpp"

#include <algorithm>
#include <array>
#include <string>

namespace qo {

namespace {

struct Offset {
  int dr;
  int dc;
};

// Forward half of each stencil; the reverse direction is implied by symmetry.
constexpr std::array<Offset, 2> kAxial{{{0, 1}, {1, 0}}};
constexpr std::array<Offset, 2> kDiagonal{{{1, 1}, {1, -1}}};
constexpr std::array<Offset, 2> kAxialTwo{{{0, 2}, {2, 0}}};

template <typename F>
void for_each_forward_offset(Stencil s, F&& f) {
  for (auto o : kAxial) f(o);
  if (s == Stencil::Four) return;
  for (auto o : kDiagonal) f(o);
  if (s == Stencil::Eight) return;
  for (auto o : kAxialTwo) f(o);
}

}  // namespace

Stencil stencil_from_int(int connectivity) {
  switch (connectivity) {
    case 4: return Stencil::Four;
    case 8: return Stencil::Eight;
    case 12: return Stencil::Twelve;
    default:
      throw InvalidArgument("stencil must be 4, 8 or 12, got " + std::to_string(connectivity));
  }
}

int to_int(Stencil s) noexcept { return static_cast<int>(s); }

GridGraph::GridGraph(Eigen::Index height, Eigen::Index width, Eigen::Index labels, Stencil stencil)
    : height_(height), width_(width), labels_(labels), stencil_(stencil) {
  if (height < 1 || width < 1)
    throw InvalidArgument("grid must be at least 1x1, got " + std::to_string(height) + "x" +
                          std::to_string(width));
  if (labels < 1) throw InvalidArgument("label count must be >= 1");
}

std::vector<PixelEdge> GridGraph::edges() const {
  std::vector<PixelEdge> out;
  for (Eigen::Index r = 0; r < height_; ++r) {
    for (Eigen::Index c = 0; c < width_; ++c) {
      const Eigen::Index p = pixel(r, c);
      for_each_forward_offset(stencil_, [&](Offset o) {
        const Eigen::Index rr = r + o.dr;
        const Eigen::Index cc = c + o.dc;
        if (rr < 0 || rr >= height_ || cc < 0 || cc >= width_) return;
        const Eigen::Index q = pixel(rr, cc);
        out.emplace_back(std::min(p, q), std::max(p, q));
      });
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Eigen::Index> GridGraph::neighbours(Eigen::Index p) const {
  const Eigen::Index r = p / width_;
  const Eigen::Index c = p % width_;
  std::vector<Eigen::Index> out;
  for_each_forward_offset(stencil_, [&](Offset o) {
    for (int sign : {1, -1}) {
      const Eigen::Index rr = r + sign * o.dr;
      const Eigen::Index cc = c + sign * o.dc;
      if (rr < 0 || rr >= height_ || cc < 0 || cc >= width_) continue;
      out.push_back(pixel(rr, cc));
    }
  });
  std::sort(out.begin(), out.end());
  return out;
}

ScoreField::ScoreField(GridGraph g, Eigen::VectorXd v) : graph(g), values(std::move(v)) {
  if (values.size() != graph.dim())
    throw DimensionMismatch("score field", graph.dim(), values.size());
  if (!values.allFinite()) throw InvalidArgument("score field contains non-finite entries");
}

Eigen::VectorXd flatten_per_class(const Eigen::MatrixXd& per_class) {
  Eigen::VectorXd out(per_class.size());
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      out.data(), per_class.rows(), per_class.cols()) = per_class;
  return out;
}

}  // namespace qo
