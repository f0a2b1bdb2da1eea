#include "qo/loss.hpp"

#include "qo/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace qo {

LabelMap::LabelMap(GridGraph g, std::vector<Eigen::Index> l) : graph(g), labels(std::move(l)) {
  if (static_cast<Eigen::Index>(labels.size()) != graph.pixels())
    throw DimensionMismatch("label map", graph.pixels(), static_cast<long>(labels.size()));
  for (std::size_t p = 0; p < labels.size(); ++p)
    if (labels[p] < 0 || labels[p] >= graph.labels())
      throw InvalidArgument("label " + std::to_string(labels[p]) + " at pixel " + std::to_string(p) +
                            " is out of range");
}

ScoreField softmax(const ScoreField& x) {
  const Eigen::Index L = x.graph.labels();
  Eigen::VectorXd prob(x.values.size());
  for (Eigen::Index p = 0; p < x.graph.pixels(); ++p) {
    const auto scores = x.values.segment(p * L, L);
    const Eigen::ArrayXd e = (scores.array() - scores.maxCoeff()).exp();
    prob.segment(p * L, L) = e / e.sum();
  }
  return {x.graph, std::move(prob)};
}

LossResult softmax_xent(const ScoreField& x, const LabelMap& y) {
  if (y.graph.pixels() != x.graph.pixels())
    throw DimensionMismatch("label map pixels", x.graph.pixels(), y.graph.pixels());
  const Eigen::Index L = x.graph.labels();
  const Eigen::Index P = x.graph.pixels();
  for (auto l : y.labels)
    if (l >= L) throw InvalidArgument("label " + std::to_string(l) + " is out of range for L=" + std::to_string(L));

  double total = 0;
  Eigen::VectorXd grad(x.values.size());
  for (Eigen::Index p = 0; p < P; ++p) {
    const auto scores = x.values.segment(p * L, L);
    const double shift = scores.maxCoeff();
    const Eigen::ArrayXd e = (scores.array() - shift).exp();
    const double z = e.sum();
    const Eigen::Index truth = y.labels[p];
    // -log p_y = log z - (x_y - shift)
    total += std::log(z) - (scores[truth] - shift);
    auto g = grad.segment(p * L, L);
    g = e.matrix() / z;
    g[truth] -= 1.0;
  }
  grad /= static_cast<double>(P);
  return {total / static_cast<double>(P), ScoreField(x.graph, std::move(grad))};
}

LabelMap argmax_labels(const ScoreField& x) {
  const Eigen::Index L = x.graph.labels();
  std::vector<Eigen::Index> out(static_cast<std::size_t>(x.graph.pixels()));
  for (Eigen::Index p = 0; p < x.graph.pixels(); ++p) {
    Eigen::Index best = 0;
    for (Eigen::Index l = 1; l < L; ++l)
      if (x.values[p * L + l] > x.values[p * L + best]) best = l;
    out[p] = best;
  }
  return {x.graph, std::move(out)};
}

SegmentationMetrics evaluate(const LabelMap& predicted, const LabelMap& truth) {
  if (predicted.labels.size() != truth.labels.size())
    throw DimensionMismatch("predicted labels", static_cast<long>(truth.labels.size()),
                            static_cast<long>(predicted.labels.size()));
  const Eigen::Index L = std::max(predicted.graph.labels(), truth.graph.labels());
  std::vector<long> inter(L, 0), uni(L, 0);
  long correct = 0;
  for (std::size_t p = 0; p < truth.labels.size(); ++p) {
    const auto a = predicted.labels[p];
    const auto b = truth.labels[p];
    if (a == b) {
      ++correct;
      ++inter[a];
      ++uni[a];
    } else {
      ++uni[a];
      ++uni[b];
    }
  }
  SegmentationMetrics m;
  m.pixel_accuracy = static_cast<double>(correct) / static_cast<double>(truth.labels.size());
  m.class_iou.assign(L, std::numeric_limits<double>::quiet_NaN());
  double sum = 0;
  int present = 0;
  for (Eigen::Index l = 0; l < L; ++l) {
    if (uni[l] == 0) continue;
    m.class_iou[l] = static_cast<double>(inter[l]) / static_cast<double>(uni[l]);
    sum += m.class_iou[l];
    ++present;
  }
  m.mean_iou = present > 0 ? sum / present : std::numeric_limits<double>::quiet_NaN();
  return m;
}

SegmentationMetrics evaluate(const ScoreField& x, const LabelMap& truth) {
  return evaluate(argmax_labels(x), truth);
}

}  // namespace qo
