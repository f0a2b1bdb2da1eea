#pragma once

#include "qo/grid_graph.hpp"

#include <Eigen/Core>

#include <vector>

namespace qo {

/// Per-pixel ground-truth classes, 0-based: class k is label k + 1 in 1-based terms.
struct LabelMap {
  LabelMap(GridGraph g, std::vector<Eigen::Index> l);

  GridGraph graph;
  std::vector<Eigen::Index> labels;
};

struct LossResult {
  double loss;
  ScoreField grad;
};

/// Mean over pixels of the softmax cross-entropy, with its gradient
/// dL/dx(p,l) = (softmax(x_p)_l - [l == y_p]) / P.
LossResult softmax_xent(const ScoreField& x, const LabelMap& y);

/// Per-pixel softmax probabilities (max-shifted for stability).
ScoreField softmax(const ScoreField& x);

/// Per-pixel argmax; ties go to the lowest class index.
LabelMap argmax_labels(const ScoreField& x);

struct SegmentationMetrics {
  double pixel_accuracy;
  /// NaN for a class absent from both prediction and ground truth.
  std::vector<double> class_iou;
  /// Mean over classes present in prediction or ground truth.
  double mean_iou;
};

SegmentationMetrics evaluate(const LabelMap& predicted, const LabelMap& truth);
SegmentationMetrics evaluate(const ScoreField& x, const LabelMap& truth);

}  // namespace qo
