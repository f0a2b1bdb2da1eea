#pragma once

// Synthetic segmentation tasks and a plain gradient-descent trainer that learns
// pairwise terms (and optionally a per-class unary bias) through the QO layer.

#include "qo/errors.hpp"
#include "qo/grid_graph.hpp"
#include "qo/loss.hpp"
#include "qo/solvers.hpp"
#include "qo/sparse_sym.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace qo {

enum class Parameterization { General, Potts };
std::string_view to_string(Parameterization p) noexcept;

enum class TaskPattern { Blobs, Stripes };
TaskPattern task_pattern_from_string(std::string_view name);

struct SyntheticTask {
  std::uint64_t seed = 0;
  GridGraph graph{16, 16, 2};
  /// Standard deviation of the Gaussian noise added to the one-hot scores.
  double unary_noise = 0.5;
  /// Fraction of pixels whose unary scores are zeroed, in [0, 1).
  double occlusion_rate = 0.2;
  /// Score of the true class before noise.
  double margin = 1.0;
  TaskPattern pattern = TaskPattern::Blobs;

  void validate() const;
};

struct GeneratedTask {
  ScoreField unary;
  LabelMap truth;
  std::vector<bool> occluded;
};

/// Deterministic in `task.seed`.
GeneratedTask generate_task(const SyntheticTask& task);

struct TrainConfig {
  int steps = 200;
  double learning_rate = 30.0;
  double lambda = 10.0;
  Parameterization parameterization = Parameterization::General;
  Stencil stencil = Stencil::Four;
  SolverConfig solver{};
  bool learn_unary_bias = false;

  void validate() const;
};

struct HistoryEntry {
  int step;
  double loss;
  double accuracy;
};

struct TrainResult {
  Parameterization parameterization;
  /// General: P*L label-coupled A. Potts: P x P shared matrix.
  SparseSymd pairwise;
  /// Per-class bias added to every pixel's unary scores (zero unless learned).
  Eigen::VectorXd unary_bias;
  /// Entry s holds the loss and accuracy after s updates, s = 0..steps.
  std::vector<HistoryEntry> history;
  SegmentationMetrics final_metrics;
  /// Argmax of the raw unaries, no pairwise terms.
  SegmentationMetrics baseline_metrics;
  /// Number of step halvings forced by failed positive-definiteness probes.
  int step_shrinks = 0;
};

/// A solve failed to converge or broke down at `step`.
class SolverFailure : public Error {
 public:
  SolverFailure(int step, const std::string& why)
      : Error("solver failure at step " + std::to_string(step) + ": " + why), step_(step) {}
  int step() const noexcept { return step_; }

 private:
  int step_;
};

class NonFiniteLoss : public Error {
 public:
  explicit NonFiniteLoss(int step)
      : Error("non-finite loss at step " + std::to_string(step)), step_(step) {}
  int step() const noexcept { return step_; }

 private:
  int step_;
};

/// Gradient descent from zero pairwise terms. Each step runs inference, softmax
/// cross-entropy, the unary and pairwise backward passes, then updates the
/// off-diagonal pairwise values. If the updated system fails the CG
/// positive-definiteness probe the step is halved, up to five times.
TrainResult train(const GeneratedTask& task, const TrainConfig& cfg);
TrainResult train(const SyntheticTask& task, const TrainConfig& cfg);

}  // namespace qo
