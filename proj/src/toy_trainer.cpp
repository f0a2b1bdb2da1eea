#include "qo/toy_trainer.hpp"

#include "qo/general.hpp"
#include "qo/potts.hpp"
#include "qo/random_systems.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace qo {

std::string_view to_string(Parameterization p) noexcept {
  return p == Parameterization::General ? "general" : "potts";
}

TaskPattern task_pattern_from_string(std::string_view name) {
  if (name == "blobs") return TaskPattern::Blobs;
  if (name == "stripes") return TaskPattern::Stripes;
  throw InvalidArgument("unknown task pattern '" + std::string(name) + "' (expected blobs or stripes)");
}

void SyntheticTask::validate() const {
  if (!(unary_noise >= 0)) throw InvalidArgument("unary noise must be non-negative");
  if (!(occlusion_rate >= 0 && occlusion_rate < 1))
    throw InvalidArgument("occlusion rate must lie in [0, 1)");
}

void TrainConfig::validate() const {
  if (steps < 1) throw InvalidArgument("steps must be >= 1");
  if (!(learning_rate >= 0)) throw InvalidArgument("learning rate must be non-negative");
  if (!(lambda > 0)) throw InvalidArgument("lambda must be positive");
  solver.validate();
}

namespace {

std::vector<Eigen::Index> blob_labels(const GridGraph& g, Rng& rng) {
  const Eigen::Index sites = 2 * std::max<Eigen::Index>(g.labels(), 2);
  std::uniform_real_distribution<double> ur(0.0, static_cast<double>(g.height()));
  std::uniform_real_distribution<double> uc(0.0, static_cast<double>(g.width()));
  std::vector<std::pair<double, double>> centre(static_cast<std::size_t>(sites));
  for (auto& c : centre) c = {ur(rng), uc(rng)};
  std::vector<Eigen::Index> out(static_cast<std::size_t>(g.pixels()));
  for (Eigen::Index r = 0; r < g.height(); ++r) {
    for (Eigen::Index c = 0; c < g.width(); ++c) {
      Eigen::Index nearest = 0;
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index s = 0; s < sites; ++s) {
        const double dr = r + 0.5 - centre[s].first;
        const double dc = c + 0.5 - centre[s].second;
        if (dr * dr + dc * dc < best) {
          best = dr * dr + dc * dc;
          nearest = s;
        }
      }
      out[g.pixel(r, c)] = nearest % g.labels();
    }
  }
  return out;
}

std::vector<Eigen::Index> stripe_labels(const GridGraph& g, Rng& rng) {
  const int orientation = std::uniform_int_distribution<int>(0, 2)(rng);
  const Eigen::Index width = std::uniform_int_distribution<Eigen::Index>(2, 5)(rng);
  std::vector<Eigen::Index> out(static_cast<std::size_t>(g.pixels()));
  for (Eigen::Index r = 0; r < g.height(); ++r) {
    for (Eigen::Index c = 0; c < g.width(); ++c) {
      const Eigen::Index coord = orientation == 0 ? r : orientation == 1 ? c : r + c;
      out[g.pixel(r, c)] = (coord / width) % g.labels();
    }
  }
  return out;
}

// One differentiable forward/backward pass for either parameterization.
class Layer {
 public:
  Layer(const GeneratedTask& task, const TrainConfig& cfg)
      : task_(task), cfg_(cfg), graph_(task.unary.graph.with_stencil(cfg.stencil)) {
    const bool general = cfg.parameterization == Parameterization::General;
    pattern_ = build_pattern(graph_, general);
  }

  const SparseSymd& pattern() const { return pattern_; }

  struct Forward {
    Eigen::VectorXd x;
    LossResult xent;
  };

  bool admissible(const SparseSymd& pairwise) const {
    if (cfg_.parameterization == Parameterization::General)
      return GeneralQO(pairwise, cfg_.lambda).spd_probe();
    return PottsSystem(pairwise, cfg_.lambda, graph_.labels()).spd_probe();
  }

  Forward forward(const SparseSymd& pairwise, const Eigen::VectorXd& bias) const {
    const Eigen::VectorXd unary = biased_unary(bias);
    Eigen::VectorXd x;
    if (cfg_.parameterization == Parameterization::General) {
      x = infer(GeneralQO(pairwise, cfg_.lambda), unary, cfg_.solver).x;
    } else {
      const PottsSystem sys(pairwise, cfg_.lambda, graph_.labels());
      x = flatten_per_class(potts_infer(sys, ScoreField(graph_, unary).per_class(), cfg_.solver).per_class);
    }
    auto xent = softmax_xent(ScoreField(graph_, x), task_.truth);
    return {std::move(x), std::move(xent)};
  }

  /// Gradients w.r.t. pairwise values (storage order) and the per-class bias.
  std::pair<Eigen::VectorXd, Eigen::VectorXd> backward(const SparseSymd& pairwise,
                                                       const Forward& fwd) const {
    Eigen::VectorXd dl_db;
    SparseSymd g;
    if (cfg_.parameterization == Parameterization::General) {
      const GeneralQO model(pairwise, cfg_.lambda);
      dl_db = grad_unary(model, fwd.xent.grad.values, cfg_.solver).x;
      g = grad_pairwise(dl_db, fwd.x, pattern_);
    } else {
      const PottsSystem sys(pairwise, cfg_.lambda, graph_.labels());
      const Eigen::MatrixXd d = potts_grad_unary(sys, fwd.xent.grad.per_class(), cfg_.solver).per_class;
      g = potts_grad_pairwise(d, ScoreField(graph_, fwd.x).per_class(), pattern_);
      dl_db = flatten_per_class(d);
    }
    Eigen::VectorXd values = g.value_vector();
    for (auto k : pattern_.diagonal_positions()) values[k] = 0.0;
    const Eigen::VectorXd bias = ScoreField(graph_, dl_db).per_class().colwise().sum().transpose();
    return {std::move(values), bias};
  }

 private:
  Eigen::VectorXd biased_unary(const Eigen::VectorXd& bias) const {
    Eigen::VectorXd u = task_.unary.values;
    const Eigen::Index L = graph_.labels();
    for (Eigen::Index p = 0; p < graph_.pixels(); ++p) u.segment(p * L, L) += bias;
    return u;
  }

  const GeneratedTask& task_;
  const TrainConfig& cfg_;
  GridGraph graph_;
  SparseSymd pattern_;
};

}  // namespace

GeneratedTask generate_task(const SyntheticTask& task) {
  task.validate();
  const GridGraph& g = task.graph;
  Rng rng(task.seed);
  auto labels = task.pattern == TaskPattern::Blobs ? blob_labels(g, rng) : stripe_labels(g, rng);

  Eigen::VectorXd scores = Eigen::VectorXd::Zero(g.dim());
  for (Eigen::Index p = 0; p < g.pixels(); ++p) scores[g.index(p, labels[p])] = task.margin;
  if (task.unary_noise > 0) scores += task.unary_noise * random_normal(g.dim(), rng);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(g.pixels()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_occluded =
      static_cast<std::size_t>(std::llround(task.occlusion_rate * static_cast<double>(g.pixels())));
  std::vector<bool> occluded(static_cast<std::size_t>(g.pixels()), false);
  for (std::size_t i = 0; i < n_occluded; ++i) {
    occluded[order[i]] = true;
    scores.segment(order[i] * g.labels(), g.labels()).setZero();
  }
  return {ScoreField(g, std::move(scores)), LabelMap(g, std::move(labels)), std::move(occluded)};
}

TrainResult train(const GeneratedTask& task, const TrainConfig& cfg) {
  cfg.validate();
  const Layer layer(task, cfg);
  const Eigen::Index L = task.unary.graph.labels();

  TrainResult result;
  result.parameterization = cfg.parameterization;
  result.pairwise = layer.pattern().zeros_like();
  result.unary_bias = Eigen::VectorXd::Zero(L);
  result.baseline_metrics = evaluate(task.unary, task.truth);

  for (int step = 0;; ++step) {
    auto guarded = [step](auto&& fn) {
      try {
        return fn();
      } catch (const NotConverged& e) {
        throw SolverFailure(step, e.what());
      } catch (const BreakdownDetected& e) {
        throw SolverFailure(step, e.what());
      }
    };
    const auto fwd = guarded([&] { return layer.forward(result.pairwise, result.unary_bias); });
    if (!std::isfinite(fwd.xent.loss)) throw NonFiniteLoss(step);
    const auto current = evaluate(ScoreField(task.unary.graph, fwd.x), task.truth);
    result.history.push_back({step, fwd.xent.loss, current.pixel_accuracy});
    result.final_metrics = current;
    if (step == cfg.steps) break;

    auto [grad_values, grad_bias] = guarded([&] { return layer.backward(result.pairwise, fwd); });
    if (!cfg.learn_unary_bias) grad_bias.setZero();

    double rate = cfg.learning_rate;
    for (int attempt = 0;; ++attempt) {
      const SparseSymd proposal =
          result.pairwise.with_values((result.pairwise.value_vector() - rate * grad_values).eval());
      if (layer.admissible(proposal)) {
        result.pairwise = proposal;
        result.unary_bias -= rate * grad_bias;
        break;
      }
      if (attempt == 5)
        throw SolverFailure(step, "updated pairwise terms fail the positive-definiteness probe");
      rate *= 0.5;
      ++result.step_shrinks;
    }
  }
  return result;
}

TrainResult train(const SyntheticTask& task, const TrainConfig& cfg) {
  return train(generate_task(task), cfg);
}

}  // namespace qo
