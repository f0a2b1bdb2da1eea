#pragma once

// Finite-difference verification of the analytic backward passes through
// softmax cross-entropy composed with inference, on randomized small models.

#include "qo/grid_graph.hpp"
#include "qo/loss.hpp"
#include "qo/random_systems.hpp"
#include "qo/solvers.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace qo {

struct GradCheckOptions {
  int models = 50;
  std::uint64_t seed = 0;
  double step = 1e-5;
  double rel_tol = 1e-5;
  double abs_floor = 1e-8;
  Eigen::Index max_pixels = 16;
  Eigen::Index max_labels = 3;
};

/// Worst mismatch seen for one parameter group.
struct GradCheckGroup {
  std::string name;
  long checked = 0;
  long failures = 0;
  /// max |a - f| / max(|a|, |f|, abs_floor / rel_tol)
  double worst_relative = 0;
  double worst_absolute = 0;

  void add(double analytic, double numeric, const GradCheckOptions& opt);
};

struct GradCheckReport {
  std::vector<GradCheckGroup> groups;
  bool passed() const;
};

/// (f(h) - f(-h)) / 2h, where f takes the perturbation offset.
template <typename F>
double central_difference(F&& f, double h) {
  return (f(h) - f(-h)) / (2 * h);
}

/// Random grids with P <= max_pixels, L <= max_labels and stencils cycling 4/8/12.
/// Every model is checked under both parameterizations. Groups: general/unary,
/// general/pairwise, potts/unary, potts/pairwise.
GradCheckReport run_gradcheck(const GradCheckOptions& opt);

}  // namespace qo
