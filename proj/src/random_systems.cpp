#include "qo/random_systems.hpp"

namespace qo {

SparseSymd random_symmetric_values(const SparseSymd& pattern, double lo, double hi, Rng& rng,
                                   double diagonal) {
  std::uniform_real_distribution<double> dist(lo, hi);
  const auto offs = pattern.row_offsets();
  const auto cols = pattern.col_indices();
  const auto mirror = pattern.transpose_positions();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(pattern.nnz());
  for (Eigen::Index i = 0; i < pattern.dim(); ++i) {
    for (auto k = offs[i]; k < offs[i + 1]; ++k) {
      if (cols[k] == i) {
        v[k] = diagonal;
      } else if (cols[k] > i) {
        v[k] = dist(rng);
        v[mirror[k]] = v[k];
      }
    }
  }
  return pattern.with_values(v);
}

PottsSystem random_potts_system(const GridGraph& graph, double lambda, double lo, double hi, Rng& rng) {
  return {random_symmetric_values(build_pattern(graph, false), lo, hi, rng), lambda, graph.labels()};
}

Eigen::VectorXd random_normal(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = dist(rng);
  return v;
}

}  // namespace qo
