#pragma once

// Seeded generators for synthetic systems used by the benchmarks, the CLI and tests.

#include "qo/grid_graph.hpp"
#include "qo/potts.hpp"
#include "qo/sparse_sym.hpp"

#include <Eigen/Core>

#include <random>

namespace qo {

using Rng = std::mt19937_64;

/// Same pattern as `pattern`, each symmetric off-diagonal pair drawn uniformly from
/// [lo, hi] (visited in row-major upper-triangle order). Diagonal entries get
/// `diagonal`.
SparseSymd random_symmetric_values(const SparseSymd& pattern, double lo, double hi, Rng& rng,
                                   double diagonal = 0.0);

/// Potts system on a grid: shared P x P matrix with uniform edge weights in [lo, hi].
PottsSystem random_potts_system(const GridGraph& graph, double lambda, double lo, double hi, Rng& rng);

/// Vector of independent standard normal draws.
Eigen::VectorXd random_normal(Eigen::Index n, Rng& rng);

}  // namespace qo
