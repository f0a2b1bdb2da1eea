#pragma once

// General quadratic-optimization (Gaussian CRF) layer.
//
//   E(x) = 1/2 x'(A + lambda I)x - B'x
//
// MAP inference solves (A + lambda I) x = B. Backward passes solve the same
// system for dL/dB and form dL/dA from dL/dB and x on A's sparsity pattern.

#include "qo/solvers.hpp"
#include "qo/sparse_sym.hpp"

#include <Eigen/Core>

namespace qo {

class GeneralQO {
 public:
  /// Throws InvalidArgument unless lambda > 0 and the pattern carries a full diagonal.
  /// Positive definiteness of A + lambda I is not checked here; see spd_probe().
  GeneralQO(SparseSymd pairwise, double lambda);

  const SparseSymd& pairwise() const noexcept { return pairwise_; }
  double lambda() const noexcept { return lambda_; }
  Eigen::Index dim() const noexcept { return pairwise_.dim(); }

  /// A + lambda I, built once and shared by forward and backward solves.
  const SparseSymd& system() const noexcept { return system_; }

  /// Runs the CG probe on A + lambda I.
  bool spd_probe() const { return qo::spd_probe(system_); }

 private:
  SparseSymd pairwise_;
  double lambda_;
  SparseSymd system_;
};

double energy(const GeneralQO& model, const Eigen::VectorXd& x, const Eigen::VectorXd& unary);

/// Solves (A + lambda I) x = B. Throws NotConverged if the solver stops early.
SolveResult<double> infer(const GeneralQO& model, const Eigen::VectorXd& unary,
                          const SolverConfig& cfg = {});

/// dL/dB from dL/dx: (A + lambda I) dL/dB = dL/dx.
SolveResult<double> grad_unary(const GeneralQO& model, const Eigen::VectorXd& dl_dx,
                               const SolverConfig& cfg = {});

/// dL/dA on the stored entries of `pattern`, treating A as a symmetric parameter:
/// an off-diagonal entry (i,j) gets -(g_i x_j + g_j x_i) and a diagonal entry
/// gets -g_i x_i, where g = dL/dB.
SparseSymd grad_pairwise(const Eigen::VectorXd& dl_db, const Eigen::VectorXd& x,
                         const SparseSymd& pattern);

}  // namespace qo
