#pragma once

// Potts-type weight sharing: the pairwise term between pixels p and q is a single
// value S(p,q) when their labels differ and zero otherwise. The P*L system then
// reduces to one solve with lambda I + (L-1) S for the class sum followed by L
// independent solves with lambda I - S, one per class.
//
// Both reduced matrices are positive definite iff every eigenvalue of S lies in
// (-lambda / (L-1), lambda). A violation surfaces as BreakdownDetected from CG.

#include "qo/general.hpp"
#include "qo/solvers.hpp"
#include "qo/sparse_sym.hpp"

#include <Eigen/Core>

#include <vector>

namespace qo {

class PottsSystem {
 public:
  /// `shared` is P x P, symmetric, with a zero diagonal.
  PottsSystem(SparseSymd shared, double lambda, Eigen::Index labels);

  const SparseSymd& shared() const noexcept { return shared_; }
  double lambda() const noexcept { return lambda_; }
  Eigen::Index labels() const noexcept { return labels_; }
  Eigen::Index pixels() const noexcept { return shared_.dim(); }

  /// lambda I + (L-1) S
  const SparseSymd& sum_system() const noexcept { return sum_system_; }
  /// lambda I - S
  const SparseSymd& class_system() const noexcept { return class_system_; }

  bool spd_probe() const { return qo::spd_probe(sum_system_) && qo::spd_probe(class_system_); }

 private:
  SparseSymd shared_;
  double lambda_;
  Eigen::Index labels_;
  SparseSymd sum_system_;
  SparseSymd class_system_;
};

/// Per-class results (P x L, column k is class k) plus one report per solver
/// invocation: index 0 is the class-sum stage, index 1 + k is class k.
struct PottsSolveResult {
  Eigen::MatrixXd per_class;
  std::vector<SolveReport> stage_reports;
};

/// Two-stage inference. `unary` is P x L. Throws NotConverged naming the stage.
PottsSolveResult potts_infer(const PottsSystem& sys, const Eigen::MatrixXd& unary,
                             const SolverConfig& cfg = {});

/// Two-stage unary backward pass; same structure as potts_infer.
PottsSolveResult potts_grad_unary(const PottsSystem& sys, const Eigen::MatrixXd& dl_dx,
                                  const SolverConfig& cfg = {});

/// dL/dS on the stored entries of `pattern` with S tied symmetric:
///   g(p,q) = -sum_k ( dL/db_k[p] X_{-k}[q] + dL/db_k[q] X_{-k}[p] ),  X_{-k} = sum_{i != k} x_i.
/// Diagonal entries are zero since S has no diagonal parameters.
SparseSymd potts_grad_pairwise(const Eigen::MatrixXd& dl_db, const Eigen::MatrixXd& x,
                               const SparseSymd& pattern);

/// Full P*L pairwise matrix equivalent to `shared` (pixel-major indexing):
/// entry ((p,k),(q,k')) = S(p,q) for k != k', zero otherwise. The pattern is
/// the label-coupled one, so the diagonal is present.
SparseSymd expand_potts(const SparseSymd& shared, Eigen::Index labels);

/// GeneralQO equivalent of a Potts system.
GeneralQO to_general(const PottsSystem& sys);

}  // namespace qo
