#include "qo/general.hpp"

#include "qo/errors.hpp"

namespace qo {

GeneralQO::GeneralQO(SparseSymd pairwise, double lambda)
    : pairwise_(std::move(pairwise)), lambda_(lambda) {
  if (!(lambda_ > 0)) throw InvalidArgument("lambda must be positive");
  if (!pairwise_.has_full_diagonal())
    throw InvalidArgument("pairwise pattern must carry a full diagonal");
  system_ = add_scaled_identity(pairwise_, lambda_);
}

double energy(const GeneralQO& model, const Eigen::VectorXd& x, const Eigen::VectorXd& unary) {
  if (x.size() != model.dim()) throw DimensionMismatch("energy hypothesis", model.dim(), x.size());
  if (unary.size() != model.dim())
    throw DimensionMismatch("energy unary", model.dim(), unary.size());
  return 0.5 * x.dot(model.system().matrix() * x) - unary.dot(x);
}

SolveResult<double> infer(const GeneralQO& model, const Eigen::VectorXd& unary,
                          const SolverConfig& cfg) {
  if (unary.size() != model.dim()) throw DimensionMismatch("unary", model.dim(), unary.size());
  return solve_or_throw(model.system(), unary, cfg, "inference");
}

SolveResult<double> grad_unary(const GeneralQO& model, const Eigen::VectorXd& dl_dx,
                               const SolverConfig& cfg) {
  if (dl_dx.size() != model.dim()) throw DimensionMismatch("dL/dx", model.dim(), dl_dx.size());
  return solve_or_throw(model.system(), dl_dx, cfg, "unary gradient");
}

SparseSymd grad_pairwise(const Eigen::VectorXd& dl_db, const Eigen::VectorXd& x,
                         const SparseSymd& pattern) {
  if (dl_db.size() != pattern.dim()) throw DimensionMismatch("dL/dB", pattern.dim(), dl_db.size());
  if (x.size() != pattern.dim()) throw DimensionMismatch("x", pattern.dim(), x.size());
  const auto offs = pattern.row_offsets();
  const auto cols = pattern.col_indices();
  Eigen::VectorXd g(pattern.nnz());
  for (Eigen::Index i = 0; i < pattern.dim(); ++i) {
    for (auto k = offs[i]; k < offs[i + 1]; ++k) {
      const Eigen::Index j = cols[k];
      g[k] = i == j ? -dl_db[i] * x[i] : -(dl_db[i] * x[j] + dl_db[j] * x[i]);
    }
  }
  return pattern.with_values(g);
}

}  // namespace qo
