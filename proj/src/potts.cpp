#include "qo/potts.hpp"

#include "qo/errors.hpp"

#include <algorithm>
#include <future>
#include <string>
#include <thread>

namespace qo {

namespace {

SparseSymd combine_with_identity(const SparseSymd& shared, double scale, double lambda) {
  SparseSymd out = shared.with_values((scale * shared.value_vector()).eval());
  out.shift_diagonal(lambda);
  return out;
}

// Solves class_system * col_k = rhs.col(k) for every k; columns are independent.
void solve_classes(const SparseSymd& system, const Eigen::MatrixXd& rhs, const SolverConfig& cfg,
                   Eigen::MatrixXd& out, std::vector<SolveReport>& reports) {
  const Eigen::Index L = rhs.cols();
  const Eigen::Index workers =
      std::clamp<Eigen::Index>(std::thread::hardware_concurrency(), 1, L);
  auto run = [&](Eigen::Index first) {
    for (Eigen::Index k = first; k < L; k += workers) {
      const Eigen::VectorXd b = rhs.col(k);
      auto res = solve_or_throw(system, b, cfg, "class " + std::to_string(k));
      out.col(k) = res.x;
      reports[1 + k] = std::move(res.report);
    }
  };
  if (workers == 1) {
    run(0);
    return;
  }
  std::vector<std::future<void>> jobs;
  for (Eigen::Index w = 0; w < workers; ++w) jobs.push_back(std::async(std::launch::async, run, w));
  for (auto& j : jobs) j.get();
}

PottsSolveResult two_stage(const PottsSystem& sys, const Eigen::MatrixXd& rhs,
                           const SolverConfig& cfg) {
  if (rhs.rows() != sys.pixels()) throw DimensionMismatch("per-class rows", sys.pixels(), rhs.rows());
  if (rhs.cols() != sys.labels()) throw DimensionMismatch("per-class columns", sys.labels(), rhs.cols());
  PottsSolveResult out;
  out.stage_reports.resize(static_cast<std::size_t>(sys.labels() + 1));
  out.per_class.resize(sys.pixels(), sys.labels());

  const Eigen::VectorXd total_rhs = rhs.rowwise().sum();
  auto total = solve_or_throw(sys.sum_system(), total_rhs, cfg, "class sum");
  out.stage_reports[0] = std::move(total.report);

  const Eigen::VectorXd coupling = sys.shared().matrix() * total.x;
  const Eigen::MatrixXd class_rhs = rhs.colwise() - coupling;
  solve_classes(sys.class_system(), class_rhs, cfg, out.per_class, out.stage_reports);
  return out;
}

}  // namespace

PottsSystem::PottsSystem(SparseSymd shared, double lambda, Eigen::Index labels)
    : shared_(std::move(shared)), lambda_(lambda), labels_(labels) {
  if (!(lambda_ > 0)) throw InvalidArgument("lambda must be positive");
  if (labels_ < 1) throw InvalidArgument("label count must be >= 1");
  for (auto k : shared_.diagonal_positions())
    if (k >= 0 && shared_.values()[k] != 0.0)
      throw InvalidArgument("Potts shared pairwise matrix must have a zero diagonal");
  sum_system_ = combine_with_identity(shared_, static_cast<double>(labels_ - 1), lambda_);
  class_system_ = combine_with_identity(shared_, -1.0, lambda_);
  if (!sum_system_.has_full_diagonal())
    throw InvalidArgument("Potts shared pattern must carry a full (zero) diagonal");
}

PottsSolveResult potts_infer(const PottsSystem& sys, const Eigen::MatrixXd& unary,
                             const SolverConfig& cfg) {
  return two_stage(sys, unary, cfg);
}

PottsSolveResult potts_grad_unary(const PottsSystem& sys, const Eigen::MatrixXd& dl_dx,
                                  const SolverConfig& cfg) {
  // The block system is symmetric, so the backward solve has the forward structure.
  return two_stage(sys, dl_dx, cfg);
}

SparseSymd potts_grad_pairwise(const Eigen::MatrixXd& dl_db, const Eigen::MatrixXd& x,
                               const SparseSymd& pattern) {
  if (dl_db.rows() != pattern.dim()) throw DimensionMismatch("dL/db rows", pattern.dim(), dl_db.rows());
  if (x.rows() != pattern.dim()) throw DimensionMismatch("x rows", pattern.dim(), x.rows());
  if (x.cols() != dl_db.cols()) throw DimensionMismatch("label count", dl_db.cols(), x.cols());
  // sum_k g_k[p] (X[q] - x_k[q]) = G[p] X[q] - (g . x)[p,q], with G, X the class sums.
  const Eigen::VectorXd g_sum = dl_db.rowwise().sum();
  const Eigen::VectorXd x_sum = x.rowwise().sum();
  const auto offs = pattern.row_offsets();
  const auto cols = pattern.col_indices();
  Eigen::VectorXd out(pattern.nnz());
  for (Eigen::Index p = 0; p < pattern.dim(); ++p) {
    for (auto k = offs[p]; k < offs[p + 1]; ++k) {
      const Eigen::Index q = cols[k];
      if (q == p) {
        out[k] = 0.0;
        continue;
      }
      const double same_label = dl_db.row(p).dot(x.row(q)) + dl_db.row(q).dot(x.row(p));
      out[k] = -(g_sum[p] * x_sum[q] + g_sum[q] * x_sum[p] - same_label);
    }
  }
  return pattern.with_values(out);
}

SparseSymd expand_potts(const SparseSymd& shared, Eigen::Index labels) {
  const Eigen::Index L = labels;
  const auto offs = shared.row_offsets();
  const auto cols = shared.col_indices();
  const auto vals = shared.values();
  std::vector<SparseSymd::Triplet> trips;
  trips.reserve(static_cast<std::size_t>(shared.dim() * L + shared.nnz() * L * L));
  for (Eigen::Index p = 0; p < shared.dim(); ++p) {
    for (Eigen::Index l = 0; l < L; ++l) trips.emplace_back(p * L + l, p * L + l, 0.0);
    for (auto k = offs[p]; k < offs[p + 1]; ++k) {
      const Eigen::Index q = cols[k];
      if (q == p) continue;
      for (Eigen::Index a = 0; a < L; ++a)
        for (Eigen::Index b = 0; b < L; ++b)
          trips.emplace_back(p * L + a, q * L + b, a == b ? 0.0 : vals[k]);
    }
  }
  return SparseSymd::from_triplets(shared.dim() * L, trips);
}

GeneralQO to_general(const PottsSystem& sys) {
  return {expand_potts(sys.shared(), sys.labels()), sys.lambda()};
}

}  // namespace qo
