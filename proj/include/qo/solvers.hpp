#pragma once

// Unpreconditioned iterative solvers for M x = b on SparseSym matrices.
//
// Every solver records one Euclidean residual norm ||b - M x|| per iteration in a
// SolveReport. Conjugate gradient and GMRES track their residual through the
// recurrence and replace the last entry with the true residual once the
// recurrence claims convergence, so `converged` always reflects the true residual.
//
// Gauss-Seidel and sequential mean-field sweeps are inherently sequential in
// ascending index order. Everything else is a pure function of its arguments.

#include "qo/errors.hpp"
#include "qo/sparse_sym.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qo {

enum class SolverMethod { Jacobi, GaussSeidel, ConjugateGradient, GMRES };

inline constexpr SolverMethod kAllSolverMethods[] = {
    SolverMethod::Jacobi, SolverMethod::GaussSeidel, SolverMethod::ConjugateGradient,
    SolverMethod::GMRES};

inline std::string_view to_string(SolverMethod m) noexcept {
  switch (m) {
    case SolverMethod::Jacobi: return "jacobi";
    case SolverMethod::GaussSeidel: return "gauss-seidel";
    case SolverMethod::ConjugateGradient: return "cg";
    case SolverMethod::GMRES: return "gmres";
  }
  return "unknown";
}

inline SolverMethod solver_method_from_string(std::string_view name) {
  for (auto m : kAllSolverMethods)
    if (to_string(m) == name) return m;
  throw InvalidArgument("unknown solver '" + std::string(name) +
                        "' (expected jacobi, gauss-seidel, cg or gmres)");
}

enum class ResidualMode { Absolute, Relative };

struct SolverConfig {
  SolverMethod method = SolverMethod::ConjugateGradient;
  /// Bound on ||b - M x||; scaled by ||b|| in relative mode.
  double tolerance = 1e-6;
  /// Zero selects 10 * dim.
  Eigen::Index max_iterations = 0;
  int gmres_restart = 30;
  ResidualMode residual_mode = ResidualMode::Absolute;

  void validate() const {
    if (!(tolerance > 0)) throw InvalidArgument("solver tolerance must be positive");
    if (max_iterations < 0) throw InvalidArgument("max_iterations must be >= 1 (or 0 for default)");
    if (gmres_restart < 1) throw InvalidArgument("gmres_restart must be >= 1");
  }

  Eigen::Index iteration_cap(Eigen::Index dim) const {
    return max_iterations > 0 ? max_iterations : std::max<Eigen::Index>(1, 10 * dim);
  }
};

struct SolveReport {
  SolverMethod method = SolverMethod::ConjugateGradient;
  int iterations = 0;
  double initial_residual = 0;
  /// One entry per iteration.
  std::vector<double> residuals;
  bool converged = false;
  /// Absolute residual bound actually applied.
  double tolerance = 0;

  double final_residual() const { return residuals.empty() ? initial_residual : residuals.back(); }
};

/// Raised by the model layers when a solve stops at its iteration cap.
class NotConverged : public Error {
 public:
  NotConverged(SolveReport report, std::string stage)
      : Error(message(report, stage)), report_(std::move(report)), stage_(std::move(stage)) {}

  const SolveReport& report() const noexcept { return report_; }
  const std::string& stage() const noexcept { return stage_; }

 private:
  static std::string message(const SolveReport& r, const std::string& stage) {
    return std::string(to_string(r.method)) + " did not converge" +
           (stage.empty() ? "" : " in stage '" + stage + "'") + " after " +
           std::to_string(r.iterations) + " iterations (residual " +
           std::to_string(r.final_residual()) + " > " + std::to_string(r.tolerance) + ")";
  }

  SolveReport report_;
  std::string stage_;
};

template <typename Scalar>
struct SolveResult {
  Vector<Scalar> x;
  SolveReport report;
};

namespace detail {

template <typename Scalar>
Scalar checked_diagonal(const SparseSym<Scalar>& m, Eigen::Index i) {
  const auto k = m.diagonal_positions()[i];
  const Scalar d = k < 0 ? Scalar(0) : m.values()[k];
  if (d == Scalar(0)) throw ZeroDiagonal(i);
  return d;
}

template <typename Scalar>
void require_nonzero_diagonal(const SparseSym<Scalar>& m) {
  for (Eigen::Index i = 0; i < m.dim(); ++i) checked_diagonal(m, i);
}

/// sum_{j != i} a_ij x_j in storage order.
template <typename Scalar>
Scalar off_diagonal_dot(const SparseSym<Scalar>& m, Eigen::Index i, const Vector<Scalar>& x) {
  const auto offs = m.row_offsets();
  const auto cols = m.col_indices();
  const auto vals = m.values();
  Scalar s(0);
  for (auto k = offs[i]; k < offs[i + 1]; ++k)
    if (cols[k] != i) s += vals[k] * x[cols[k]];
  return s;
}

template <typename Scalar>
void check_dims(const SparseSym<Scalar>& m, const Vector<Scalar>& b, const Vector<Scalar>& x) {
  if (b.size() != m.dim()) throw DimensionMismatch("right-hand side", m.dim(), b.size());
  if (x.size() != m.dim()) throw DimensionMismatch("iterate", m.dim(), x.size());
}

}  // namespace detail

/// One Jacobi sweep: every component is computed from x_k only.
template <typename Scalar>
Vector<Scalar> jacobi_step(const SparseSym<Scalar>& m, const Vector<Scalar>& b,
                           const Vector<Scalar>& xk) {
  detail::check_dims(m, b, xk);
  Vector<Scalar> next(m.dim());
  for (Eigen::Index i = 0; i < m.dim(); ++i) {
    const Scalar d = detail::checked_diagonal(m, i);
    next[i] = (b[i] - detail::off_diagonal_dot(m, i, xk)) / d;
  }
  return next;
}

/// One Gauss-Seidel sweep in ascending index order, each update using the most
/// recent values of earlier components. Sequential.
template <typename Scalar>
Vector<Scalar> gauss_seidel_step(const SparseSym<Scalar>& m, const Vector<Scalar>& b,
                                 const Vector<Scalar>& xk) {
  detail::check_dims(m, b, xk);
  Vector<Scalar> x = xk;
  for (Eigen::Index i = 0; i < m.dim(); ++i) {
    const Scalar d = detail::checked_diagonal(m, i);
    x[i] = (b[i] - detail::off_diagonal_dot(m, i, x)) / d;
  }
  return x;
}

enum class UpdateOrder { Parallel, Sequential };

/// Mean-field update for a Gaussian in canonical form (precision matrix Theta,
/// linear term theta): mu_i <- -(theta_i + sum_{j != i} Theta_ij mu_j) / Theta_ii.
template <typename Scalar>
Vector<Scalar> meanfield_update(const SparseSym<Scalar>& precision, const Vector<Scalar>& theta,
                                const Vector<Scalar>& mu, UpdateOrder order) {
  detail::check_dims(precision, theta, mu);
  Vector<Scalar> next = mu;
  const Vector<Scalar>& source = order == UpdateOrder::Parallel ? mu : next;
  for (Eigen::Index i = 0; i < precision.dim(); ++i) {
    const Scalar d = detail::checked_diagonal(precision, i);
    const Scalar field = detail::off_diagonal_dot(precision, i, source);
    next[i] = -(theta[i] + field) / d;
  }
  return next;
}

namespace detail {

template <typename Scalar>
class Tracker {
 public:
  Tracker(SolveReport& report, const Vector<Scalar>& x0, double r0)
      : report_(report), best_x_(x0), best_(r0) {}

  /// Records a residual; returns false when the iteration went non-finite.
  bool record(const Vector<Scalar>& x, double res) {
    report_.residuals.push_back(res);
    report_.iterations = static_cast<int>(report_.residuals.size());
    if (!std::isfinite(res)) return false;
    if (res < best_) {
      best_ = res;
      best_x_ = x;
    }
    return true;
  }

  /// Records a residual estimate that does not correspond to a materialized iterate.
  bool record_estimate(double res) {
    report_.residuals.push_back(res);
    report_.iterations = static_cast<int>(report_.residuals.size());
    return std::isfinite(res);
  }

  void replace_last(const Vector<Scalar>& x, double res) {
    report_.residuals.back() = res;
    if (res < best_) {
      best_ = res;
      best_x_ = x;
    }
  }

  Vector<Scalar> finish(Vector<Scalar> x) {
    report_.converged = report_.final_residual() <= report_.tolerance;
    return report_.converged ? std::move(x) : std::move(best_x_);
  }

 private:
  SolveReport& report_;
  Vector<Scalar> best_x_;
  double best_;
};

template <typename Scalar>
double residual_norm(const SparseSym<Scalar>& m, const Vector<Scalar>& b, const Vector<Scalar>& x) {
  return static_cast<double>((b - m.matrix() * x).norm());
}

template <typename Scalar, typename Step>
Vector<Scalar> stationary(const SparseSym<Scalar>& m, const Vector<Scalar>& b, Vector<Scalar> x,
                          Eigen::Index cap, SolveReport& report, Step step) {
  require_nonzero_diagonal(m);
  Tracker<Scalar> track(report, x, report.initial_residual);
  for (Eigen::Index it = 0; it < cap && report.final_residual() > report.tolerance; ++it) {
    x = step(m, b, x);
    if (!track.record(x, residual_norm(m, b, x))) break;
  }
  return track.finish(std::move(x));
}

template <typename Scalar>
Vector<Scalar> conjugate_gradient(const SparseSym<Scalar>& m, const Vector<Scalar>& b,
                                  Vector<Scalar> x, Eigen::Index cap, SolveReport& report) {
  const auto& a = m.matrix();
  Tracker<Scalar> track(report, x, report.initial_residual);
  Vector<Scalar> r = b - a * x;
  Scalar rr = r.squaredNorm();
  Vector<Scalar> p = r;
  Vector<Scalar> ap(m.dim());
  for (Eigen::Index it = 0; it < cap && report.final_residual() > report.tolerance; ++it) {
    ap.noalias() = a * p;
    const Scalar curvature = p.dot(ap);
    if (!(curvature > Scalar(0)))
      throw BreakdownDetected(static_cast<int>(it + 1), static_cast<double>(curvature));
    const Scalar alpha = rr / curvature;
    x.noalias() += alpha * p;
    r.noalias() -= alpha * ap;
    Scalar rr_next = r.squaredNorm();
    if (!track.record(x, std::sqrt(static_cast<double>(rr_next)))) break;
    if (report.final_residual() <= report.tolerance) {
      // Confirm against the true residual; on drift, restart from it.
      r = b - a * x;
      rr_next = r.squaredNorm();
      track.replace_last(x, std::sqrt(static_cast<double>(rr_next)));
      if (report.final_residual() <= report.tolerance) break;
      p = r;
      rr = rr_next;
      continue;
    }
    p = r + (rr_next / rr) * p;
    rr = rr_next;
  }
  return track.finish(std::move(x));
}

/// Restarted GMRES(m) with modified Gram-Schmidt and Givens rotations. One
/// Arnoldi step counts as one iteration.
template <typename Scalar>
Vector<Scalar> gmres(const SparseSym<Scalar>& m, const Vector<Scalar>& b, Vector<Scalar> x,
                     Eigen::Index cap, int restart, SolveReport& report) {
  using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const auto& a = m.matrix();
  const Eigen::Index n = m.dim();
  const Eigen::Index krylov = std::min<Eigen::Index>(restart, n);
  Tracker<Scalar> track(report, x, report.initial_residual);

  Vector<Scalar> r = b - a * x;
  Scalar beta = r.norm();
  Dense basis(n, krylov + 1);
  Dense hess(krylov + 1, krylov);
  Vector<Scalar> cs(krylov), sn(krylov), g(krylov + 1);
  Vector<Scalar> w(n);

  while (report.iterations < cap && report.final_residual() > report.tolerance) {
    hess.setZero();
    g.setZero();
    g[0] = beta;
    basis.col(0) = r / beta;
    Eigen::Index k = 0;
    bool finite = true;
    while (k < krylov && report.iterations < cap) {
      w.noalias() = a * basis.col(k);
      for (Eigen::Index i = 0; i <= k; ++i) {
        hess(i, k) = w.dot(basis.col(i));
        w.noalias() -= hess(i, k) * basis.col(i);
      }
      const Scalar h_next = w.norm();
      hess(k + 1, k) = h_next;
      for (Eigen::Index i = 0; i < k; ++i) {
        const Scalar t = cs[i] * hess(i, k) + sn[i] * hess(i + 1, k);
        hess(i + 1, k) = -sn[i] * hess(i, k) + cs[i] * hess(i + 1, k);
        hess(i, k) = t;
      }
      const Scalar denom = std::hypot(hess(k, k), hess(k + 1, k));
      cs[k] = hess(k, k) / denom;
      sn[k] = hess(k + 1, k) / denom;
      hess(k, k) = denom;
      hess(k + 1, k) = Scalar(0);
      g[k + 1] = -sn[k] * g[k];
      g[k] = cs[k] * g[k];
      ++k;
      finite = track.record_estimate(std::abs(static_cast<double>(g[k])));
      if (!finite || report.final_residual() <= report.tolerance) break;
      if (h_next <= std::numeric_limits<Scalar>::epsilon() * beta) break;  // lucky breakdown
      basis.col(k) = w / h_next;
    }
    if (!finite) break;
    const Vector<Scalar> y =
        hess.topLeftCorner(k, k).template triangularView<Eigen::Upper>().solve(g.head(k));
    x.noalias() += basis.leftCols(k) * y;
    r = b - a * x;
    beta = r.norm();
    track.replace_last(x, static_cast<double>(beta));
  }
  return track.finish(std::move(x));
}

}  // namespace detail

/// Solves M x = b from x0. A solve that hits its iteration cap returns the best
/// iterate found with `report.converged == false`; it does not throw.
/// Throws ZeroDiagonal (Jacobi, Gauss-Seidel) and BreakdownDetected (CG).
template <typename Scalar>
SolveResult<Scalar> solve(const SparseSym<Scalar>& m, const Vector<Scalar>& b,
                          const Vector<Scalar>& x0, const SolverConfig& cfg) {
  cfg.validate();
  detail::check_dims(m, b, x0);
  SolveReport report;
  report.method = cfg.method;
  report.tolerance = cfg.residual_mode == ResidualMode::Relative
                         ? cfg.tolerance * static_cast<double>(b.norm())
                         : cfg.tolerance;
  if (report.tolerance == 0) report.tolerance = cfg.tolerance;
  report.initial_residual = detail::residual_norm(m, b, x0);
  const Eigen::Index cap = cfg.iteration_cap(m.dim());

  Vector<Scalar> x;
  switch (cfg.method) {
    case SolverMethod::Jacobi:
      x = detail::stationary(m, b, x0, cap, report,
                             [](const auto& mm, const auto& bb, const auto& xx) {
                               return jacobi_step(mm, bb, xx);
                             });
      break;
    case SolverMethod::GaussSeidel:
      x = detail::stationary(m, b, x0, cap, report,
                             [](const auto& mm, const auto& bb, const auto& xx) {
                               return gauss_seidel_step(mm, bb, xx);
                             });
      break;
    case SolverMethod::ConjugateGradient:
      x = detail::conjugate_gradient(m, b, x0, cap, report);
      break;
    case SolverMethod::GMRES:
      x = detail::gmres(m, b, x0, cap, cfg.gmres_restart, report);
      break;
  }
  report.converged = report.final_residual() <= report.tolerance;
  return {std::move(x), std::move(report)};
}

template <typename Scalar>
SolveResult<Scalar> solve(const SparseSym<Scalar>& m, const Vector<Scalar>& b,
                          const SolverConfig& cfg) {
  return solve(m, b, Vector<Scalar>::Zero(m.dim()).eval(), cfg);
}

/// Solve that throws NotConverged (tagged with `stage`) instead of returning.
template <typename Scalar>
SolveResult<Scalar> solve_or_throw(const SparseSym<Scalar>& m, const Vector<Scalar>& b,
                                   const SolverConfig& cfg, const std::string& stage = {}) {
  auto result = solve(m, b, cfg);
  if (!result.report.converged) throw NotConverged(std::move(result.report), stage);
  return result;
}

/// Positive-definiteness probe: CG on a fixed pseudo-random right-hand side.
/// Returns false on breakdown or failure to converge.
template <typename Scalar>
bool spd_probe(const SparseSym<Scalar>& m, double tolerance = 1e-8) {
  Vector<Scalar> rhs(m.dim());
  std::uint64_t state = 0x9E3779B97F4A7C15ull;
  for (Eigen::Index i = 0; i < m.dim(); ++i) {
    state ^= state << 13;
    state ^= state >> 7;
    state ^= state << 17;
    rhs[i] = Scalar(static_cast<double>(state >> 11) * 0x1.0p-53 - 0.5);
  }
  SolverConfig cfg;
  cfg.method = SolverMethod::ConjugateGradient;
  cfg.tolerance = tolerance;
  cfg.residual_mode = ResidualMode::Relative;
  try {
    return solve(m, rhs, cfg).report.converged;
  } catch (const BreakdownDetected&) {
    return false;
  }
}

}  // namespace qo
