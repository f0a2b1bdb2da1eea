#include "qo/gradcheck.hpp"

#include "qo/general.hpp"
#include "qo/potts.hpp"

#include <algorithm>
#include <cmath>

namespace qo {

namespace {

SolverConfig tight_solver() {
  SolverConfig cfg;
  cfg.method = SolverMethod::ConjugateGradient;
  cfg.tolerance = 1e-13;
  cfg.residual_mode = ResidualMode::Relative;
  return cfg;
}

struct SmallModel {
  GridGraph graph;
  LabelMap truth;
  Eigen::VectorXd unary;
  double lambda;
};

SmallModel sample_model(const GradCheckOptions& opt, int index, Rng& rng) {
  constexpr Stencil kStencils[] = {Stencil::Four, Stencil::Eight, Stencil::Twelve};
  std::uniform_int_distribution<Eigen::Index> labels_dist(1, opt.max_labels);
  Eigen::Index h = 0, w = 0;
  do {
    h = std::uniform_int_distribution<Eigen::Index>(1, 4)(rng);
    w = std::uniform_int_distribution<Eigen::Index>(1, 4)(rng);
  } while (h * w > opt.max_pixels);
  const GridGraph graph(h, w, labels_dist(rng), kStencils[index % 3]);
  std::uniform_int_distribution<Eigen::Index> label_dist(0, graph.labels() - 1);
  std::vector<Eigen::Index> y(static_cast<std::size_t>(graph.pixels()));
  for (auto& l : y) l = label_dist(rng);
  return {graph, LabelMap(graph, std::move(y)), 2.0 * random_normal(graph.dim(), rng), 2.0};
}

double max_degree(const SparseSymd& pattern) {
  Eigen::Index deg = 1;
  const auto offs = pattern.row_offsets();
  for (Eigen::Index i = 0; i < pattern.dim(); ++i) deg = std::max<Eigen::Index>(deg, offs[i + 1] - offs[i] - 1);
  return static_cast<double>(std::max<Eigen::Index>(deg, 1));
}

// Perturbs the tied pair (i,j)/(j,i) of `pairwise` at storage position k by h.
SparseSymd nudge(const SparseSymd& pairwise, const std::vector<Eigen::Index>& mirror, Eigen::Index k,
                 double h) {
  Eigen::VectorXd v = pairwise.value_vector();
  v[k] += h;
  if (mirror[k] != k) v[mirror[k]] += h;
  return pairwise.with_values(v);
}

void check_general(const SmallModel& m, Rng& rng, const GradCheckOptions& opt,
                   GradCheckGroup& unary_group, GradCheckGroup& pair_group) {
  const SparseSymd pattern = build_pattern(m.graph, true);
  const double bound = 0.9 * m.lambda / max_degree(pattern);
  const SparseSymd pairwise = random_symmetric_values(pattern, -bound, bound, rng);
  const auto cfg = tight_solver();

  auto loss_of = [&](const SparseSymd& a, const Eigen::VectorXd& b) {
    const GeneralQO model(a, m.lambda);
    return softmax_xent(ScoreField(m.graph, infer(model, b, cfg).x), m.truth).loss;
  };

  const GeneralQO model(pairwise, m.lambda);
  const auto x = infer(model, m.unary, cfg).x;
  const auto xent = softmax_xent(ScoreField(m.graph, x), m.truth);
  const auto dl_db = grad_unary(model, xent.grad.values, cfg).x;
  const auto dl_da = grad_pairwise(dl_db, x, pattern);

  for (Eigen::Index i = 0; i < m.unary.size(); ++i) {
    const double fd = central_difference(
        [&](double h) {
          Eigen::VectorXd b = m.unary;
          b[i] += h;
          return loss_of(pairwise, b);
        },
        opt.step);
    unary_group.add(dl_db[i], fd, opt);
  }

  const auto mirror = pattern.transpose_positions();
  const auto offs = pattern.row_offsets();
  const auto cols = pattern.col_indices();
  for (Eigen::Index i = 0; i < pattern.dim(); ++i) {
    for (auto k = offs[i]; k < offs[i + 1]; ++k) {
      if (cols[k] < i) continue;
      const double fd = central_difference(
          [&](double h) { return loss_of(nudge(pairwise, mirror, k, h), m.unary); }, opt.step);
      pair_group.add(dl_da.values()[k], fd, opt);
    }
  }
}

void check_potts(const SmallModel& m, Rng& rng, const GradCheckOptions& opt,
                 GradCheckGroup& unary_group, GradCheckGroup& pair_group) {
  const Eigen::Index L = m.graph.labels();
  const SparseSymd pattern = build_pattern(m.graph, false);
  const double bound =
      0.9 * m.lambda / (max_degree(pattern) * static_cast<double>(std::max<Eigen::Index>(L - 1, 1)));
  const SparseSymd shared = random_symmetric_values(pattern, -bound, bound, rng);
  const auto cfg = tight_solver();
  const Eigen::MatrixXd b = ScoreField(m.graph, m.unary).per_class();

  auto loss_of = [&](const SparseSymd& s, const Eigen::MatrixXd& unary) {
    const PottsSystem sys(s, m.lambda, L);
    const auto x = potts_infer(sys, unary, cfg).per_class;
    return softmax_xent(ScoreField(m.graph, flatten_per_class(x)), m.truth).loss;
  };

  const PottsSystem sys(shared, m.lambda, L);
  const Eigen::MatrixXd x = potts_infer(sys, b, cfg).per_class;
  const auto xent = softmax_xent(ScoreField(m.graph, flatten_per_class(x)), m.truth);
  const Eigen::MatrixXd dl_db = potts_grad_unary(sys, xent.grad.per_class(), cfg).per_class;
  const auto dl_ds = potts_grad_pairwise(dl_db, x, pattern);

  for (Eigen::Index p = 0; p < b.rows(); ++p) {
    for (Eigen::Index k = 0; k < L; ++k) {
      const double fd = central_difference(
          [&](double h) {
            Eigen::MatrixXd u = b;
            u(p, k) += h;
            return loss_of(shared, u);
          },
          opt.step);
      unary_group.add(dl_db(p, k), fd, opt);
    }
  }

  const auto mirror = pattern.transpose_positions();
  const auto offs = pattern.row_offsets();
  const auto cols = pattern.col_indices();
  for (Eigen::Index i = 0; i < pattern.dim(); ++i) {
    for (auto k = offs[i]; k < offs[i + 1]; ++k) {
      if (cols[k] <= i) continue;
      const double fd =
          central_difference([&](double h) { return loss_of(nudge(shared, mirror, k, h), b); }, opt.step);
      pair_group.add(dl_ds.values()[k], fd, opt);
    }
  }
}

}  // namespace

void GradCheckGroup::add(double analytic, double numeric, const GradCheckOptions& opt) {
  const double diff = std::abs(analytic - numeric);
  const double scale = std::max({std::abs(analytic), std::abs(numeric), opt.abs_floor / opt.rel_tol});
  ++checked;
  worst_absolute = std::max(worst_absolute, diff);
  worst_relative = std::max(worst_relative, diff / scale);
  if (!(diff / scale <= opt.rel_tol)) ++failures;
}

bool GradCheckReport::passed() const {
  return std::all_of(groups.begin(), groups.end(), [](const auto& g) { return g.failures == 0; });
}

GradCheckReport run_gradcheck(const GradCheckOptions& opt) {
  GradCheckReport report;
  report.groups = {{"general/unary"}, {"general/pairwise"}, {"potts/unary"}, {"potts/pairwise"}};
  Rng rng(opt.seed);
  for (int i = 0; i < opt.models; ++i) {
    const SmallModel m = sample_model(opt, i, rng);
    check_general(m, rng, opt, report.groups[0], report.groups[1]);
    check_potts(m, rng, opt, report.groups[2], report.groups[3]);
  }
  return report;
}

}  // namespace qo
