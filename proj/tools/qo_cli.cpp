// Command-line front end: solver benchmarks, inference on files, gradient checks
// and the toy trainer.

#include "qo/general.hpp"
#include "qo/gradcheck.hpp"
#include "qo/multires.hpp"
#include "qo/potts.hpp"
#include "qo/random_systems.hpp"
#include "qo/solvers.hpp"
#include "qo/system_io.hpp"
#include "qo/toy_trainer.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using qo::io::format_double;

namespace {

struct SolverFlags {
  std::string method = "cg";
  double tol = 1e-6;
  bool relative = false;
  long max_iter = 0;
  int restart = 30;

  void add_to(CLI::App& app) {
    app.add_option("--solver", method, "jacobi | gauss-seidel | cg | gmres")->capture_default_str();
    app.add_option("--tol", tol, "Residual tolerance")->capture_default_str();
    app.add_flag("--relative", relative, "Scale the tolerance by ||b||");
    app.add_option("--max-iter", max_iter, "Iteration cap (0: 10 * dim)")->capture_default_str();
    app.add_option("--restart", restart, "GMRES restart length")->capture_default_str();
  }

  qo::SolverConfig config() const {
    qo::SolverConfig cfg;
    cfg.method = qo::solver_method_from_string(method);
    cfg.tolerance = tol;
    cfg.residual_mode = relative ? qo::ResidualMode::Relative : qo::ResidualMode::Absolute;
    cfg.max_iterations = max_iter;
    cfg.gmres_restart = restart;
    return cfg;
  }
};

std::ofstream open_csv(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw qo::InvalidArgument("cannot write '" + path.string() + "'");
  return out;
}

void print_report(std::ostream& os, const std::string& stage, const qo::SolveReport& r) {
  os << "stage=" << stage << " method=" << qo::to_string(r.method) << " iterations=" << r.iterations
     << " final_residual=" << format_double(r.final_residual()) << " converged=" << (r.converged ? 1 : 0)
     << '\n';
}

void write_residual_rows(std::ostream& os, const std::string& label, const qo::SolveReport& r) {
  for (std::size_t i = 0; i < r.residuals.size(); ++i)
    os << label << ',' << i + 1 << ',' << format_double(r.residuals[i]) << '\n';
}

std::vector<double> parse_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

// ---------------------------------------------------------------- bench-solvers

struct BenchArgs {
  std::vector<std::string> systems;
  std::vector<std::string> rhs;
  long height = 64, width = 64, labels = 4;
  int stencil = 4;
  std::uint64_t seed = 0;
  int count = 25;
  double lambda = 10.0;
  double weight = 0.2;
  std::string out = "bench";
  SolverFlags solver;
};

int run_bench(const BenchArgs& a) {
  struct Case {
    qo::SparseSymd matrix;
    Eigen::VectorXd rhs;
  };
  std::vector<Case> cases;
  qo::Rng rng(a.seed);
  if (!a.systems.empty()) {
    if (!a.rhs.empty() && a.rhs.size() != a.systems.size())
      throw qo::InvalidArgument("--rhs must be given once per --system");
    for (std::size_t i = 0; i < a.systems.size(); ++i) {
      auto m = qo::io::read_system(a.systems[i]);
      Eigen::VectorXd b = a.rhs.empty() ? qo::random_normal(m.dim(), rng) : qo::io::read_vector(a.rhs[i]);
      cases.push_back({std::move(m), std::move(b)});
    }
  } else {
    const qo::GridGraph graph(a.height, a.width, a.labels, qo::stencil_from_int(a.stencil));
    for (int i = 0; i < a.count; ++i) {
      const auto sys = qo::random_potts_system(graph, a.lambda, -a.weight, a.weight, rng);
      auto b = qo::random_normal(graph.dim(), rng);
      cases.push_back({qo::to_general(sys).system(), std::move(b)});
    }
  }

  const fs::path dir(a.out);
  fs::create_directories(dir);
  auto summary = open_csv(dir / "summary.csv");
  summary << "method,system_id,iterations,final_residual\n";
  std::map<qo::SolverMethod, double> total_iters;
  std::map<qo::SolverMethod, int> converged;
  for (std::size_t id = 0; id < cases.size(); ++id) {
    auto trace = open_csv(dir / ("residuals_" + std::to_string(id) + ".csv"));
    trace << "method,iteration,residual\n";
    for (auto method : qo::kAllSolverMethods) {
      auto cfg = a.solver.config();
      cfg.method = method;
      const auto res = qo::solve(cases[id].matrix, cases[id].rhs, cfg);
      const auto& r = res.report;
      summary << qo::to_string(method) << ',' << id << ',' << r.iterations << ','
              << format_double(r.final_residual()) << '\n';
      write_residual_rows(trace, std::string(qo::to_string(method)), r);
      total_iters[method] += r.iterations;
      converged[method] += r.converged ? 1 : 0;
    }
  }
  for (auto method : qo::kAllSolverMethods) {
    std::cout << qo::to_string(method) << ": mean_iterations="
              << format_double(total_iters[method] / static_cast<double>(cases.size()))
              << " converged=" << converged[method] << '/' << cases.size() << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------- infer

struct InferArgs {
  std::string pairwise;
  std::vector<std::string> unary;
  double lambda = 10.0;
  bool potts = false;
  bool multires = false;
  long labels = 0;
  long height = 0, width = 0;
  int stencil = 4;
  std::string scales = "1,0.5,0.333";
  bool coupled = false;
  bool decoupled = false;
  std::uint64_t seed = 0;
  double weight = 0.05;
  std::string out;
  std::string report;
  SolverFlags solver;
};

void write_report_csv(const std::string& path,
                      const std::vector<std::pair<std::string, qo::SolveReport>>& reports) {
  if (path.empty()) return;
  auto csv = open_csv(path);
  csv << "stage,iteration,residual\n";
  for (const auto& [stage, r] : reports) write_residual_rows(csv, stage, r);
}

int run_infer_general(const InferArgs& a) {
  const qo::GeneralQO model(qo::io::read_system(a.pairwise), a.lambda);
  if (a.unary.size() != 1) throw qo::InvalidArgument("general inference takes exactly one --unary file");
  const auto b = qo::io::read_vector(a.unary.front());
  const auto res = qo::solve(model.system(), b, a.solver.config());
  qo::io::write_vector(fs::path(a.out), res.x);
  print_report(std::cout, "inference", res.report);
  write_report_csv(a.report, {{"inference", res.report}});
  return res.report.converged ? 0 : 2;
}

int run_infer_potts(const InferArgs& a) {
  if (a.labels < 1) throw qo::InvalidArgument("--potts requires --labels");
  if (a.unary.size() != 1) throw qo::InvalidArgument("Potts inference takes exactly one --unary file");
  const qo::PottsSystem sys(qo::io::read_system(a.pairwise), a.lambda, a.labels);
  const Eigen::VectorXd flat = qo::io::read_vector(a.unary.front());
  if (flat.size() != sys.pixels() * a.labels)
    throw qo::DimensionMismatch("L x P unary tensor", sys.pixels() * a.labels, flat.size());
  // Class-major on disk: b_1 first, then b_2, ...
  const Eigen::MatrixXd b = Eigen::Map<const Eigen::MatrixXd>(flat.data(), sys.pixels(), a.labels);
  const auto res = qo::potts_infer(sys, b, a.solver.config());
  qo::io::write_vector(fs::path(a.out), Eigen::Map<const Eigen::VectorXd>(res.per_class.data(), res.per_class.size()));
  std::vector<std::pair<std::string, qo::SolveReport>> reports;
  for (std::size_t s = 0; s < res.stage_reports.size(); ++s) {
    const std::string stage = s == 0 ? "class-sum" : "class-" + std::to_string(s - 1);
    print_report(std::cout, stage, res.stage_reports[s]);
    reports.emplace_back(stage, res.stage_reports[s]);
  }
  write_report_csv(a.report, reports);
  return 0;
}

int run_infer_multires(const InferArgs& a) {
  if (a.coupled == a.decoupled) throw qo::InvalidArgument("--multires needs exactly one of --coupled/--decoupled");
  if (a.height < 1 || a.width < 1 || a.labels < 1)
    throw qo::InvalidArgument("--multires requires --height, --width and --labels");
  const qo::GridGraph base(a.height, a.width, a.labels, qo::stencil_from_int(a.stencil));
  std::vector<qo::GridGraph> scales;
  for (double f : parse_list(a.scales)) scales.push_back(qo::scaled_grid(base, f));
  const auto graph =
      qo::build_multires(scales, a.coupled ? qo::Coupling::Coupled : qo::Coupling::Decoupled);
  const auto pattern = qo::build_multires_pattern(graph, true);

  qo::SparseSymd pairwise;
  if (a.pairwise.empty()) {
    qo::Rng rng(a.seed);
    pairwise = qo::random_symmetric_values(pattern, -a.weight, a.weight, rng);
  } else {
    // Keep the entries that lie in this coupling mode's pattern; drop cross-scale
    // entries in decoupled mode.
    const auto given = qo::io::read_system(a.pairwise);
    if (given.dim() != pattern.dim()) throw qo::DimensionMismatch("multi-resolution system", pattern.dim(), given.dim());
    Eigen::VectorXd v = Eigen::VectorXd::Zero(pattern.nnz());
    const auto offs = given.row_offsets();
    const auto cols = given.col_indices();
    const auto vals = given.values();
    for (Eigen::Index i = 0; i < given.dim(); ++i) {
      for (auto k = offs[i]; k < offs[i + 1]; ++k) {
        const auto pos = pattern.find(i, cols[k]);
        if (pos >= 0) v[pos] = vals[k];
        else if (vals[k] != 0.0 && a.coupled)
          throw qo::InvalidArgument("pairwise entry outside the multi-resolution pattern");
      }
    }
    pairwise = pattern.with_values(v);
  }

  if (a.unary.size() != graph.scales().size())
    throw qo::InvalidArgument("--multires needs one --unary file per scale");
  std::vector<qo::ScoreField> fields;
  for (std::size_t s = 0; s < a.unary.size(); ++s)
    fields.emplace_back(graph.scales()[s], qo::io::read_vector(a.unary[s]));

  const qo::GeneralQO model(pairwise, a.lambda);
  auto cfg = a.solver.config();
  const auto res = qo::solve(model.system(), qo::stack_scales(graph, fields), cfg);
  const auto per_scale = qo::split_scales(graph, res.x);

  const fs::path dir(a.out);
  fs::create_directories(dir);
  for (std::size_t s = 0; s < per_scale.size(); ++s)
    qo::io::write_vector(dir / ("scale_" + std::to_string(s) + ".txt"), per_scale[s].values);
  qo::io::write_vector(dir / "fused.txt", qo::fuse_scores(per_scale).values);
  print_report(std::cout, "inference", res.report);
  std::cout << "scales=" << per_scale.size() << " cross_links=" << graph.cross_links().size()
            << " dim=" << graph.total_dim() << '\n';
  write_report_csv(a.report, {{"inference", res.report}});
  return res.report.converged ? 0 : 2;
}

int run_infer(const InferArgs& a) {
  if (a.potts && a.multires) throw qo::InvalidArgument("--potts and --multires are exclusive");
  if (a.multires) return run_infer_multires(a);
  if (a.pairwise.empty()) throw qo::InvalidArgument("--pairwise is required");
  return a.potts ? run_infer_potts(a) : run_infer_general(a);
}

// ---------------------------------------------------------------- grad-check

int run_grad_check(const qo::GradCheckOptions& opt) {
  const auto report = qo::run_gradcheck(opt);
  for (const auto& g : report.groups) {
    std::cout << g.name << ": checked=" << g.checked << " worst_relative=" << format_double(g.worst_relative)
              << " worst_absolute=" << format_double(g.worst_absolute) << " failures=" << g.failures << '\n';
  }
  std::cout << (report.passed() ? "PASS" : "FAIL") << '\n';
  return report.passed() ? 0 : 1;
}

// ---------------------------------------------------------------- train-toy

struct TrainArgs {
  long height = 16, width = 16, labels = 2;
  int stencil = 4;
  int steps = 200;
  double lr = 30.0;
  double lambda = 10.0;
  bool potts = false;
  bool learn_bias = false;
  std::uint64_t seed = 0;
  double noise = 0.5;
  double occlusion = 0.2;
  std::string pattern = "blobs";
  std::string out = "train";
  SolverFlags solver;
};

int run_train(const TrainArgs& a) {
  qo::SyntheticTask task;
  task.seed = a.seed;
  task.graph = qo::GridGraph(a.height, a.width, a.labels);
  task.unary_noise = a.noise;
  task.occlusion_rate = a.occlusion;
  task.pattern = qo::task_pattern_from_string(a.pattern);

  qo::TrainConfig cfg;
  cfg.steps = a.steps;
  cfg.learning_rate = a.lr;
  cfg.lambda = a.lambda;
  cfg.parameterization = a.potts ? qo::Parameterization::Potts : qo::Parameterization::General;
  cfg.stencil = qo::stencil_from_int(a.stencil);
  cfg.solver = a.solver.config();
  cfg.learn_unary_bias = a.learn_bias;

  const auto result = qo::train(task, cfg);

  const fs::path dir(a.out);
  fs::create_directories(dir);
  auto history = open_csv(dir / "history.csv");
  history << "step,loss,accuracy\n";
  for (const auto& h : result.history)
    history << h.step << ',' << format_double(h.loss) << ',' << format_double(h.accuracy) << '\n';
  qo::io::write_system(dir / "pairwise.txt", result.pairwise);
  qo::io::write_vector(dir / "unary_bias.txt", result.unary_bias);

  std::ostringstream line;
  line << "parameterization=" << qo::to_string(result.parameterization)
       << " final_loss=" << format_double(result.history.back().loss)
       << " final_accuracy=" << format_double(result.final_metrics.pixel_accuracy)
       << " final_mean_iou=" << format_double(result.final_metrics.mean_iou)
       << " baseline_accuracy=" << format_double(result.baseline_metrics.pixel_accuracy)
       << " baseline_mean_iou=" << format_double(result.baseline_metrics.mean_iou)
       << " step_shrinks=" << result.step_shrinks;
  std::cout << line.str() << '\n';
  auto metrics = open_csv(dir / "metrics.txt");
  metrics << line.str() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian-CRF quadratic optimization toolkit"};
  app.require_subcommand(1);

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench-solvers", "Compare Jacobi, Gauss-Seidel, CG and GMRES");
  bench_cmd->add_option("--system", bench.systems, "System file(s); omit to generate random Potts systems");
  bench_cmd->add_option("--rhs", bench.rhs, "Right-hand side vector file(s), one per --system");
  bench_cmd->add_option("--height", bench.height)->capture_default_str();
  bench_cmd->add_option("--width", bench.width)->capture_default_str();
  bench_cmd->add_option("--labels", bench.labels)->capture_default_str();
  bench_cmd->add_option("--stencil", bench.stencil, "4, 8 or 12")->capture_default_str();
  bench_cmd->add_option("--seed", bench.seed)->capture_default_str();
  bench_cmd->add_option("--count", bench.count, "Number of generated systems")->capture_default_str();
  bench_cmd->add_option("--lambda", bench.lambda)->capture_default_str();
  bench_cmd->add_option("--weight", bench.weight, "Edge weights uniform in [-w, w]")->capture_default_str();
  bench_cmd->add_option("--out", bench.out, "Output directory")->capture_default_str();
  bench.solver.add_to(*bench_cmd);

  InferArgs infer;
  auto* infer_cmd = app.add_subcommand("infer", "MAP inference (general, --potts or --multires)");
  infer_cmd->add_option("--pairwise", infer.pairwise, "Pairwise system file");
  infer_cmd->add_option("--unary", infer.unary, "Unary vector file(s)")->delimiter(',')->required();
  infer_cmd->add_option("--lambda", infer.lambda)->capture_default_str();
  infer_cmd->add_flag("--potts", infer.potts, "Pairwise file is the P x P shared matrix");
  infer_cmd->add_flag("--multires", infer.multires, "Stacked multi-resolution system");
  infer_cmd->add_option("--labels", infer.labels);
  infer_cmd->add_option("--height", infer.height);
  infer_cmd->add_option("--width", infer.width);
  infer_cmd->add_option("--stencil", infer.stencil)->capture_default_str();
  infer_cmd->add_option("--scales", infer.scales, "Comma-separated scale factors")->capture_default_str();
  infer_cmd->add_flag("--coupled", infer.coupled);
  infer_cmd->add_flag("--decoupled", infer.decoupled);
  infer_cmd->add_option("--seed", infer.seed, "Seed for random multi-resolution pairwise terms")->capture_default_str();
  infer_cmd->add_option("--weight", infer.weight, "Random pairwise terms uniform in [-w, w]")->capture_default_str();
  infer_cmd->add_option("--out", infer.out, "Output file (directory with --multires)")->required();
  infer_cmd->add_option("--report", infer.report, "Per-iteration residual CSV");
  infer.solver.add_to(*infer_cmd);

  qo::GradCheckOptions gc;
  auto* gc_cmd = app.add_subcommand("grad-check", "Finite-difference check of the analytic gradients");
  gc_cmd->add_option("--models", gc.models)->capture_default_str();
  gc_cmd->add_option("--seed", gc.seed)->capture_default_str();
  gc_cmd->add_option("--step", gc.step)->capture_default_str();
  gc_cmd->add_option("--rel-tol", gc.rel_tol)->capture_default_str();
  gc_cmd->add_option("--abs-floor", gc.abs_floor)->capture_default_str();
  gc_cmd->add_option("--max-pixels", gc.max_pixels)->capture_default_str();
  gc_cmd->add_option("--max-labels", gc.max_labels)->capture_default_str();

  TrainArgs tr;
  auto* tr_cmd = app.add_subcommand("train-toy", "Train pairwise terms on a synthetic segmentation task");
  tr_cmd->add_option("--height", tr.height)->capture_default_str();
  tr_cmd->add_option("--width", tr.width)->capture_default_str();
  tr_cmd->add_option("--labels", tr.labels)->capture_default_str();
  tr_cmd->add_option("--stencil", tr.stencil)->capture_default_str();
  tr_cmd->add_option("--steps", tr.steps)->capture_default_str();
  tr_cmd->add_option("--lr", tr.lr)->capture_default_str();
  tr_cmd->add_option("--lambda", tr.lambda)->capture_default_str();
  tr_cmd->add_flag("--potts", tr.potts, "Shared Potts pairwise terms");
  tr_cmd->add_flag("--learn-bias", tr.learn_bias, "Also learn a per-class unary bias");
  tr_cmd->add_option("--seed", tr.seed)->capture_default_str();
  tr_cmd->add_option("--noise", tr.noise)->capture_default_str();
  tr_cmd->add_option("--occlusion", tr.occlusion)->capture_default_str();
  tr_cmd->add_option("--pattern", tr.pattern, "blobs | stripes")->capture_default_str();
  tr_cmd->add_option("--out", tr.out, "Output directory")->capture_default_str();
  tr.solver.add_to(*tr_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*bench_cmd) return run_bench(bench);
    if (*infer_cmd) return run_infer(infer);
    if (*gc_cmd) return run_grad_check(gc);
    if (*tr_cmd) return run_train(tr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
