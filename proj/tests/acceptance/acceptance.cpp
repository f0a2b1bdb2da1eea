// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include "oracles.hpp"
#include "qo/general.hpp"
#include "qo/gradcheck.hpp"
#include "qo/multires.hpp"
#include "qo/potts.hpp"
#include "qo/random_systems.hpp"
#include "qo/solvers.hpp"
#include "qo/system_io.hpp"
#include "qo/toy_trainer.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(double v) { return qo::io::format_double(v); }

qo::SolverConfig tight() {
  qo::SolverConfig cfg;
  cfg.tolerance = 1e-12;
  cfg.residual_mode = qo::ResidualMode::Relative;
  return cfg;
}

// 25 Potts block systems, 64x64, L=4, stencil-4, lambda=10, weights in [-0.2, 0.2].
Outcome solver_ordering() {
  const auto t0 = Clock::now();
  const qo::GridGraph graph(64, 64, 4, qo::Stencil::Four);
  qo::Rng rng(2024);
  std::map<qo::SolverMethod, double> mean;
  bool all_converged = true;
  for (int i = 0; i < 25; ++i) {
    const auto sys = qo::random_potts_system(graph, 10.0, -0.2, 0.2, rng);
    const auto m = qo::to_general(sys).system();
    const Eigen::VectorXd b = qo::random_normal(graph.dim(), rng);
    for (auto method : qo::kAllSolverMethods) {
      qo::SolverConfig cfg;
      cfg.method = method;
      const auto r = qo::solve(m, b, cfg);
      all_converged = all_converged && r.report.converged && r.report.final_residual() <= 1e-6;
      mean[method] += r.report.iterations / 25.0;
    }
  }
  using M = qo::SolverMethod;
  const bool ordered = mean[M::ConjugateGradient] <= mean[M::GMRES] && mean[M::GMRES] <= mean[M::GaussSeidel] &&
                       mean[M::GaussSeidel] <= mean[M::Jacobi];
  const double elapsed = seconds_since(t0);
  std::ostringstream d;
  d << "mean iterations cg=" << fmt(mean[M::ConjugateGradient]) << " gmres=" << fmt(mean[M::GMRES])
    << " gauss-seidel=" << fmt(mean[M::GaussSeidel]) << " jacobi=" << fmt(mean[M::Jacobi])
    << " all_converged=" << all_converged << " ordered=" << ordered << " time=" << fmt(elapsed) << "s";
  return {all_converged && ordered && elapsed < 60, d.str()};
}

// 20 random systems, 50 iterations each, exact elementwise equality.
Outcome meanfield_equivalence() {
  qo::Rng rng(7);
  long mismatches = 0;
  for (int i = 0; i < 20; ++i) {
    const auto s = std::array{qo::Stencil::Four, qo::Stencil::Eight, qo::Stencil::Twelve}[i % 3];
    const qo::GridGraph g(3 + i % 5, 4 + i % 3, 1 + i % 3, s);
    const auto precision = qo::add_scaled_identity(
        qo::random_symmetric_values(qo::build_pattern(g, true), -0.05, 0.05, rng), 1.0 + (i % 4));
    const Eigen::VectorXd theta = qo::random_normal(g.dim(), rng);
    const Eigen::VectorXd rhs = -theta;
    Eigen::VectorXd mp = Eigen::VectorXd::Zero(g.dim()), xj = mp, ms = mp, xg = mp;
    for (int it = 0; it < 50; ++it) {
      mp = qo::meanfield_update(precision, theta, mp, qo::UpdateOrder::Parallel);
      xj = qo::jacobi_step(precision, rhs, xj);
      ms = qo::meanfield_update(precision, theta, ms, qo::UpdateOrder::Sequential);
      xg = qo::gauss_seidel_step(precision, rhs, xg);
      mismatches += (mp.array() != xj.array()).count() + (ms.array() != xg.array()).count();
    }
  }
  return {mismatches == 0, "20 systems x 50 iterations, elementwise mismatches=" + std::to_string(mismatches)};
}

Outcome gradient_exactness() {
  const auto t0 = Clock::now();
  const auto report = qo::run_gradcheck(qo::GradCheckOptions{});
  std::ostringstream d;
  d << "50 models;";
  for (const auto& g : report.groups)
    d << ' ' << g.name << " checked=" << g.checked << " failures=" << g.failures
      << " worst_rel=" << fmt(g.worst_relative) << ';';
  const double elapsed = seconds_since(t0);
  d << " time=" << fmt(elapsed) << "s";
  return {report.passed() && elapsed < 120, d.str()};
}

Outcome potts_equivalence() {
  qo::Rng rng(11);
  double worst = 0;
  bool counts_ok = true;
  for (int i = 0; i < 30; ++i) {
    const Eigen::Index h = 1 + i % 6, w = 1 + (i / 6) % 6, L = 1 + i % 4;
    const qo::GridGraph g(h, w, L);
    const double bound = 0.9 * 2.0 / (4.0 * std::max<double>(1, L - 1));
    const auto sys = qo::random_potts_system(g, 2.0, -bound, bound, rng);
    const Eigen::VectorXd flat = qo::random_normal(g.dim(), rng);
    const auto res = qo::potts_infer(sys, qo::ScoreField(g, flat).per_class(), tight());
    counts_ok = counts_ok && res.stage_reports.size() == static_cast<std::size_t>(L + 1);
    const Eigen::VectorXd general = qo::infer(qo::to_general(sys), flat, tight()).x;
    worst = std::max(worst, (qo::flatten_per_class(res.per_class) - general).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-6 && counts_ok,
          "30 systems, max |potts - general|=" + fmt(worst) + " solver_invocations_L+1=" + (counts_ok ? "yes" : "no")};
}

Outcome potts_speedup() {
  const qo::GridGraph g(109, 85, 21, qo::Stencil::Four);
  qo::Rng rng(13);
  const double lambda = 10.0;
  // (L - 1) * 4 * bound < lambda keeps both Potts stages positive definite.
  const auto sys = qo::random_potts_system(g, lambda, -0.1, 0.1, rng);
  const auto general = qo::to_general(sys);
  const Eigen::VectorXd flat = qo::random_normal(g.dim(), rng);
  const Eigen::MatrixXd per_class = qo::ScoreField(g, flat).per_class();

  std::vector<double> tp, tg;
  double diff = 0;
  for (int run = 0; run < 10; ++run) {
    auto t0 = Clock::now();
    const auto xp = qo::potts_infer(sys, per_class).per_class;
    tp.push_back(seconds_since(t0));
    t0 = Clock::now();
    const auto xg = qo::infer(general, flat).x;
    tg.push_back(seconds_since(t0));
    diff = std::max(diff, (qo::flatten_per_class(xp) - xg).cwiseAbs().maxCoeff());
  }
  std::sort(tp.begin(), tp.end());
  std::sort(tg.begin(), tg.end());
  const double mp = 0.5 * (tp[4] + tp[5]), mg = 0.5 * (tg[4] + tg[5]);
  return {mp <= mg / 3,
          "P=9265 L=21 median potts=" + fmt(mp) + "s general=" + fmt(mg) + "s ratio=" + fmt(mg / mp) +
              " max|diff|=" + fmt(diff)};
}

qo::SparseSymd dominant_values(const qo::SparseSymd& pattern, double lambda, qo::Rng& rng) {
  Eigen::Index widest = 1;
  for (Eigen::Index i = 0; i < pattern.dim(); ++i)
    widest = std::max<Eigen::Index>(widest, pattern.row_offsets()[i + 1] - pattern.row_offsets()[i]);
  const double bound = 0.9 * lambda / static_cast<double>(widest);
  return qo::random_symmetric_values(pattern, -bound, bound, rng, 0.1);
}

Outcome multires_correctness() {
  qo::Rng rng(17);
  const double lambda = 2.0;
  double worst_zero = 0, worst_dense = 0;
  Eigen::Index max_dim = 0;
  for (int i = 0; i < 10; ++i) {
    const auto s = std::array{qo::Stencil::Four, qo::Stencil::Eight, qo::Stencil::Twelve}[i % 3];
    const qo::GridGraph fine(4 + i % 3, 4 + (i / 3) % 3, 1 + i % 3, s);
    const std::vector<qo::GridGraph> scales{fine, qo::scaled_grid(fine, 0.5)};
    const auto mr = qo::build_multires(scales, qo::Coupling::Coupled);
    const auto pattern = qo::build_multires_pattern(mr, true);
    max_dim = std::max(max_dim, mr.total_dim());
    const Eigen::VectorXd b = qo::random_normal(mr.total_dim(), rng);

    // Zero cross-links: copy independent per-scale blocks into the stacked pattern.
    const Eigen::Index L = mr.labels();
    Eigen::VectorXd values = Eigen::VectorXd::Zero(pattern.nnz());
    std::vector<qo::SparseSymd> blocks;
    for (std::size_t k = 0; k < scales.size(); ++k) {
      blocks.push_back(dominant_values(qo::build_pattern(scales[k], true), lambda, rng));
      const Eigen::Index base = mr.pixel_offset(static_cast<Eigen::Index>(k)) * L;
      const auto& blk = blocks.back();
      for (Eigen::Index r = 0; r < blk.dim(); ++r)
        for (auto e = blk.row_offsets()[r]; e < blk.row_offsets()[r + 1]; ++e)
          values[pattern.find(base + r, base + blk.col_indices()[e])] = blk.values()[e];
    }
    const auto zero_links = qo::multires_infer(qo::GeneralQO(pattern.with_values(values), lambda), mr, b, tight());
    const auto unaries = qo::split_scales(mr, b);
    for (std::size_t k = 0; k < scales.size(); ++k) {
      const auto single = qo::infer(qo::GeneralQO(blocks[k], lambda), unaries[k].values, tight()).x;
      worst_zero = std::max(worst_zero, (zero_links.per_scale[k].values - single).cwiseAbs().maxCoeff());
    }

    const auto a = dominant_values(pattern, lambda, rng);
    const auto linked = qo::multires_infer(qo::GeneralQO(a, lambda), mr, b, tight());
    const Eigen::VectorXd x = qo::stack_scales(mr, linked.per_scale);
    worst_dense = std::max(worst_dense, (x - oracle::dense_infer(a, lambda, b)).cwiseAbs().maxCoeff());
  }
  return {worst_zero <= 1e-8 && worst_dense <= 1e-8 && max_dim <= 200,
          "zero-link max diff=" + fmt(worst_zero) + " dense-oracle max diff=" + fmt(worst_dense) +
              " max dim=" + std::to_string(max_dim)};
}

Outcome toy_learning() {
  const auto t0 = Clock::now();
  bool all_ok = true;
  std::ostringstream d;
  for (auto param : {qo::Parameterization::General, qo::Parameterization::Potts}) {
    double acc = 0, base = 0;
    int loss_drops = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      qo::SyntheticTask task;
      task.seed = seed;
      task.graph = qo::GridGraph(16, 16, 2);
      task.occlusion_rate = 0.2;
      task.unary_noise = 0.5;
      qo::TrainConfig cfg;
      cfg.steps = 200;
      cfg.parameterization = param;
      const auto r = qo::train(task, cfg);
      acc += r.final_metrics.pixel_accuracy / 10;
      base += r.baseline_metrics.pixel_accuracy / 10;
      loss_drops += r.history.back().loss < r.history.front().loss;
    }
    all_ok = all_ok && acc > base && loss_drops == 10;
    d << qo::to_string(param) << ": mean_acc=" << fmt(acc) << " baseline=" << fmt(base)
      << " loss_drops=" << loss_drops << "/10; ";
  }
  const double elapsed = seconds_since(t0);
  d << "time=" << fmt(elapsed) << "s";
  return {all_ok && elapsed < 300, d.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome cli_determinism(const std::string& cli, const fs::path& work) {
  if (cli.empty()) return {false, "no --cli given"};
  fs::remove_all(work);
  fs::create_directories(work);

  qo::Rng rng(19);
  const qo::GridGraph g(6, 5, 3);
  qo::io::write_system(work / "pairwise.txt", dominant_values(qo::build_pattern(g, true), 2.0, rng));
  qo::io::write_vector(work / "unary.txt", qo::random_normal(g.dim(), rng));
  qo::io::write_system(work / "shared.txt", qo::random_potts_system(g, 2.0, -0.1, 0.1, rng).shared());
  qo::io::write_vector(work / "potts_unary.txt", qo::random_normal(g.dim(), rng));
  const auto mr = qo::build_multires({g, qo::scaled_grid(g, 0.5)}, qo::Coupling::Coupled);
  qo::io::write_vector(work / "mr0.txt", qo::random_normal(mr.scales()[0].dim(), rng));
  qo::io::write_vector(work / "mr1.txt", qo::random_normal(mr.scales()[1].dim(), rng));

  const std::string w = work.string();
  auto commands = [&](const std::string& d) {
    return std::vector<std::string>{
        "bench-solvers --seed 3 --count 3 --height 16 --width 16 --out " + d + "/bench",
        "infer --pairwise " + w + "/pairwise.txt --unary " + w + "/unary.txt --lambda 2 --out " + d +
            "/x.txt --report " + d + "/x.csv",
        "infer --potts --labels 3 --pairwise " + w + "/shared.txt --unary " + w +
            "/potts_unary.txt --lambda 2 --out " + d + "/potts.txt --report " + d + "/potts.csv",
        "infer --multires --coupled --height 6 --width 5 --labels 3 --scales 1,0.5 --seed 4 --unary " + w +
            "/mr0.txt," + w + "/mr1.txt --out " + d + "/mr --report " + d + "/mr.csv",
        "grad-check --models 3 --seed 5",
        "train-toy --steps 20 --seed 6 --out " + d + "/train",
        "train-toy --steps 20 --seed 6 --potts --out " + d + "/train_potts",
    };
  };
  std::vector<std::string> stdout_files;
  for (const char* run : {"a", "b"}) {
    const std::string d = w + "/" + run;
    fs::create_directories(d);
    int i = 0;
    for (const auto& c : commands(d)) {
      const std::string out = d + "/stdout_" + std::to_string(i++) + ".txt";
      const std::string line = "\"" + cli + "\" " + c + " > \"" + out + "\" 2>&1";
      if (std::system(line.c_str()) != 0) return {false, "command failed: " + c};
    }
  }
  long compared = 0, differing = 0;
  for (const auto& entry : fs::recursive_directory_iterator(work / "a")) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), work / "a");
    const auto other = work / "b" / rel;
    ++compared;
    if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) {
      ++differing;
      std::cerr << "differs: " << rel.string() << '\n';
    }
  }
  return {differing == 0 && compared > 0,
          "7 commands run twice, files compared=" + std::to_string(compared) + " differing=" + std::to_string(differing)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::string cli;
  std::string work = "acceptance_work";
  app.add_option("--cli", cli, "Path to qo_cli");
  app.add_option("--work", work, "Scratch directory");
  CLI11_PARSE(app, argc, argv);

  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"solver ordering", solver_ordering},
      {"mean-field equivalence", meanfield_equivalence},
      {"gradient exactness", gradient_exactness},
      {"potts/general equivalence", potts_equivalence},
      {"potts speedup", potts_speedup},
      {"multi-resolution correctness", multires_correctness},
      {"toy learning", toy_learning},
      {"cli determinism", [&] { return cli_determinism(cli, work); }},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << ' ' << i + 1 << ". " << criteria[i].name << ": " << o.detail
              << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
