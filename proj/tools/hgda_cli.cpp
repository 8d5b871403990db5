// hgda: hyper-graph matching domain adaptation toolkit.
//
//   hgda adapt      adapt a labelled source set toward an unlabelled target
//   hgda evaluate   1-NN predictions (and accuracy when test labels are given)
//   hgda benchmark  multi-task protocol from a JSON description
//   hgda lp-check   ADMM linear subproblem vs permutation enumeration
//
// Exit codes: 0 success, 1 input error, 2 numerical failure.

#include "CLI11.hpp"
#include "hgda/eval.hpp"
#include "hgda_oracles.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>

namespace {

using hgda::Matrix;

struct AdaptArgs {
  std::string source_features, source_labels, target_features, out_dir, dump_tensor;
  hgda::AdaptationConfig cfg;
  bool cold_start = false;
  bool raw_lp = false;
};

int run_adapt(AdaptArgs& args) {
  args.cfg.cg.warm_start = !args.cold_start;
  args.cfg.cg.admm.round_to_polytope = !args.raw_lp;
  const hgda::LabeledDataset source = hgda::load_dataset({args.source_features, args.source_labels});
  const hgda::FeatureMatrix target = hgda::load_features(args.target_features);

  const hgda::AdaptationResult result = hgda::adapt(source, target, args.cfg);

  const std::filesystem::path dir(args.out_dir);
  std::filesystem::create_directories(dir);
  hgda::write_features(dir / "adapted_source.csv", result.adapted_source);
  hgda::write_features(dir / "matching.csv", result.matching);
  if (!args.dump_tensor.empty()) hgda::write_tensor_csv(args.dump_tensor, result.last_tensor);

  const auto& c = args.cfg;
  nlohmann::json report{
      {"config",
       {{"eta", c.eta},
        {"lambda2", c.weights.lambda2},
        {"lambda3", c.weights.lambda3},
        {"lambda_g", c.weights.lambda_g},
        {"outer_rounds", c.outer_rounds},
        {"cg_iters", c.cg.iterations},
        {"admm_iters", c.cg.admm.iterations},
        {"warm_start", c.cg.warm_start},
        {"round_lp", c.cg.admm.round_to_polytope},
        {"ridge", c.ridge},
        {"triangles_per_node", c.tensor.triangles_per_node},
        {"pool_factor", c.tensor.pool_factor},
        {"nearest", c.tensor.nearest},
        {"seed", c.seed}}},
      {"source_rows", source.size()},
      {"target_rows", target.rows()},
      {"rounds", result.rounds},
      {"source_exemplars", result.rounds.back().source_exemplars},
      {"target_exemplars", result.rounds.back().target_exemplars}};
  std::ofstream(dir / "report.json") << report.dump(2) << '\n';

  std::cout << "adapted " << source.size() << " source rows over " << c.outer_rounds
            << " round(s); outputs in " << dir.string() << '\n';
  return 0;
}

struct EvaluateArgs {
  std::string train_features, train_labels, test_features, test_labels, out = "predictions.csv";
};

int run_evaluate(const EvaluateArgs& args) {
  const hgda::LabeledDataset train = hgda::load_dataset({args.train_features, args.train_labels});
  const hgda::FeatureMatrix test = hgda::load_features(args.test_features);
  const hgda::Labels predicted = hgda::knn_predict(train, test.values());
  hgda::write_labels(args.out, predicted);
  if (!args.test_labels.empty()) {
    int classes = 0;
    const hgda::Labels truth = hgda::load_labels(args.test_labels, test.rows(), classes);
    std::printf("accuracy %.6f\n", hgda::accuracy(predicted, truth));
  }
  return 0;
}

int run_benchmark(const std::string& spec_path, const std::string& out) {
  const hgda::BenchmarkFile file = hgda::load_benchmark_file(spec_path);
  const auto results = hgda::run_benchmark(file.tasks, file.seed);
  for (const auto& r : results)
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
  hgda::write_result_table(std::cout, results);
  std::ofstream csv(out);
  if (!csv) throw hgda::InputError("cannot write " + out);
  hgda::write_result_csv(csv, results);
  return 0;
}

int run_lp_check(int n, int trials, std::uint64_t seed, int admm_iters) {
  if (n < 1 || n > 8) throw hgda::InputError("lp-check enumerates permutations; need 1 <= n <= 8");
  if (trials < 1) throw hgda::InputError("lp-check needs at least one trial");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  hgda::AdmmOptions opts;
  opts.iterations = admm_iters;
  double worst = 0.0, worst_residual = 0.0;
  for (int t = 0; t < trials; ++t) {
    Matrix g(n, n);
    for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = unit(rng);
    const auto marginals = hgda::Marginals::uniform(n, n);
    const Matrix z = hgda::admm_lp(g, marginals, opts);
    const double got = (g.array() * z.array()).sum();
    worst = std::max(worst, std::abs(got - hgda::oracle::permutation_min(g)));
    worst_residual = std::max(worst_residual, hgda::feasibility(z, marginals).marginal_residual());
  }
  std::printf("n=%d trials=%d admm_iters=%d max_deviation=%.3e max_marginal_residual=%.3e\n", n, trials,
              admm_iters, worst, worst_residual);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hyper-graph matching domain adaptation"};
  app.require_subcommand(1);

  AdaptArgs adapt_args;
  auto* adapt = app.add_subcommand("adapt", "Adapt source features toward a target domain");
  adapt->add_option("--source-features", adapt_args.source_features, "Source feature CSV")->required();
  adapt->add_option("--source-labels", adapt_args.source_labels, "Source label file")->required();
  adapt->add_option("--target-features", adapt_args.target_features, "Target feature CSV")->required();
  adapt->add_option("--eta", adapt_args.cfg.eta, "Exemplar fraction in (0,1]")->capture_default_str();
  adapt->add_option("--lambda2", adapt_args.cfg.weights.lambda2, "Second-order weight")->capture_default_str();
  adapt->add_option("--lambda3", adapt_args.cfg.weights.lambda3, "Third-order weight")->capture_default_str();
  adapt->add_option("--lambdag", adapt_args.cfg.weights.lambda_g, "Group-lasso weight")->capture_default_str();
  adapt->add_option("--nt-outer", adapt_args.cfg.outer_rounds, "Outer rounds")->capture_default_str();
  adapt->add_option("--cg-iters", adapt_args.cfg.cg.iterations, "Conditional-gradient iterations")
      ->capture_default_str();
  adapt->add_option("--admm-iters", adapt_args.cfg.cg.admm.iterations, "ADMM sweeps per LP")->capture_default_str();
  adapt->add_option("--seed", adapt_args.cfg.seed, "Random seed")->capture_default_str();
  adapt->add_option("--ridge", adapt_args.cfg.ridge, "Ridge coefficient of the linear map")->capture_default_str();
  adapt->add_option("--triangles-per-node", adapt_args.cfg.tensor.triangles_per_node)->capture_default_str();
  adapt->add_option("--pool-factor", adapt_args.cfg.tensor.pool_factor, "Target triangle pool = factor * n_t")
      ->capture_default_str();
  adapt->add_option("--nearest", adapt_args.cfg.tensor.nearest, "Nearest target triangles kept")
      ->capture_default_str();
  adapt->add_flag("--cold-start", adapt_args.cold_start, "Restart ADMM from scratch every CG step");
  adapt->add_flag("--raw-lp", adapt_args.raw_lp, "Return clamped ADMM output without polytope rounding");
  adapt->add_option("--dump-tensor", adapt_args.dump_tensor, "Write the last round's tensor entries as CSV");
  adapt->add_option("--out", adapt_args.out_dir, "Output directory")->required();

  EvaluateArgs eval_args;
  auto* evaluate = app.add_subcommand("evaluate", "1-NN predictions for test features");
  evaluate->add_option("--train-features", eval_args.train_features)->required();
  evaluate->add_option("--train-labels", eval_args.train_labels)->required();
  evaluate->add_option("--test-features", eval_args.test_features)->required();
  evaluate->add_option("--test-labels", eval_args.test_labels, "Report accuracy against these labels");
  evaluate->add_option("--out", eval_args.out, "Predictions file")->capture_default_str();

  std::string spec_path, bench_out = "benchmark_results.csv";
  auto* bench = app.add_subcommand("benchmark", "Run a JSON-described benchmark");
  bench->add_option("--spec", spec_path, "Benchmark description")->required();
  bench->add_option("--out", bench_out, "Result table CSV")->capture_default_str();

  int lp_n = 4, lp_trials = 50, lp_admm = 300;
  std::uint64_t lp_seed = 0;
  auto* lp = app.add_subcommand("lp-check", "Compare ADMM LP solutions with permutation enumeration");
  lp->add_option("--n", lp_n)->capture_default_str();
  lp->add_option("--trials", lp_trials)->capture_default_str();
  lp->add_option("--seed", lp_seed)->capture_default_str();
  lp->add_option("--admm-iters", lp_admm)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*adapt) return run_adapt(adapt_args);
    if (*evaluate) return run_evaluate(eval_args);
    if (*bench) return run_benchmark(spec_path, bench_out);
    if (*lp) return run_lp_check(lp_n, lp_trials, lp_seed, lp_admm);
  } catch (const hgda::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
