#include "hgda/eval.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <sstream>

namespace hgda {

Labels knn_predict(const LabeledDataset& train, const Matrix& test) {
  const Matrix& x = train.features().values();
  if (x.rows() < 1) throw InputError("empty training set");
  if (test.cols() != x.cols()) throw InputError("test features have the wrong dimension");
  Labels out(static_cast<std::size_t>(test.rows()));
  for (Eigen::Index i = 0; i < test.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    Eigen::Index best_row = 0;
    for (Eigen::Index j = 0; j < x.rows(); ++j) {
      const double d = (x.row(j) - test.row(i)).squaredNorm();
      if (d < best) {
        best = d;
        best_row = j;
      }
    }
    out[static_cast<std::size_t>(i)] = train.labels()[static_cast<std::size_t>(best_row)];
  }
  return out;
}

double accuracy(const Labels& predicted, const Labels& truth) {
  if (predicted.size() != truth.size()) throw InputError("prediction and truth lengths differ");
  if (truth.empty()) throw InputError("accuracy of an empty prediction");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

LabeledDataset load_dataset(const DatasetPaths& paths) {
  FeatureMatrix features = load_features(paths.features);
  int classes = 0;
  Labels labels = load_labels(paths.labels, features.rows(), classes);
  return LabeledDataset(std::move(features), std::move(labels));
}

int default_samples_per_class(bool source_is_dslr) { return source_is_dslr ? 8 : 20; }

void ExperimentSpec::validate() const {
  if (samples_per_class < 1) throw InputError(name + ": samples per class must be >= 1");
  if (!(target_fraction > 0.0 && target_fraction < 1.0))
    throw InputError(name + ": target fraction must lie in (0,1)");
  if (trials < 1) throw InputError(name + ": need at least one trial");
  for (const int nt : outer_rounds_grid)
    if (nt < 1) throw InputError(name + ": outer round counts must be >= 1");
  config.validate();
}

namespace {

struct Trial {
  LabeledDataset source;
  Matrix target;  // adaptation half
  Labels target_labels;
  Matrix heldout;
  Labels heldout_labels;
};

Matrix take_rows(const Matrix& m, std::span<const Eigen::Index> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

Labels take_labels(const Labels& y, std::span<const Eigen::Index> rows) {
  Labels out;
  out.reserve(rows.size());
  for (const auto r : rows) out.push_back(y[static_cast<std::size_t>(r)]);
  return out;
}

std::vector<Trial> make_trials(const ExperimentSpec& spec, const LabeledDataset& source,
                               const LabeledDataset& target, std::uint64_t seed,
                               std::vector<std::string>& warnings) {
  if (source.num_classes() != target.num_classes())
    throw InputError(spec.name + ": source has " + std::to_string(source.num_classes()) +
                     " classes, target has " + std::to_string(target.num_classes()));
  if (source.features().cols() != target.features().cols())
    throw InputError(spec.name + ": source and target feature dimensions differ");

  const ClassIndexSets groups = class_index_sets(source.labels(), source.num_classes());
  for (int c = 0; c < groups.num_classes(); ++c) {
    const auto have = groups.groups[static_cast<std::size_t>(c)].size();
    if (have < static_cast<std::size_t>(spec.samples_per_class))
      warnings.push_back(spec.name + ": class " + std::to_string(c + 1) + " has only " +
                         std::to_string(have) + " source samples; using all of them");
  }

  const Eigen::Index nt = target.size();
  const auto adapt_count = std::clamp<Eigen::Index>(
      std::lround(spec.target_fraction * static_cast<double>(nt)), 1, nt);

  std::vector<Trial> trials;
  for (int t = 0; t < spec.trials; ++t) {
    std::seed_seq seq{seed, static_cast<std::uint64_t>(t)};
    std::mt19937_64 rng(seq);

    std::vector<Eigen::Index> picked;
    for (auto group : groups.groups) {
      std::shuffle(group.begin(), group.end(), rng);
      group.resize(std::min(group.size(), static_cast<std::size_t>(spec.samples_per_class)));
      picked.insert(picked.end(), group.begin(), group.end());
    }
    std::sort(picked.begin(), picked.end());

    std::vector<Eigen::Index> order(static_cast<std::size_t>(nt));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::shuffle(order.begin(), order.end(), rng);
    const std::span<const Eigen::Index> all(order);
    const auto adapt_rows = all.first(static_cast<std::size_t>(adapt_count));
    const auto held_rows = all.subspan(static_cast<std::size_t>(adapt_count));

    trials.push_back(Trial{
        LabeledDataset(FeatureMatrix(take_rows(source.features().values(), picked)),
                       take_labels(source.labels(), picked)),
        take_rows(target.features().values(), adapt_rows), take_labels(target.labels(), adapt_rows),
        take_rows(target.features().values(), held_rows), take_labels(target.labels(), held_rows)});
  }
  return trials;
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::optional<double> mean_if_any(const std::vector<double>& v) {
  return v.empty() ? std::nullopt : std::optional<double>(mean(v));
}

// Accuracy on both target halves of a classifier trained on `train`.
std::pair<double, std::optional<double>> score(const LabeledDataset& train, const Trial& trial) {
  const double a = accuracy(knn_predict(train, trial.target), trial.target_labels);
  if (trial.heldout_labels.empty()) return {a, std::nullopt};
  return {a, accuracy(knn_predict(train, trial.heldout), trial.heldout_labels)};
}

}  // namespace

ResultRecord run_task_grid(const ExperimentSpec& spec, std::uint64_t seed) {
  spec.validate();
  ResultRecord record;
  record.task = spec.name;

  const LabeledDataset source = load_dataset(spec.source);
  const LabeledDataset target = load_dataset(spec.target);
  const std::vector<Trial> trials = make_trials(spec, source, target, seed, record.warnings);

  for (const auto& trial : trials) {
    const auto [a, h] = score(trial.source, trial);
    record.baseline.push_back(a);
    if (h) record.baseline_heldout.push_back(*h);
  }
  record.baseline_mean = mean(record.baseline);
  record.baseline_heldout_mean = mean_if_any(record.baseline_heldout);

  const auto or_config = [](const auto& grid, auto fallback) {
    using T = decltype(fallback);
    return grid.empty() ? std::vector<T>{fallback} : std::vector<T>(grid.begin(), grid.end());
  };
  const auto lambda2s = or_config(spec.lambda2_grid, spec.config.weights.lambda2);
  const auto lambda3s = or_config(spec.lambda3_grid, spec.config.weights.lambda3);
  const auto rounds = or_config(spec.outer_rounds_grid, spec.config.outer_rounds);
  const int max_rounds = *std::max_element(rounds.begin(), rounds.end());

  bool have_best = false;
  for (const double l2 : lambda2s) {
    for (const double l3 : lambda3s) {
      AdaptationConfig cfg = spec.config;
      cfg.weights.lambda2 = l2;
      cfg.weights.lambda3 = l3;
      cfg.outer_rounds = max_rounds;

      // per_round[r][trial], r = outer round - 1
      std::vector<std::vector<double>> per_round(static_cast<std::size_t>(max_rounds));
      std::vector<std::vector<double>> per_round_held(static_cast<std::size_t>(max_rounds));
      for (std::size_t t = 0; t < trials.size(); ++t) {
        const Trial& trial = trials[t];
        cfg.seed = spec.config.seed * 7919ULL + t;
        adapt(trial.source, FeatureMatrix(trial.target), cfg, [&](int round, const Matrix& mapped) {
          const LabeledDataset train(FeatureMatrix(mapped), trial.source.labels());
          const auto [a, h] = score(train, trial);
          per_round[static_cast<std::size_t>(round - 1)].push_back(a);
          if (h) per_round_held[static_cast<std::size_t>(round - 1)].push_back(*h);
        });
      }

      for (const int r : rounds) {
        const auto& accs = per_round[static_cast<std::size_t>(r - 1)];
        const double m = mean(accs);
        if (!have_best || m > record.adapted_mean) {
          have_best = true;
          record.adapted = accs;
          record.adapted_mean = m;
          record.adapted_heldout = per_round_held[static_cast<std::size_t>(r - 1)];
          record.adapted_heldout_mean = mean_if_any(record.adapted_heldout);
          record.lambda2 = l2;
          record.lambda3 = l3;
          record.outer_rounds = r;
        }
      }
    }
  }
  return record;
}

ResultRecord run_task(const ExperimentSpec& spec, std::uint64_t seed) {
  ExperimentSpec single = spec;
  single.lambda2_grid.clear();
  single.lambda3_grid.clear();
  single.outer_rounds_grid.clear();
  return run_task_grid(single, seed);
}

std::vector<ResultRecord> run_benchmark(const std::vector<ExperimentSpec>& specs, std::uint64_t seed) {
  if (specs.empty()) throw InputError("benchmark needs at least one task");
  std::vector<ResultRecord> results;
  for (const auto& spec : specs) {
    try {
      results.push_back(run_task_grid(spec, seed));
    } catch (const std::exception& e) {
      ResultRecord failed;
      failed.task = spec.name;
      failed.error = e.what();
      results.push_back(std::move(failed));
    }
  }
  std::stable_sort(results.begin(), results.end(),
                   [](const ResultRecord& l, const ResultRecord& r) { return l.task < r.task; });
  return results;
}

namespace {

std::string csv_field(std::string s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void write_result_csv(std::ostream& out, const std::vector<ResultRecord>& results) {
  out << "task,status,na,ours,na_heldout,ours_heldout,lambda2,lambda3,outer_rounds,trials\n";
  const auto opt = [](const std::optional<double>& v) {
    std::ostringstream s;
    if (v) s << std::setprecision(10) << *v;
    return s.str();
  };
  for (const auto& r : results) {
    out << csv_field(r.task) << ',';
    if (r.error) {
      out << csv_field("error: " + *r.error) << ",,,,,,,,\n";
      continue;
    }
    out << "ok," << std::setprecision(10) << r.baseline_mean << ',' << r.adapted_mean << ','
        << opt(r.baseline_heldout_mean) << ',' << opt(r.adapted_heldout_mean) << ',' << r.lambda2
        << ',' << r.lambda3 << ',' << r.outer_rounds << ',' << r.adapted.size() << '\n';
  }
}

void write_result_table(std::ostream& out, const std::vector<ResultRecord>& results) {
  out << std::left << std::setw(16) << "task" << std::right << std::setw(8) << "NA" << std::setw(8)
      << "Ours" << std::setw(12) << "lambda2" << std::setw(12) << "lambda3" << std::setw(5) << "NT"
      << '\n';
  for (const auto& r : results) {
    out << std::left << std::setw(16) << r.task << std::right;
    if (r.error) {
      out << "  ERROR: " << *r.error << '\n';
      continue;
    }
    out << std::fixed << std::setprecision(2) << std::setw(8) << 100.0 * r.baseline_mean
        << std::setw(8) << 100.0 * r.adapted_mean << std::defaultfloat << std::setw(12) << r.lambda2
        << std::setw(12) << r.lambda3 << std::setw(5) << r.outer_rounds << '\n';
  }
}

BenchmarkFile load_benchmark_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  const auto base = path.parent_path();
  const auto resolve = [&base](const std::string& p) {
    const std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };

  try {
    BenchmarkFile file;
    file.seed = doc.value("seed", std::uint64_t{0});

    AdaptationConfig cfg;
    const auto a = doc.value("adaptation", nlohmann::json::object());
    cfg.eta = a.value("eta", cfg.eta);
    cfg.weights.lambda2 = a.value("lambda2", cfg.weights.lambda2);
    cfg.weights.lambda3 = a.value("lambda3", cfg.weights.lambda3);
    cfg.weights.lambda_g = a.value("lambda_g", cfg.weights.lambda_g);
    cfg.outer_rounds = a.value("outer_rounds", cfg.outer_rounds);
    cfg.cg.iterations = a.value("cg_iters", cfg.cg.iterations);
    cfg.cg.admm.iterations = a.value("admm_iters", cfg.cg.admm.iterations);
    cfg.cg.warm_start = !a.value("cold_start", false);
    cfg.cg.admm.round_to_polytope = !a.value("raw_lp", false);
    cfg.ridge = a.value("ridge", cfg.ridge);
    cfg.tensor.triangles_per_node = a.value("triangles_per_node", cfg.tensor.triangles_per_node);
    cfg.tensor.pool_factor = a.value("pool_factor", cfg.tensor.pool_factor);
    cfg.tensor.nearest = a.value("nearest", cfg.tensor.nearest);
    cfg.seed = a.value("seed", file.seed);

    const auto grid = doc.value("grid", nlohmann::json::object());
    const auto lambda2s = grid.value("lambda2", std::vector<double>{});
    const auto lambda3s = grid.value("lambda3", std::vector<double>{});
    const auto rounds = grid.value("outer_rounds", std::vector<int>{});

    const int trials = doc.value("trials", 10);
    const double fraction = doc.value("target_fraction", 0.5);

    if (!doc.contains("tasks") || !doc["tasks"].is_array())
      throw InputError(path.string() + ": missing 'tasks' array");
    for (const auto& t : doc["tasks"]) {
      ExperimentSpec spec;
      spec.name = t.at("name").get<std::string>();
      spec.source = {resolve(t.at("source_features").get<std::string>()),
                     resolve(t.at("source_labels").get<std::string>())};
      spec.target = {resolve(t.at("target_features").get<std::string>()),
                     resolve(t.at("target_labels").get<std::string>())};
      spec.samples_per_class = t.value(
          "samples_per_class",
          doc.value("samples_per_class", default_samples_per_class(t.value("source_is_dslr", false))));
      if (t.value("source_is_dslr", false) && !t.contains("samples_per_class"))
        spec.samples_per_class = default_samples_per_class(true);
      spec.target_fraction = fraction;
      spec.trials = t.value("trials", trials);
      spec.config = cfg;
      spec.lambda2_grid = lambda2s;
      spec.lambda3_grid = lambda3s;
      spec.outer_rounds_grid = rounds;
      file.tasks.push_back(std::move(spec));
    }
    return file;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

}  // namespace hgda
