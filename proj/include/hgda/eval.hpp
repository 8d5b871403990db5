#pragma once

#include "hgda/pipeline.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace hgda {

/// 1-NN by Euclidean distance; ties go to the lowest training index.
Labels knn_predict(const LabeledDataset& train, const Matrix& test);

double accuracy(const Labels& predicted, const Labels& truth);

struct DatasetPaths {
  std::filesystem::path features;
  std::filesystem::path labels;
};

LabeledDataset load_dataset(const DatasetPaths& paths);

/// One source -> target task under the sampling protocol.
struct ExperimentSpec {
  std::string name;
  DatasetPaths source;
  DatasetPaths target;
  int samples_per_class = 20;
  double target_fraction = 0.5;
  int trials = 10;
  AdaptationConfig config;
  /// Searched values; an empty list means "use the value in config".
  std::vector<double> lambda2_grid;
  std::vector<double> lambda3_grid;
  std::vector<int> outer_rounds_grid;

  void validate() const;
};

/// Per-class quota used for a source domain: 8 for DSLR, 20 otherwise.
int default_samples_per_class(bool source_is_dslr);

struct ResultRecord {
  std::string task;
  std::vector<double> adapted;          // per trial, adaptation half of the target
  std::vector<double> adapted_heldout;  // per trial, unused half (empty if none)
  std::vector<double> baseline;         // NA per trial, adaptation half
  std::vector<double> baseline_heldout;
  double adapted_mean = 0.0;
  double baseline_mean = 0.0;
  std::optional<double> adapted_heldout_mean;
  std::optional<double> baseline_heldout_mean;
  double lambda2 = 0.0;
  double lambda3 = 0.0;
  int outer_rounds = 0;
  std::vector<std::string> warnings;
  std::optional<std::string> error;  // set when the task failed
};

/// Runs the trials with spec.config only (no grid).
ResultRecord run_task(const ExperimentSpec& spec, std::uint64_t seed);

/// Runs the trials for every grid cell and keeps the best mean accuracy.
ResultRecord run_task_grid(const ExperimentSpec& spec, std::uint64_t seed);

/// Tasks are isolated: a failing task yields a record with `error` set.
std::vector<ResultRecord> run_benchmark(const std::vector<ExperimentSpec>& specs, std::uint64_t seed);

/// task,status,na,ours,na_heldout,ours_heldout,lambda2,lambda3,outer_rounds,trials
void write_result_csv(std::ostream& out, const std::vector<ResultRecord>& results);
void write_result_table(std::ostream& out, const std::vector<ResultRecord>& results);

struct BenchmarkFile {
  std::vector<ExperimentSpec> tasks;
  std::uint64_t seed = 0;
};

/// JSON benchmark description; relative paths resolve against the file's directory.
BenchmarkFile load_benchmark_file(const std::filesystem::path& path);

}  // namespace hgda
