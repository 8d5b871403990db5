#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace hgda {

/// Malformed or inconsistent user input (files, dimensions, parameters).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A non-finite value appeared, or a numerical precondition collapsed.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Labels = std::vector<int>;

/// n x d sample matrix, one sample per row. Never empty, always finite.
class FeatureMatrix {
 public:
  explicit FeatureMatrix(Matrix values);

  const Matrix& values() const { return values_; }
  Eigen::Index rows() const { return values_.rows(); }
  Eigen::Index cols() const { return values_.cols(); }
  auto row(Eigen::Index i) const { return values_.row(i); }

  /// Rows at the given indices, in that order.
  FeatureMatrix select_rows(const std::vector<Eigen::Index>& indices) const;

 private:
  Matrix values_;
};

/// Features plus labels in {1..C}, every class present at least once.
class LabeledDataset {
 public:
  LabeledDataset(FeatureMatrix features, Labels labels);

  const FeatureMatrix& features() const { return features_; }
  const Labels& labels() const { return labels_; }
  int num_classes() const { return num_classes_; }
  Eigen::Index size() const { return features_.rows(); }

 private:
  FeatureMatrix features_;
  Labels labels_;
  int num_classes_;
};

/// groups[c-1] holds the (0-based) rows with label c. Groups may be empty when
/// built for a subset of a dataset.
struct ClassIndexSets {
  std::vector<std::vector<Eigen::Index>> groups;

  int num_classes() const { return static_cast<int>(groups.size()); }
};

FeatureMatrix load_features(const std::filesystem::path& path);
void write_features(const std::filesystem::path& path, const Matrix& values);

/// Returns the labels and stores the inferred class count in `num_classes`.
Labels load_labels(const std::filesystem::path& path, Eigen::Index num_rows,
                   int& num_classes);
void write_labels(const std::filesystem::path& path, const Labels& labels);

/// Requires labels in 1..C with 1..max(labels) all present; returns C.
int validate_labels(const Labels& labels);

ClassIndexSets class_index_sets(const Labels& labels, int num_classes);

/// Throws NumericalError naming `what` if any entry is NaN/Inf.
void require_finite(const Matrix& m, const std::string& what);

}  // namespace hgda
