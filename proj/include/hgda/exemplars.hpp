#pragma once

#include "hgda/data.hpp"

#include <optional>

namespace hgda {

/// Negated squared distances off the diagonal, shared preference on it.
struct SimilarityMatrix {
  Matrix values;
  double preference = 0.0;
};

struct APConfig {
  double damping = 0.5;
  int max_iterations = 500;
  /// Iterations with an unchanged exemplar set before declaring convergence.
  int stability_window = 50;
  int bisection_steps = 20;
  /// Accepted |count - target|; unset means max(1, round(0.02 n)).
  std::optional<int> count_tolerance;

  void validate() const;
};

struct APDiagnostics {
  bool converged = false;
  int iterations = 0;
  double preference = 0.0;
  int bisection_steps = 0;
};

struct ExemplarSet {
  std::vector<Eigen::Index> indices;  // strictly increasing rows of the input
  Matrix features;
  Labels labels;  // only filled by select_source_exemplars
  APDiagnostics diagnostics;

  Eigen::Index size() const { return static_cast<Eigen::Index>(indices.size()); }
};

SimilarityMatrix similarity_matrix(const FeatureMatrix& x, double preference);

/// Responsibility/availability message passing with damping. Deterministic.
/// `features` of the result are left empty; select_exemplars fills them.
ExemplarSet affinity_propagation(const SimilarityMatrix& s, const APConfig& cfg);

/// Bisects the preference until about round(eta * n) exemplars emerge.
/// eta == 1 returns every row untouched.
ExemplarSet select_exemplars(const FeatureMatrix& x, double eta, const APConfig& cfg);

/// select_exemplars on the features, carrying the labels of chosen rows.
ExemplarSet select_source_exemplars(const LabeledDataset& source, double eta, const APConfig& cfg);

}  // namespace hgda
