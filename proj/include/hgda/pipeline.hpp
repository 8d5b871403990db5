#pragma once

#include "hgda/exemplars.hpp"
#include "hgda/graph.hpp"
#include "hgda/solver.hpp"

#include <cstdint>
#include <functional>

namespace hgda {

struct AdaptationConfig {
  double eta = 1.0;
  ObjectiveWeights weights{0.0, 0.0, 0.01};
  int outer_rounds = 1;
  CgOptions cg;
  TensorSampling tensor;
  APConfig ap;
  double ridge = 1e-3;
  std::uint64_t seed = 0;
  /// Target exemplars are computed once; the target never moves.
  bool cache_target_exemplars = true;

  void validate() const;
};

/// Affine row map x -> x W + b.
struct LinearMap {
  Matrix weights;  // d x d
  Vector bias;     // d

  Matrix apply(const Matrix& x) const;
};

/// Minimizes ||X W + 1 b' - Y||_F^2 + ridge ||W||_F^2 (bias unpenalized).
LinearMap fit_ridge_mapping(const Matrix& inputs, const Matrix& targets, double ridge);

struct RoundDiagnostics {
  int round = 0;
  std::vector<Eigen::Index> source_exemplars;
  std::vector<Eigen::Index> target_exemplars;
  APDiagnostics source_ap;
  APDiagnostics target_ap;
  double sigma_source = 0.0;  // 0 when the second-order term is off
  double sigma_target = 0.0;
  double gamma = 0.0;          // 0 when the third-order term is off
  std::size_t tensor_entries = 0;
  CgDiagnostics cg;
};

struct AdaptationResult {
  Matrix adapted_source;  // every source row, mapped
  Matrix matching;        // last C*, source exemplars x target exemplars
  std::vector<RoundDiagnostics> rounds;
  /// Tensor of the last round, empty when the third-order term is off.
  SparseTensor3 last_tensor;
};

/// Called after each outer round with the 1-based round and the mapped source.
using RoundObserver = std::function<void(int, const Matrix&)>;

AdaptationResult adapt(const LabeledDataset& source, const FeatureMatrix& target,
                       const AdaptationConfig& cfg, const RoundObserver& observer = {});

void to_json(nlohmann::json& j, const RoundDiagnostics& r);

}  // namespace hgda
