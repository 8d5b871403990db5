#pragma once

#include "hgda/data.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>

namespace hgda {

/// Gaussian-kernel graph over samples: symmetric, zero diagonal, entries in [0,1].
struct AdjacencyMatrix {
  Matrix values;
  double sigma = 0.0;
};

/// Sines of the interior angles at the three vertices, in the order given.
using TriangleFeature = std::array<double, 3>;

/// A candidate match (source row, target row); its flat index into the
/// vectorized matching matrix is source * n_t + target.
struct CandidatePair {
  int source = 0;
  int target = 0;

  friend bool operator==(const CandidatePair&, const CandidatePair&) = default;
};

struct TensorEntry {
  std::array<CandidatePair, 3> slots;
  double value = 0.0;
};

/// Third-order similarity over candidate pairs, stored sparsely. The entry
/// list is closed under the 6 permutations of the slots (equal values).
struct SparseTensor3 {
  std::vector<TensorEntry> entries;
  double gamma = 1.0;
  int source_nodes = 0;
  int target_nodes = 0;

  std::size_t size() const { return entries.size(); }
  std::size_t flat(const CandidatePair& p) const {
    return static_cast<std::size_t>(p.source) * static_cast<std::size_t>(target_nodes) +
           static_cast<std::size_t>(p.target);
  }
};

struct TensorSampling {
  int triangles_per_node = 50;
  /// Target pool size is pool_factor * n_t random target triangles.
  int pool_factor = 20;
  int nearest = 300;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Mean Euclidean distance over all unordered pairs.
double sigma_heuristic(const FeatureMatrix& x);

AdjacencyMatrix adjacency_matrix(const FeatureMatrix& x, double sigma);

/// Throws InputError if two of the points coincide. Collinear triples give (0,0,0).
TriangleFeature triangle_feature(Eigen::Ref<const Vector> a, Eigen::Ref<const Vector> b,
                                 Eigen::Ref<const Vector> c);

double feature_distance2(const TriangleFeature& f, const TriangleFeature& g);

/// 1 / mean of the squared feature distances; 1 when that mean is zero.
double gamma_heuristic(std::span<const double> squared_distances);

SparseTensor3 build_sparse_tensor(const FeatureMatrix& xs, const FeatureMatrix& xt,
                                  const TensorSampling& sampling);

/// Adds the 6 slot permutations of each entry and drops duplicate coordinates.
void symmetrize(SparseTensor3& tensor);

/// CSV dump: is,it,js,jt,ks,kt,value (0-based rows).
void write_tensor_csv(const std::filesystem::path& path, const SparseTensor3& tensor);

}  // namespace hgda
