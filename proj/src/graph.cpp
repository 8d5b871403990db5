#include "hgda/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <tuple>

namespace hgda {

void TensorSampling::validate() const {
  if (triangles_per_node < 1 || pool_factor < 1 || nearest < 1)
    throw InputError("tensor sampling counts must be >= 1");
}

double sigma_heuristic(const FeatureMatrix& x) {
  const Eigen::Index n = x.rows();
  if (n < 2) throw InputError("bandwidth heuristic needs at least two samples");
  const Matrix& v = x.values();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) sum += (v.row(i) - v.row(j)).norm();
  const double sigma = sum / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
  if (!(sigma > 0.0)) throw NumericalError("degenerate: zero bandwidth (all samples coincide)");
  return sigma;
}

AdjacencyMatrix adjacency_matrix(const FeatureMatrix& x, double sigma) {
  if (!(sigma > 0.0)) throw InputError("adjacency bandwidth must be positive");
  const Eigen::Index n = x.rows();
  const Matrix& v = x.values();
  AdjacencyMatrix adj{Matrix::Zero(n, n), sigma};
  const double inv = 1.0 / (sigma * sigma);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double w = std::exp(-(v.row(i) - v.row(j)).squaredNorm() * inv);
      adj.values(i, j) = w;
      adj.values(j, i) = w;
    }
  return adj;
}

namespace {

// Twice the triangle area from its side lengths (Kahan's stable Heron form).
double double_area(double ab, double bc, double ca) {
  std::array<double, 3> s{ab, bc, ca};
  std::sort(s.begin(), s.end(), std::greater<>());
  const double a = s[0], b = s[1], c = s[2];
  const double prod = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));
  return 0.5 * std::sqrt(std::max(prod, 0.0));
}

std::optional<TriangleFeature> try_triangle_feature(Eigen::Ref<const Vector> a,
                                                    Eigen::Ref<const Vector> b,
                                                    Eigen::Ref<const Vector> c) {
  const double ab = (a - b).norm();
  const double bc = (b - c).norm();
  const double ca = (c - a).norm();
  if (ab == 0.0 || bc == 0.0 || ca == 0.0) return std::nullopt;
  const double area2 = double_area(ab, bc, ca);
  const auto clamp01 = [](double v) { return std::clamp(v, 0.0, 1.0); };
  return TriangleFeature{clamp01(area2 / (ab * ca)), clamp01(area2 / (ab * bc)),
                         clamp01(area2 / (ca * bc))};
}

struct Triangle {
  std::array<int, 3> vertices;
  TriangleFeature feature;
};

std::optional<Triangle> sample_triangle(const Matrix& x, int first, std::mt19937_64& rng) {
  const int n = static_cast<int>(x.rows());
  std::uniform_int_distribution<int> pick(0, n - 1);
  int v0 = first >= 0 ? first : pick(rng);
  int v1 = v0, v2 = v0;
  while (v1 == v0) v1 = pick(rng);
  while (v2 == v0 || v2 == v1) v2 = pick(rng);
  const auto f = try_triangle_feature(x.row(v0).transpose(), x.row(v1).transpose(),
                                      x.row(v2).transpose());
  if (!f) return std::nullopt;
  return Triangle{{v0, v1, v2}, *f};
}

constexpr int kAttemptsPerTriangle = 10;

}  // namespace

TriangleFeature triangle_feature(Eigen::Ref<const Vector> a, Eigen::Ref<const Vector> b,
                                 Eigen::Ref<const Vector> c) {
  if (a.size() != b.size() || a.size() != c.size())
    throw InputError("triangle vertices differ in dimension");
  auto f = try_triangle_feature(a, b, c);
  if (!f) throw InputError("triangle has coincident vertices");
  return *f;
}

double feature_distance2(const TriangleFeature& f, const TriangleFeature& g) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i) s += (f[i] - g[i]) * (f[i] - g[i]);
  return s;
}

double gamma_heuristic(std::span<const double> squared_distances) {
  if (squared_distances.empty()) throw InputError("gamma heuristic needs a non-empty sample");
  const double mean = std::accumulate(squared_distances.begin(), squared_distances.end(), 0.0) /
                      static_cast<double>(squared_distances.size());
  return mean > 0.0 ? 1.0 / mean : 1.0;
}

SparseTensor3 build_sparse_tensor(const FeatureMatrix& xs, const FeatureMatrix& xt,
                                  const TensorSampling& sampling) {
  sampling.validate();
  const int ns = static_cast<int>(xs.rows());
  const int nt = static_cast<int>(xt.rows());
  if (ns < 3 || nt < 3) throw InputError("tensor needs at least 3 points per domain");
  if (xs.cols() != xt.cols()) throw InputError("source and target dimensions differ");

  // Target pool shared by all source triangles.
  std::vector<Triangle> pool;
  {
    std::seed_seq seq{sampling.seed, std::uint64_t{0x7a26e7}};
    std::mt19937_64 rng(seq);
    const int wanted = sampling.pool_factor * nt;
    for (int attempt = 0; attempt < wanted * kAttemptsPerTriangle &&
                          static_cast<int>(pool.size()) < wanted;
         ++attempt)
      if (auto t = sample_triangle(xt.values(), -1, rng)) pool.push_back(*t);
  }
  if (pool.empty()) throw NumericalError("degenerate target domain: no valid triangles");

  struct Match {
    std::array<int, 3> source;
    std::array<int, 3> target;
    double distance2;
  };
  std::vector<Match> matches;
  const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(sampling.nearest), pool.size());
  std::vector<std::size_t> order(pool.size());
  std::vector<double> dist(pool.size());

  for (int node = 0; node < ns; ++node) {
    std::seed_seq seq{sampling.seed, static_cast<std::uint64_t>(node) + 1};
    std::mt19937_64 rng(seq);
    int made = 0;
    for (int attempt = 0; attempt < sampling.triangles_per_node * kAttemptsPerTriangle &&
                          made < sampling.triangles_per_node;
         ++attempt) {
      const auto tri = sample_triangle(xs.values(), node, rng);
      if (!tri) continue;
      ++made;
      for (std::size_t p = 0; p < pool.size(); ++p) dist[p] = feature_distance2(tri->feature, pool[p].feature);
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                        [&](std::size_t l, std::size_t r) {
                          return dist[l] < dist[r] || (dist[l] == dist[r] && l < r);
                        });
      for (std::size_t q = 0; q < keep; ++q)
        matches.push_back({tri->vertices, pool[order[q]].vertices, dist[order[q]]});
    }
  }
  if (matches.empty()) throw NumericalError("degenerate source domain: no valid triangles");

  std::vector<double> d2(matches.size());
  std::transform(matches.begin(), matches.end(), d2.begin(), [](const Match& m) { return m.distance2; });

  SparseTensor3 tensor;
  tensor.source_nodes = ns;
  tensor.target_nodes = nt;
  tensor.gamma = gamma_heuristic(d2);
  tensor.entries.reserve(matches.size() * 6);
  for (const auto& m : matches) {
    TensorEntry e;
    for (int s = 0; s < 3; ++s) e.slots[s] = {m.source[s], m.target[s]};
    e.value = std::exp(-tensor.gamma * m.distance2);
    tensor.entries.push_back(e);
  }
  symmetrize(tensor);
  return tensor;
}

void symmetrize(SparseTensor3& tensor) {
  static constexpr std::array<std::array<int, 3>, 6> kPerms{
      {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
  const auto key = [&tensor](const TensorEntry& e) {
    return std::make_tuple(tensor.flat(e.slots[0]), tensor.flat(e.slots[1]), tensor.flat(e.slots[2]));
  };
  const auto by_key = [&](const TensorEntry& l, const TensorEntry& r) { return key(l) < key(r); };
  const auto same_key = [&](const TensorEntry& l, const TensorEntry& r) { return key(l) == key(r); };

  // Collapse each orbit to its sorted representative first.
  auto& base = tensor.entries;
  for (auto& e : base)
    std::sort(e.slots.begin(), e.slots.end(), [&tensor](const CandidatePair& l, const CandidatePair& r) {
      return tensor.flat(l) < tensor.flat(r);
    });
  std::sort(base.begin(), base.end(), by_key);
  base.erase(std::unique(base.begin(), base.end(), same_key), base.end());

  std::vector<TensorEntry> all;
  all.reserve(base.size() * 6);
  for (const auto& e : base)
    for (const auto& p : kPerms) all.push_back({{e.slots[p[0]], e.slots[p[1]], e.slots[p[2]]}, e.value});
  std::vector<TensorEntry>().swap(base);
  std::sort(all.begin(), all.end(), by_key);
  all.erase(std::unique(all.begin(), all.end(), same_key), all.end());
  tensor.entries = std::move(all);
}

void write_tensor_csv(const std::filesystem::path& path, const SparseTensor3& tensor) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "is,it,js,jt,ks,kt,value\n";
  char buf[40];
  for (const auto& e : tensor.entries) {
    for (const auto& s : e.slots) out << s.source << ',' << s.target << ',';
    std::snprintf(buf, sizeof buf, "%.17g", e.value);
    out << buf << '\n';
  }
}

}  // namespace hgda
