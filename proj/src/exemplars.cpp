#include "hgda/exemplars.hpp"

#include <cmath>
#include <limits>

namespace hgda {

void APConfig::validate() const {
  if (!(damping >= 0.0 && damping < 1.0)) throw InputError("AP damping must lie in [0,1)");
  if (max_iterations < 1 || stability_window < 1 || bisection_steps < 1)
    throw InputError("AP iteration counts must be >= 1");
  if (count_tolerance && *count_tolerance < 0) throw InputError("AP count tolerance must be >= 0");
}

SimilarityMatrix similarity_matrix(const FeatureMatrix& x, double preference) {
  const Eigen::Index n = x.rows();
  const Matrix& v = x.values();
  SimilarityMatrix s{Matrix(n, n), preference};
  for (Eigen::Index i = 0; i < n; ++i) {
    s.values(i, i) = preference;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d2 = (v.row(i) - v.row(j)).squaredNorm();
      s.values(i, j) = -d2;
      s.values(j, i) = -d2;
    }
  }
  return s;
}

namespace {

std::vector<Eigen::Index> current_exemplars(const Matrix& r, const Matrix& a) {
  std::vector<Eigen::Index> out;
  for (Eigen::Index k = 0; k < r.rows(); ++k)
    if (r(k, k) + a(k, k) > 0.0) out.push_back(k);
  return out;
}

// Medoid under the off-diagonal similarities; lowest index on ties.
Eigen::Index best_single_exemplar(const Matrix& s) {
  Eigen::Index best = 0;
  double best_sum = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < s.cols(); ++k) {
    const double sum = s.col(k).sum() - s(k, k);
    if (sum > best_sum) {
      best_sum = sum;
      best = k;
    }
  }
  return best;
}

}  // namespace

ExemplarSet affinity_propagation(const SimilarityMatrix& sim, const APConfig& cfg) {
  cfg.validate();
  const Matrix& s = sim.values;
  const Eigen::Index n = s.rows();
  if (n < 1 || s.cols() != n) throw InputError("similarity matrix must be square and non-empty");

  ExemplarSet result;
  result.diagnostics.preference = sim.preference;
  if (n == 1) {
    result.indices = {0};
    result.diagnostics.converged = true;
    return result;
  }

  const double damp = cfg.damping;
  Matrix r = Matrix::Zero(n, n);
  Matrix a = Matrix::Zero(n, n);
  Vector column_sums(n);

  std::vector<Eigen::Index> exemplars;
  std::vector<Eigen::Index> last_nonempty;
  int stable = 0;
  int it = 0;
  for (it = 1; it <= cfg.max_iterations; ++it) {
    // Responsibilities: r(i,k) = s(i,k) - max_{k' != k} (a(i,k') + s(i,k')).
    for (Eigen::Index i = 0; i < n; ++i) {
      double first = -std::numeric_limits<double>::infinity();
      double second = first;
      Eigen::Index first_idx = 0;
      for (Eigen::Index k = 0; k < n; ++k) {
        const double v = a(i, k) + s(i, k);
        if (v > first) {
          second = first;
          first = v;
          first_idx = k;
        } else if (v > second) {
          second = v;
        }
      }
      for (Eigen::Index k = 0; k < n; ++k) {
        const double fresh = s(i, k) - (k == first_idx ? second : first);
        r(i, k) = damp * r(i, k) + (1.0 - damp) * fresh;
      }
    }

    // Availabilities from the positive responsibilities of each column.
    for (Eigen::Index k = 0; k < n; ++k) {
      double sum = r(k, k);
      for (Eigen::Index i = 0; i < n; ++i)
        if (i != k) sum += std::max(r(i, k), 0.0);
      column_sums(k) = sum;
    }
    for (Eigen::Index k = 0; k < n; ++k) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const double fresh = i == k ? column_sums(k) - r(k, k)
                                    : std::min(0.0, column_sums(k) - std::max(r(i, k), 0.0));
        a(i, k) = damp * a(i, k) + (1.0 - damp) * fresh;
      }
    }

    auto now = current_exemplars(r, a);
    if (now == exemplars) {
      ++stable;
    } else {
      stable = 0;
      exemplars = std::move(now);
    }
    if (!exemplars.empty()) last_nonempty = exemplars;
    if (stable >= cfg.stability_window && !exemplars.empty()) {
      result.diagnostics.converged = true;
      break;
    }
  }
  result.diagnostics.iterations = std::min(it, cfg.max_iterations);

  result.indices = !exemplars.empty() ? exemplars : last_nonempty;
  if (result.indices.empty()) result.indices = {best_single_exemplar(s)};
  return result;
}

namespace {

ExemplarSet all_rows(const FeatureMatrix& x) {
  ExemplarSet set;
  set.indices.resize(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) set.indices[static_cast<std::size_t>(i)] = i;
  set.features = x.values();
  set.diagnostics.converged = true;
  return set;
}

}  // namespace

ExemplarSet select_exemplars(const FeatureMatrix& x, double eta, const APConfig& cfg) {
  if (!(eta > 0.0 && eta <= 1.0)) throw InputError("eta must lie in (0,1]");
  cfg.validate();
  const Eigen::Index n = x.rows();
  if (eta == 1.0 || n == 1) return all_rows(x);

  const auto target = std::max<long>(1, std::lround(eta * static_cast<double>(n)));
  const long tolerance =
      cfg.count_tolerance ? *cfg.count_tolerance
                          : std::max<long>(1, std::lround(0.02 * static_cast<double>(n)));

  SimilarityMatrix sim = similarity_matrix(x, 0.0);
  double min_off = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j) min_off = std::min(min_off, sim.values(i, j));
  if (min_off == 0.0) min_off = -1.0;  // every point coincides

  double lo = 2.0 * min_off;
  double hi = 0.0;
  ExemplarSet best;
  long best_miss = std::numeric_limits<long>::max();
  int steps = 0;
  while (steps < cfg.bisection_steps) {
    ++steps;
    const double mid = 0.5 * (lo + hi);
    sim.preference = mid;
    sim.values.diagonal().setConstant(mid);
    ExemplarSet trial = affinity_propagation(sim, cfg);
    const long count = static_cast<long>(trial.indices.size());
    const long miss = std::labs(count - target);
    if (miss < best_miss) {
      best_miss = miss;
      best = std::move(trial);
    }
    if (miss <= tolerance) break;
    if (count < target)
      lo = mid;
    else
      hi = mid;
  }
  best.diagnostics.bisection_steps = steps;
  best.features = x.select_rows(best.indices).values();
  return best;
}

ExemplarSet select_source_exemplars(const LabeledDataset& source, double eta, const APConfig& cfg) {
  ExemplarSet set = select_exemplars(source.features(), eta, cfg);
  set.labels.reserve(set.indices.size());
  for (const auto i : set.indices) set.labels.push_back(source.labels()[static_cast<std::size_t>(i)]);
  return set;
}

}  // namespace hgda
