#pragma once

#include "hgda/objective.hpp"

#include <nlohmann/json_fwd.hpp>

namespace hgda {

/// Row sums a and column sums b of the matching polytope.
struct Marginals {
  Vector rows;
  Vector cols;

  /// a = 1, b = (n_s / n_t) 1.
  static Marginals uniform(Eigen::Index ns, Eigen::Index nt);
};

/// Maximum violation of the row/column sums, and the most negative entry.
struct Feasibility {
  double row_residual = 0.0;
  double col_residual = 0.0;
  double min_entry = 0.0;

  double marginal_residual() const { return std::max(row_residual, col_residual); }
};

Feasibility feasibility(const Matrix& c, const Marginals& m);

/// Uniform feasible start: every entry 1 / n_t.
Matrix uniform_matching(Eigen::Index ns, Eigen::Index nt);

/// Consensus ADMM blocks for min Tr(G'C) over the transportation polytope,
/// penalty fixed at 1. C1 enforces the row sums, C2 the column sums, C3 the
/// sign constraint; Z is the consensus and Y1..Y3 the scaled duals.
struct AdmmState {
  Matrix c1, c2, c3, z, y1, y2, y3;
  long iterations = 0;

  /// Z at the uniform matching, all duals zero.
  static AdmmState cold(Eigen::Index ns, Eigen::Index nt);
};

struct AdmmOptions {
  int iterations = 300;
  /// Center G and rescale it to standard deviation gradient_scale / n_t before
  /// the sweeps. The minimizer over the polytope is unchanged by this.
  bool normalize_gradient = true;
  double gradient_scale = 16.0;
  /// Move the clamped Z onto the polytope with round_to_marginals. A fixed
  /// sweep budget leaves marginal residuals of 1e-2 and more on non-square
  /// shapes; rounding makes every returned direction exactly feasible.
  bool round_to_polytope = true;
};

/// One sweep of the closed-form block updates on an already scaled G.
void admm_sweep(const Matrix& g, const Marginals& m, AdmmState& s);

/// Nearby point of the polytope: rows and columns above their marginal are
/// scaled down, then the remaining deficits are added as a rank-one
/// correction. Exact marginals, non-negative, and the L1 move is at most twice
/// the L1 marginal violation of max(F, 0).
Matrix round_to_marginals(const Matrix& f, const Marginals& m);

/// Runs the fixed sweep budget, continuing from `state`, and returns Z with
/// negative entries clamped to 0 (then rounded when opts.round_to_polytope).
Matrix admm_lp(const Matrix& g, const Marginals& m, const AdmmOptions& opts, AdmmState& state);
Matrix admm_lp(const Matrix& g, const Marginals& m, const AdmmOptions& opts = {});

/// Tr(G'(C - C_d)).
double fw_gap(const Matrix& g, const Matrix& c, const Matrix& c_direction);

struct CgOptions {
  int iterations = 20;
  AdmmOptions admm;
  bool warm_start = true;
};

struct CgDiagnostics {
  std::vector<double> objective;  // objective[0] at C0, then after each step
  std::vector<double> gap;        // FW gap at the iterate each step started from
  double final_gap = 0.0;         // gap at the returned C
  double max_marginal_residual = 0.0;  // over all iterates
  double min_entry = 0.0;              // over all iterates
  double wall_seconds = 0.0;
};

struct CgResult {
  Matrix matching;
  CgDiagnostics diagnostics;
};

/// Frank-Wolfe with step 2 / (t + 2), t = 1, 2, ..., linear subproblems by ADMM.
CgResult cg_solve(const ObjectiveContext& ctx, const ObjectiveWeights& w, const Matrix& c0,
                  const CgOptions& opts = {});

void to_json(nlohmann::json& j, const CgDiagnostics& d);

}  // namespace hgda
