#include "hgda/solver.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>

namespace hgda {

Marginals Marginals::uniform(Eigen::Index ns, Eigen::Index nt) {
  return {Vector::Ones(ns),
          Vector::Constant(nt, static_cast<double>(ns) / static_cast<double>(nt))};
}

Feasibility feasibility(const Matrix& c, const Marginals& m) {
  return {(c.rowwise().sum() - m.rows).cwiseAbs().maxCoeff(),
          (c.colwise().sum().transpose() - m.cols).cwiseAbs().maxCoeff(), c.minCoeff()};
}

Matrix uniform_matching(Eigen::Index ns, Eigen::Index nt) {
  return Matrix::Constant(ns, nt, 1.0 / static_cast<double>(nt));
}

AdmmState AdmmState::cold(Eigen::Index ns, Eigen::Index nt) {
  AdmmState s;
  s.z = uniform_matching(ns, nt);
  s.c1 = s.c2 = s.c3 = s.z;
  s.y1 = s.y2 = s.y3 = Matrix::Zero(ns, nt);
  return s;
}

void admm_sweep(const Matrix& g, const Marginals& m, AdmmState& s) {
  const double ns = static_cast<double>(g.rows());
  const double nt = static_cast<double>(g.cols());

  // C1 = W - (1/n_t)(W 1 - a) 1',  W = Z - G/2 - Y1
  s.c1 = s.z - 0.5 * g - s.y1;
  const Vector row_excess = (s.c1.rowwise().sum() - m.rows) / nt;
  s.c1.colwise() -= row_excess;

  // C2 = W - (1/n_s) 1 (1'W - b'),  W = Z - G/2 - Y2
  s.c2 = s.z - 0.5 * g - s.y2;
  const Eigen::RowVectorXd col_excess = (s.c2.colwise().sum() - m.cols.transpose()) / ns;
  s.c2.rowwise() -= col_excess;

  s.c3 = (s.z - s.y3).cwiseMax(0.0);

  s.z = (s.c1 + s.c2 + s.c3) / 3.0;
  s.y1 += s.c1 - s.z;
  s.y2 += s.c2 - s.z;
  s.y3 += s.c3 - s.z;
  ++s.iterations;
}

namespace {

// The polytope fixes the total mass, so a constant shift and a positive scale
// of G leave the minimizer unchanged. Normalizing puts the G/2 tilt at a fixed
// multiple of a typical feasible entry (1 / n_t) regardless of gradient scale.
Matrix scaled_gradient(const Matrix& g, const AdmmOptions& opts) {
  if (!opts.normalize_gradient) return g;
  const Matrix centered = g.array() - g.mean();
  const double sd = std::sqrt(centered.squaredNorm() / static_cast<double>(g.size()));
  if (!(sd > 0.0)) return Matrix::Zero(g.rows(), g.cols());
  return centered * (opts.gradient_scale / (static_cast<double>(g.cols()) * sd));
}

}  // namespace

Matrix round_to_marginals(const Matrix& f, const Marginals& m) {
  if (m.rows.size() != f.rows() || m.cols.size() != f.cols())
    throw InputError("marginals do not match the matrix shape");
  Matrix out = f.cwiseMax(0.0);
  const auto shrink = [](double have, double want) { return have > want ? want / have : 1.0; };
  const Vector rows = out.rowwise().sum();
  for (Eigen::Index i = 0; i < out.rows(); ++i) out.row(i) *= shrink(rows(i), m.rows(i));
  const Vector cols = out.colwise().sum().transpose();
  for (Eigen::Index j = 0; j < out.cols(); ++j) out.col(j) *= shrink(cols(j), m.cols(j));
  // Both deficits are non-negative with equal totals.
  const Vector row_deficit = (m.rows - out.rowwise().sum()).cwiseMax(0.0);
  const Vector col_deficit = (m.cols - out.colwise().sum().transpose()).cwiseMax(0.0);
  const double mass = row_deficit.sum();
  if (mass > 0.0) out += row_deficit * col_deficit.transpose() / mass;
  return out;
}

Matrix admm_lp(const Matrix& g, const Marginals& m, const AdmmOptions& opts, AdmmState& state) {
  if (m.rows.size() != g.rows() || m.cols.size() != g.cols())
    throw InputError("marginals do not match the gradient shape");
  if (state.z.rows() != g.rows() || state.z.cols() != g.cols())
    throw InputError("ADMM state does not match the gradient shape");
  if (opts.iterations < 1) throw InputError("ADMM needs at least one iteration");
  require_finite(g, "LP cost matrix");

  const Matrix scaled = scaled_gradient(g, opts);
  for (int k = 0; k < opts.iterations; ++k) admm_sweep(scaled, m, state);
  require_finite(state.z, "ADMM iterate");
  return opts.round_to_polytope ? round_to_marginals(state.z, m) : Matrix(state.z.cwiseMax(0.0));
}

Matrix admm_lp(const Matrix& g, const Marginals& m, const AdmmOptions& opts) {
  AdmmState state = AdmmState::cold(g.rows(), g.cols());
  return admm_lp(g, m, opts, state);
}

double fw_gap(const Matrix& g, const Matrix& c, const Matrix& c_direction) {
  if (g.rows() != c.rows() || g.cols() != c.cols() || c.rows() != c_direction.rows() ||
      c.cols() != c_direction.cols())
    throw InputError("fw_gap arguments differ in shape");
  return (g.array() * (c - c_direction).array()).sum();
}

CgResult cg_solve(const ObjectiveContext& ctx, const ObjectiveWeights& w, const Matrix& c0,
                  const CgOptions& opts) {
  ctx.validate();
  w.validate();
  if (opts.iterations < 1) throw InputError("conditional gradient needs at least one iteration");
  if (c0.rows() != ctx.ns() || c0.cols() != ctx.nt())
    throw InputError("initial matching has the wrong shape");

  const auto start = std::chrono::steady_clock::now();
  const Marginals marginals = Marginals::uniform(ctx.ns(), ctx.nt());
  AdmmState state = AdmmState::cold(ctx.ns(), ctx.nt());

  CgResult result{c0, {}};
  Matrix& c = result.matching;
  CgDiagnostics& diag = result.diagnostics;

  const auto track = [&](const Matrix& iterate) {
    const Feasibility f = feasibility(iterate, marginals);
    diag.max_marginal_residual = std::max(diag.max_marginal_residual, f.marginal_residual());
    diag.min_entry = std::min(diag.min_entry, f.min_entry);
  };
  diag.min_entry = c.minCoeff();
  track(c);

  ValueAndGradient current = total_objective(c, ctx, w);
  diag.objective.push_back(current.value);
  for (int t = 1; t <= opts.iterations; ++t) {
    if (!opts.warm_start) state = AdmmState::cold(ctx.ns(), ctx.nt());
    const Matrix direction = admm_lp(current.gradient, marginals, opts.admm, state);
    diag.gap.push_back(fw_gap(current.gradient, c, direction));
    const double alpha = 2.0 / (static_cast<double>(t) + 2.0);
    c += alpha * (direction - c);
    track(c);
    current = total_objective(c, ctx, w);
    if (!std::isfinite(current.value)) throw NumericalError("objective became non-finite");
    diag.objective.push_back(current.value);
  }

  if (!opts.warm_start) state = AdmmState::cold(ctx.ns(), ctx.nt());
  diag.final_gap = fw_gap(current.gradient, c, admm_lp(current.gradient, marginals, opts.admm, state));
  diag.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

void to_json(nlohmann::json& j, const CgDiagnostics& d) {
  j = nlohmann::json{{"objective", d.objective},
                     {"fw_gap", d.gap},
                     {"final_fw_gap", d.final_gap},
                     {"max_marginal_residual", d.max_marginal_residual},
                     {"min_entry", d.min_entry},
                     {"wall_seconds", d.wall_seconds}};
}

}  // namespace hgda
