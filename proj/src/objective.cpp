#include "hgda/objective.hpp"

#include <cmath>

namespace hgda {

void ObjectiveWeights::validate() const {
  if (!(lambda2 >= 0.0 && lambda3 >= 0.0 && lambda_g >= 0.0))
    throw InputError("objective weights must be non-negative");
}

void ObjectiveContext::validate() const {
  if (!source || !target) throw InputError("objective context needs source and target features");
  if (source->cols() != target->cols()) throw InputError("source and target dimensions differ");
  if (source->rows() < 1 || target->rows() < 1) throw InputError("empty exemplar set");
  if (source_adj && (source_adj->rows() != ns() || source_adj->cols() != ns()))
    throw InputError("source adjacency has wrong shape");
  if (target_adj && (target_adj->rows() != nt() || target_adj->cols() != nt()))
    throw InputError("target adjacency has wrong shape");
  if (tensor && (tensor->source_nodes != ns() || tensor->target_nodes != nt()))
    throw InputError("tensor was built for different exemplar counts");
  if (classes) {
    Eigen::Index total = 0;
    for (const auto& g : classes->groups) {
      total += static_cast<Eigen::Index>(g.size());
      for (const auto i : g)
        if (i < 0 || i >= ns()) throw InputError("class index set refers to a missing row");
    }
    if (total != ns()) throw InputError("class index sets do not partition the source rows");
  }
}

namespace {

void check_shape(const Matrix& c, const ObjectiveContext& ctx) {
  if (c.rows() != ctx.ns() || c.cols() != ctx.nt())
    throw InputError("matching matrix shape does not match the exemplar counts");
}

template <typename T>
const T& need(const T* p, const char* what) {
  if (!p) throw InputError(std::string("objective context is missing ") + what);
  return *p;
}

}  // namespace

ValueAndGradient first_order_term(const Matrix& c, const ObjectiveContext& ctx) {
  check_shape(c, ctx);
  const Matrix& xs = *ctx.source;
  const Matrix& xt = *ctx.target;
  const double scale = 1.0 / (static_cast<double>(ctx.ns()) * static_cast<double>(xs.cols()));
  const Matrix residual = c * xt - xs;
  return {residual.squaredNorm() * scale, 2.0 * scale * residual * xt.transpose()};
}

ValueAndGradient second_order_term(const Matrix& c, const ObjectiveContext& ctx) {
  check_shape(c, ctx);
  const Matrix& ds = need(ctx.source_adj, "source adjacency");
  const Matrix& dt = need(ctx.target_adj, "target adjacency");
  const double r = ctx.ratio();
  const Matrix e = c * dt - r * (ds * c);
  // 2 (C Dt Dt' - r Ds C Dt' - r Ds' C Dt + r^2 Ds' Ds C), factored through e.
  return {e.squaredNorm(), 2.0 * (e * dt.transpose() - r * (ds.transpose() * e))};
}

ValueAndGradient third_order_term(const Matrix& c, const ObjectiveContext& ctx) {
  check_shape(c, ctx);
  const SparseTensor3& h = need(ctx.tensor, "tensor");
  const auto at = [&](const CandidatePair& p) { return c(p.source, p.target); };
  ValueAndGradient out{0.0, Matrix::Zero(c.rows(), c.cols())};
  for (const auto& e : h.entries) {
    const auto& [p, q, r] = e.slots;
    const double cp = at(p), cq = at(q), cr = at(r);
    out.value += e.value * cp * cq * cr;
    out.gradient(p.source, p.target) += e.value * cq * cr;
    out.gradient(q.source, q.target) += e.value * cp * cr;
    out.gradient(r.source, r.target) += e.value * cp * cq;
  }
  return out;
}

ValueAndGradient group_lasso_term(const Matrix& c, const ObjectiveContext& ctx) {
  check_shape(c, ctx);
  const ClassIndexSets& classes = need(ctx.classes, "class index sets");
  ValueAndGradient out{0.0, Matrix::Zero(c.rows(), c.cols())};
  for (const auto& group : classes.groups) {
    if (group.empty()) continue;
    for (Eigen::Index j = 0; j < c.cols(); ++j) {
      double norm2 = 0.0;
      for (const auto i : group) norm2 += c(i, j) * c(i, j);
      if (norm2 == 0.0) continue;
      const double norm = std::sqrt(norm2);
      out.value += norm;
      for (const auto i : group) out.gradient(i, j) = c(i, j) / norm;
    }
  }
  return out;
}

ValueAndGradient total_objective(const Matrix& c, const ObjectiveContext& ctx,
                                 const ObjectiveWeights& w) {
  w.validate();
  ValueAndGradient total = first_order_term(c, ctx);
  const auto add = [&total](double weight, const ValueAndGradient& term) {
    total.value += weight * term.value;
    total.gradient += weight * term.gradient;
  };
  if (w.lambda2 != 0.0) add(w.lambda2, second_order_term(c, ctx));
  if (w.lambda3 != 0.0) add(-w.lambda3, third_order_term(c, ctx));
  if (w.lambda_g != 0.0) add(w.lambda_g, group_lasso_term(c, ctx));
  return total;
}

}  // namespace hgda
