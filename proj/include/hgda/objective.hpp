#pragma once

#include "hgda/data.hpp"
#include "hgda/graph.hpp"

namespace hgda {

struct ObjectiveWeights {
  double lambda2 = 0.0;
  double lambda3 = 0.0;
  double lambda_g = 0.0;

  void validate() const;
};

/// Everything the matching objective reads besides C itself. Views into
/// caller-owned data; the referenced objects must outlive the context.
struct ObjectiveContext {
  const Matrix* source = nullptr;      // n_s x d exemplar features
  const Matrix* target = nullptr;      // n_t x d exemplar features
  const Matrix* source_adj = nullptr;  // n_s x n_s
  const Matrix* target_adj = nullptr;  // n_t x n_t
  const SparseTensor3* tensor = nullptr;
  const ClassIndexSets* classes = nullptr;

  Eigen::Index ns() const { return source->rows(); }
  Eigen::Index nt() const { return target->rows(); }
  /// Correction factor n_t / n_s of the second-order term.
  double ratio() const { return static_cast<double>(nt()) / static_cast<double>(ns()); }

  /// Checks that every referenced piece is present and dimensions agree.
  void validate() const;
};

struct ValueAndGradient {
  double value = 0.0;
  Matrix gradient;
};

/// ||C Xt - Xs||_F^2 / (n_s d)
ValueAndGradient first_order_term(const Matrix& c, const ObjectiveContext& ctx);
/// ||C Dt - r Ds C||_F^2
ValueAndGradient second_order_term(const Matrix& c, const ObjectiveContext& ctx);
/// Full contraction of the stored tensor entries with vec(C) on all three modes.
ValueAndGradient third_order_term(const Matrix& c, const ObjectiveContext& ctx);
/// sum_j sum_class ||C[class rows, j]||_2, subgradient 0 on zero groups.
ValueAndGradient group_lasso_term(const Matrix& c, const ObjectiveContext& ctx);

/// f1 + l2 f2 - l3 f3 + lg fg, with the matching gradient. Terms with a zero
/// weight are skipped.
ValueAndGradient total_objective(const Matrix& c, const ObjectiveContext& ctx,
                                 const ObjectiveWeights& w);

}  // namespace hgda
