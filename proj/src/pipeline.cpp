#include "hgda/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <optional>

namespace hgda {

void AdaptationConfig::validate() const {
  if (!(eta > 0.0 && eta <= 1.0)) throw InputError("eta must lie in (0,1]");
  if (outer_rounds < 1) throw InputError("need at least one outer round");
  if (!(ridge > 0.0)) throw InputError("ridge coefficient must be positive");
  weights.validate();
  tensor.validate();
  ap.validate();
  if (cg.iterations < 1 || cg.admm.iterations < 1) throw InputError("solver iteration counts must be >= 1");
}

Matrix LinearMap::apply(const Matrix& x) const {
  if (x.cols() != weights.rows()) throw InputError("map input dimension mismatch");
  Matrix out = x * weights;
  out.rowwise() += bias.transpose();
  return out;
}

LinearMap fit_ridge_mapping(const Matrix& inputs, const Matrix& targets, double ridge) {
  if (inputs.rows() < 1) throw InputError("ridge mapping needs at least one sample");
  if (inputs.rows() != targets.rows()) throw InputError("ridge inputs and targets differ in row count");
  if (!(ridge > 0.0)) throw InputError("ridge coefficient must be positive");

  const Eigen::RowVectorXd x_mean = inputs.colwise().mean();
  const Eigen::RowVectorXd y_mean = targets.colwise().mean();
  const Matrix xc = inputs.rowwise() - x_mean;
  const Matrix yc = targets.rowwise() - y_mean;

  Matrix normal = xc.transpose() * xc;
  normal.diagonal().array() += ridge;
  LinearMap map;
  map.weights = normal.ldlt().solve(xc.transpose() * yc);
  map.bias = (y_mean - x_mean * map.weights).transpose();
  require_finite(map.weights, "ridge weights");
  return map;
}

AdaptationResult adapt(const LabeledDataset& source, const FeatureMatrix& target,
                       const AdaptationConfig& cfg, const RoundObserver& observer) {
  cfg.validate();
  if (source.features().cols() != target.cols())
    throw InputError("source and target feature dimensions differ");

  const auto require_triangles = [](const ExemplarSet& set, const char* domain) {
    if (set.size() < 3)
      throw InputError(std::string("only ") + std::to_string(set.size()) + " " + domain +
                       " exemplars; at least 3 are needed to form triangles");
  };

  AdaptationResult result;
  Matrix current = source.features().values();

  std::optional<ExemplarSet> target_ex;
  std::optional<AdjacencyMatrix> target_adj;
  double sigma_target = 0.0;

  for (int round = 1; round <= cfg.outer_rounds; ++round) {
    RoundDiagnostics diag;
    diag.round = round;

    const LabeledDataset current_source(FeatureMatrix(current), source.labels());
    const ExemplarSet source_ex = select_source_exemplars(current_source, cfg.eta, cfg.ap);
    if (!target_ex || !cfg.cache_target_exemplars) {
      target_ex = select_exemplars(target, cfg.eta, cfg.ap);
      target_adj.reset();
    }
    require_triangles(source_ex, "source");
    require_triangles(*target_ex, "target");

    const FeatureMatrix xs(source_ex.features);
    const FeatureMatrix xt(target_ex->features);
    const ClassIndexSets classes = class_index_sets(source_ex.labels, source.num_classes());

    ObjectiveContext ctx;
    ctx.source = &xs.values();
    ctx.target = &xt.values();
    ctx.classes = &classes;

    std::optional<AdjacencyMatrix> source_adj;
    if (cfg.weights.lambda2 != 0.0) {
      if (!target_adj) {
        sigma_target = sigma_heuristic(xt);
        target_adj = adjacency_matrix(xt, sigma_target);
      }
      source_adj = adjacency_matrix(xs, sigma_heuristic(xs));
      ctx.source_adj = &source_adj->values;
      ctx.target_adj = &target_adj->values;
      diag.sigma_source = source_adj->sigma;
      diag.sigma_target = sigma_target;
    }

    SparseTensor3 tensor;
    if (cfg.weights.lambda3 != 0.0) {
      TensorSampling sampling = cfg.tensor;
      sampling.seed = cfg.seed * 1000003ULL + static_cast<std::uint64_t>(round);
      tensor = build_sparse_tensor(xs, xt, sampling);
      ctx.tensor = &tensor;
      diag.gamma = tensor.gamma;
      diag.tensor_entries = tensor.size();
    }

    CgResult solved = cg_solve(ctx, cfg.weights, uniform_matching(xs.rows(), xt.rows()), cfg.cg);

    const LinearMap map = fit_ridge_mapping(xs.values(), solved.matching * xt.values(), cfg.ridge);
    current = map.apply(current);
    require_finite(current, "adapted source");

    diag.source_exemplars = source_ex.indices;
    diag.target_exemplars = target_ex->indices;
    diag.source_ap = source_ex.diagnostics;
    diag.target_ap = target_ex->diagnostics;
    diag.cg = std::move(solved.diagnostics);
    result.rounds.push_back(std::move(diag));
    result.matching = std::move(solved.matching);
    result.last_tensor = std::move(tensor);
    if (observer) observer(round, current);
  }
  result.adapted_source = std::move(current);
  return result;
}

void to_json(nlohmann::json& j, const RoundDiagnostics& r) {
  const auto ap = [](const APDiagnostics& d) {
    return nlohmann::json{{"converged", d.converged},
                          {"iterations", d.iterations},
                          {"preference", d.preference},
                          {"bisection_steps", d.bisection_steps}};
  };
  j = nlohmann::json{{"round", r.round},
                     {"source_exemplars", r.source_exemplars.size()},
                     {"target_exemplars", r.target_exemplars.size()},
                     {"source_ap", ap(r.source_ap)},
                     {"target_ap", ap(r.target_ap)},
                     {"sigma_source", r.sigma_source},
                     {"sigma_target", r.sigma_target},
                     {"gamma", r.gamma},
                     {"tensor_entries", r.tensor_entries},
                     {"cg", r.cg}};
}

}  // namespace hgda
