#include "envdebias/objective.hpp"

#include <stdexcept>

#include "envdebias/seeding.hpp"

namespace envdebias {

ParamStore init_model(const ModelDims& dims, std::uint64_t seed) {
  ParamStore store;
  add_classifier_params(store, dims, seed);
  add_estimator_params(store, dims, seed);
  return store;
}

ModelDims dims_of(const ParamStore& store) {
  ModelDims dims;
  const Tensor2D& w_in = store.at(kParamWIn);
  dims.feature_dim = static_cast<int>(w_in.rows());
  dims.hidden = static_cast<int>(w_in.cols());
  dims.label_count = static_cast<int>(store.at(kParamM2).cols());
  dims.estimator_hidden = static_cast<int>(store.at(kParamU).cols());
  return dims;
}

GraphTerms graph_terms(Tape& tape, const PropagationGraph& graph, const NormalizedAdjacency& adj,
                       const PairSample& pairs, const ModelParams& params,
                       const ObjectiveOptions& options, Dropout dropout) {
  GraphTerms t;
  const Var logits = classifier_logits(tape, graph, adj, params.classifier, dropout);
  const LabelLogLik y = label_loglik(tape, logits, graph.label, options.e0_mode);
  const StructureLogLik a = structure_loglik(tape, graph, pairs, params.estimator,
                                             options.e0_mode, options.normalize_pairs);
  t.ll_y1 = y.e1;
  t.ll_y0 = y.e0;
  t.ll_a1 = a.e1;
  t.ll_a0 = a.e0;
  return t;
}

LossVars assemble_losses(Tape& tape, std::span<const GraphTerms> terms, std::span<const double> q,
                         const ObjectiveOptions& options) {
  if (terms.size() != q.size()) throw std::invalid_argument("assemble_losses: size mismatch");
  if (terms.empty()) throw std::invalid_argument("assemble_losses: empty batch");
  const double inv_n = 1.0 / static_cast<double>(terms.size());

  std::vector<Var> y1;
  std::vector<Var> a1;
  std::vector<double> w;
  double y0_const = 0.0;
  double a0_const = 0.0;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    y1.push_back(terms[i].ll_y1);
    a1.push_back(terms[i].ll_a1);
    w.push_back(-q[i] * inv_n);
    y0_const -= (1.0 - q[i]) * terms[i].ll_y0 * inv_n;
    a0_const -= (1.0 - q[i]) * terms[i].ll_a0 * inv_n;
  }

  LossVars out;
  out.cl = tape.add(tape.weighted_sum(y1, w), tape.constant(y0_const));
  out.reg = tape.add(tape.weighted_sum(a1, w), tape.constant(a0_const));
  out.kl = tape.constant(options.include_kl ? kl_loss(q, options.prior) : 0.0);
  const Var parts[] = {out.cl, out.reg, out.kl};
  const double coef[] = {1.0, 1.0, options.kl_sign * options.prior.lambda_kl};
  out.total = tape.weighted_sum(parts, coef);
  return out;
}

EnvPosterior posterior_of(const Tape& tape, std::span<const GraphTerms> terms,
                          const PriorConfig& prior) {
  std::vector<double> y1, a1, y0, a0;
  for (const auto& t : terms) {
    y1.push_back(tape.scalar(t.ll_y1));
    a1.push_back(tape.scalar(t.ll_a1));
    y0.push_back(t.ll_y0);
    a0.push_back(t.ll_a0);
  }
  return infer_posterior(y1, a1, y0, a0, prior);
}

}  // namespace envdebias
