#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "envdebias/autodiff.hpp"
#include "envdebias/classifier.hpp"
#include "envdebias/posterior.hpp"
#include "envdebias/structure_estimator.hpp"

namespace envdebias {

// Classifier plus structure estimator parameters, freshly initialized.
ParamStore init_model(const ModelDims& dims, std::uint64_t seed);

// Reads the model dimensions back from parameter shapes.
ModelDims dims_of(const ParamStore& store);

struct ModelParams {
  ClassifierParams classifier;
  EstimatorParams estimator;

  static ModelParams resolve(const ParamStore& store) {
    return {ClassifierParams::resolve(store), EstimatorParams::resolve(store)};
  }
};

struct ObjectiveOptions {
  PriorConfig prior;
  E0Mode e0_mode = E0Mode::kUniform;
  bool normalize_pairs = false;
  int kl_sign = 1;
  // Drop the KL term (the q == 1 baseline has no posterior to regularize).
  bool include_kl = true;
};

// Both branches of both likelihood factors for one graph.
struct GraphTerms {
  Var ll_y1;
  double ll_y0 = 0.0;
  Var ll_a1;
  double ll_a0 = 0.0;
};

GraphTerms graph_terms(Tape& tape, const PropagationGraph& graph, const NormalizedAdjacency& adj,
                       const PairSample& pairs, const ModelParams& params,
                       const ObjectiveOptions& options, Dropout dropout = {});

struct LossVars {
  Var cl;
  Var reg;
  Var kl;
  Var total;
};

// Builds the batch losses for fixed (detached) posterior weights q. Only the
// q-weighted e=1 terms carry gradients; the e=0 terms and KL are constants.
LossVars assemble_losses(Tape& tape, std::span<const GraphTerms> terms, std::span<const double> q,
                         const ObjectiveOptions& options);

// Posterior weights for the terms as currently evaluated on the tape.
EnvPosterior posterior_of(const Tape& tape, std::span<const GraphTerms> terms,
                          const PriorConfig& prior);

}  // namespace envdebias
