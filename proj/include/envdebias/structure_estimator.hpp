#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "envdebias/autodiff.hpp"
#include "envdebias/classifier.hpp"
#include "envdebias/graph.hpp"

namespace envdebias {

inline constexpr std::string_view kParamU = "estimator.U";
inline constexpr std::string_view kParamOmega = "estimator.omega";

// U: d x h_e projection, omega: 2h_e x 1 scoring vector.
struct EstimatorParams {
  std::size_t u, omega;

  static EstimatorParams resolve(const ParamStore& store);
};

void add_estimator_params(ParamStore& store, const ModelDims& dims, std::uint64_t seed);

// Directed positives (the graph's edges) and an equal number of directed
// non-edge negatives.
struct PairSample {
  std::vector<Edge> positives;
  std::vector<Edge> negatives;
  // Positives that could not be matched because the non-edge pool ran out.
  int shortfall = 0;
  // Set when the graph offers no pairs at all (single node or no edges).
  bool empty = false;

  std::size_t pair_count() const { return positives.size() + negatives.size(); }
};

PairSample sample_negatives(const PropagationGraph& graph, std::uint64_t seed);

// σ([x_i U, x_j U] ω); order-sensitive in (i, j).
double edge_prob(const Tensor2D& x_i, const Tensor2D& x_j, const ParamStore& store);

struct StructureLogLik {
  Var e1;     // Σ_pos log p + Σ_neg log(1 - p), differentiable
  double e0;  // constant in the parameters
};

// With normalize_pairs both branches are divided by the pair count.
StructureLogLik structure_loglik(Tape& tape, const PropagationGraph& graph,
                                 const PairSample& pairs, const EstimatorParams& params,
                                 E0Mode mode, bool normalize_pairs = false);

double structure_loglik(const PropagationGraph& graph, const PairSample& pairs,
                        const ParamStore& store, int e, E0Mode mode,
                        bool normalize_pairs = false);

}  // namespace envdebias
