#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "envdebias/autodiff.hpp"
#include "envdebias/graph.hpp"
#include "envdebias/param_store.hpp"

namespace envdebias {

// How the environment-biased (e=0) branch of both likelihoods is defined.
//   uniform:        non-informative label / Bernoulli(1/2) edge distribution.
//   gaussian-logit: standard-normal log density of the e=1 logit/score,
//                   detached from the parameters.
enum class E0Mode { kUniform, kGaussianLogit };

std::string to_string(E0Mode mode);
// Throws ConfigError for anything other than "uniform" / "gaussian-logit".
E0Mode parse_e0_mode(std::string_view text);

// log N(x; 0, 1)
double std_normal_logpdf(double x);

struct ModelDims {
  int feature_dim = 0;
  int hidden = 64;
  int estimator_hidden = 32;
  int label_count = kLabelCount;
};

// Indices of the classifier weights inside a ParamStore.
//   W_in: d x h        input projection
//   W0, W1: h x h      residual GCN layers
//   M1: h x h, b1: 1 x h, M2: h x K, b2: 1 x K   MLP head
struct ClassifierParams {
  std::size_t w_in, w0, w1, m1, b1, m2, b2;

  static ClassifierParams resolve(const ParamStore& store);
};

inline constexpr std::string_view kParamWIn = "classifier.W_in";
inline constexpr std::string_view kParamW0 = "classifier.W0";
inline constexpr std::string_view kParamW1 = "classifier.W1";
inline constexpr std::string_view kParamM1 = "classifier.M1";
inline constexpr std::string_view kParamB1 = "classifier.b1";
inline constexpr std::string_view kParamM2 = "classifier.M2";
inline constexpr std::string_view kParamB2 = "classifier.b2";

// Glorot weights, zero biases.
void add_classifier_params(ParamStore& store, const ModelDims& dims, std::uint64_t seed);

// Inverted-dropout settings for training-time forward passes.
struct Dropout {
  double rate = 0.0;
  std::mt19937_64* rng = nullptr;
};

// Records the forward pass on `tape` and returns the 1 x K logits.
Var classifier_logits(Tape& tape, const PropagationGraph& graph, const NormalizedAdjacency& adj,
                      const ClassifierParams& params, Dropout dropout = {});

// Class probabilities of the e=1 branch.
std::vector<double> classifier_forward(const PropagationGraph& graph,
                                       const NormalizedAdjacency& adj, const ParamStore& store);

struct LabelLogLik {
  Var e1;     // log p(y | X, A, e=1), differentiable
  double e0;  // log p(y | X, A, e=0), constant in the parameters
};

LabelLogLik label_loglik(Tape& tape, Var logits, int label, E0Mode mode);

// Convenience scalar evaluation for a single branch.
double label_loglik(const PropagationGraph& graph, const NormalizedAdjacency& adj, int label,
                    const ParamStore& store, int e, E0Mode mode);

}  // namespace envdebias
