#include "envdebias/classifier.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "envdebias/errors.hpp"
#include "envdebias/seeding.hpp"

namespace envdebias {

std::string to_string(E0Mode mode) {
  return mode == E0Mode::kUniform ? "uniform" : "gaussian-logit";
}

E0Mode parse_e0_mode(std::string_view text) {
  if (text == "uniform") return E0Mode::kUniform;
  if (text == "gaussian-logit") return E0Mode::kGaussianLogit;
  throw ConfigError("invalid e0 mode '" + std::string(text) + "' (expected uniform|gaussian-logit)");
}

double std_normal_logpdf(double x) {
  return -0.5 * x * x - 0.5 * std::log(2.0 * std::numbers::pi);
}

ClassifierParams ClassifierParams::resolve(const ParamStore& store) {
  return {store.index_of(kParamWIn), store.index_of(kParamW0), store.index_of(kParamW1),
          store.index_of(kParamM1),  store.index_of(kParamB1), store.index_of(kParamM2),
          store.index_of(kParamB2)};
}

void add_classifier_params(ParamStore& store, const ModelDims& dims, std::uint64_t seed) {
  if (dims.feature_dim < 1 || dims.hidden < 1 || dims.label_count < 2) {
    throw ConfigError("classifier dimensions must be positive");
  }
  const int d = dims.feature_dim;
  const int h = dims.hidden;
  const int k = dims.label_count;
  store.add(std::string(kParamWIn), glorot_uniform(d, h, derive_seed(seed, {kSeedInit, 0})));
  store.add(std::string(kParamW0), glorot_uniform(h, h, derive_seed(seed, {kSeedInit, 1})));
  store.add(std::string(kParamW1), glorot_uniform(h, h, derive_seed(seed, {kSeedInit, 2})));
  store.add(std::string(kParamM1), glorot_uniform(h, h, derive_seed(seed, {kSeedInit, 3})));
  store.add(std::string(kParamB1), Tensor2D::Zero(1, h));
  store.add(std::string(kParamM2), glorot_uniform(h, k, derive_seed(seed, {kSeedInit, 4})));
  store.add(std::string(kParamB2), Tensor2D::Zero(1, k));
}

namespace {

Var apply_dropout(Tape& tape, Var v, const Dropout& dropout) {
  if (dropout.rate <= 0.0 || dropout.rng == nullptr) return v;
  const auto& x = tape.value(v);
  std::bernoulli_distribution keep(1.0 - dropout.rate);
  Tensor2D mask(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = keep(*dropout.rng) ? 1.0 / (1.0 - dropout.rate) : 0.0;
  }
  return tape.mul_const(v, mask);
}

}  // namespace

Var classifier_logits(Tape& tape, const PropagationGraph& graph, const NormalizedAdjacency& adj,
                      const ClassifierParams& p, Dropout dropout) {
  if (adj.matrix.rows() != graph.node_count() || adj.matrix.cols() != graph.node_count()) {
    throw std::invalid_argument("adjacency does not match graph size");
  }
  const Var a = tape.constant(adj.matrix);
  const Var x = tape.constant(graph.features);

  Var z = tape.matmul(x, tape.param(p.w_in));
  for (std::size_t w : {p.w0, p.w1}) {
    const Var conv = tape.relu(tape.matmul(tape.matmul(a, z), tape.param(w)));
    z = tape.add(conv, z);
  }
  Var pooled = apply_dropout(tape, tape.mean_rows(z), dropout);
  Var hidden = tape.relu(tape.add_bias_row(tape.matmul(pooled, tape.param(p.m1)), tape.param(p.b1)));
  hidden = apply_dropout(tape, hidden, dropout);
  return tape.add_bias_row(tape.matmul(hidden, tape.param(p.m2)), tape.param(p.b2));
}

std::vector<double> classifier_forward(const PropagationGraph& graph,
                                       const NormalizedAdjacency& adj, const ParamStore& store) {
  Tape tape(store);
  const Var logits = classifier_logits(tape, graph, adj, ClassifierParams::resolve(store));
  const Tensor2D probs = ops::softmax_rows(tape.value(logits));
  return {probs.data(), probs.data() + probs.size()};
}

LabelLogLik label_loglik(Tape& tape, Var logits, int label, E0Mode mode) {
  const auto k = static_cast<int>(tape.value(logits).cols());
  if (label < 0 || label >= k) throw std::invalid_argument("label_loglik: label out of range");
  LabelLogLik out;
  out.e1 = tape.pick(tape.log_softmax_rows(logits), 0, label);
  switch (mode) {
    case E0Mode::kUniform:
      out.e0 = -std::log(static_cast<double>(k));
      break;
    case E0Mode::kGaussianLogit:
      out.e0 = std_normal_logpdf(tape.value(logits)(0, label));
      break;
  }
  return out;
}

double label_loglik(const PropagationGraph& graph, const NormalizedAdjacency& adj, int label,
                    const ParamStore& store, int e, E0Mode mode) {
  if (e != 0 && e != 1) throw std::invalid_argument("label_loglik: e must be 0 or 1");
  Tape tape(store);
  const Var logits = classifier_logits(tape, graph, adj, ClassifierParams::resolve(store));
  const LabelLogLik ll = label_loglik(tape, logits, label, mode);
  return e == 1 ? tape.scalar(ll.e1) : ll.e0;
}

}  // namespace envdebias
