#include "envdebias/structure_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <stdexcept>

#include "envdebias/errors.hpp"
#include "envdebias/seeding.hpp"

namespace envdebias {

EstimatorParams EstimatorParams::resolve(const ParamStore& store) {
  return {store.index_of(kParamU), store.index_of(kParamOmega)};
}

void add_estimator_params(ParamStore& store, const ModelDims& dims, std::uint64_t seed) {
  if (dims.feature_dim < 1 || dims.estimator_hidden < 1) {
    throw ConfigError("estimator dimensions must be positive");
  }
  store.add(std::string(kParamU), glorot_uniform(dims.feature_dim, dims.estimator_hidden,
                                                 derive_seed(seed, {kSeedInit, 10})));
  store.add(std::string(kParamOmega),
            glorot_uniform(2 * dims.estimator_hidden, 1, derive_seed(seed, {kSeedInit, 11})));
}

PairSample sample_negatives(const PropagationGraph& graph, std::uint64_t seed) {
  PairSample out;
  out.positives = graph.edges;
  const long n = graph.node_count();
  const auto m = static_cast<long>(graph.edges.size());
  if (n < 2 || m == 0) {
    out.empty = true;
    return out;
  }
  const std::set<Edge> existing(graph.edges.begin(), graph.edges.end());
  const long pool = n * (n - 1) - static_cast<long>(existing.size());
  std::mt19937_64 rng(seed);

  if (pool >= 2 * m) {
    // Sparse case: rejection sampling touches O(m) candidates.
    std::uniform_int_distribution<int> node(0, static_cast<int>(n - 1));
    std::set<Edge> chosen;
    while (static_cast<long>(out.negatives.size()) < m) {
      const Edge e{node(rng), node(rng)};
      if (e.parent == e.child || existing.contains(e) || !chosen.insert(e).second) continue;
      out.negatives.push_back(e);
    }
    return out;
  }

  std::vector<Edge> candidates;
  candidates.reserve(static_cast<std::size_t>(std::max(pool, 0L)));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j && !existing.contains(Edge{i, j})) candidates.push_back({i, j});
    }
  }
  std::shuffle(candidates.begin(), candidates.end(), rng);
  const auto take = std::min<std::size_t>(candidates.size(), static_cast<std::size_t>(m));
  out.negatives.assign(candidates.begin(), candidates.begin() + static_cast<long>(take));
  out.shortfall = static_cast<int>(m - static_cast<long>(take));
  return out;
}

double edge_prob(const Tensor2D& x_i, const Tensor2D& x_j, const ParamStore& store) {
  const auto p = EstimatorParams::resolve(store);
  const Tensor2D& u = store[p.u];
  if (x_i.rows() != 1 || x_j.rows() != 1 || x_i.cols() != u.rows() || x_j.cols() != u.rows()) {
    throw std::invalid_argument("edge_prob: feature rows must be 1 x d");
  }
  const Tensor2D pair = ops::concat_cols(ops::matmul(x_i, u), ops::matmul(x_j, u));
  return ops::sigmoid(ops::matmul(pair, store[p.omega]))(0, 0);
}

StructureLogLik structure_loglik(Tape& tape, const PropagationGraph& graph,
                                 const PairSample& pairs, const EstimatorParams& params,
                                 E0Mode mode, bool normalize_pairs) {
  const auto n_pairs = pairs.pair_count();
  if (n_pairs == 0) return {tape.constant(0.0), 0.0};

  std::vector<int> src;
  std::vector<int> dst;
  Tensor2D sign(static_cast<Eigen::Index>(n_pairs), 1);
  Eigen::Index row = 0;
  for (const auto* list : {&pairs.positives, &pairs.negatives}) {
    const double s = list == &pairs.positives ? 1.0 : -1.0;
    for (const Edge& e : *list) {
      if (e.parent < 0 || e.parent >= graph.node_count() || e.child < 0 ||
          e.child >= graph.node_count()) {
        throw std::invalid_argument("structure_loglik: pair outside graph");
      }
      src.push_back(e.parent);
      dst.push_back(e.child);
      sign(row++, 0) = s;
    }
  }

  const Var h = tape.matmul(tape.constant(graph.features), tape.param(params.u));
  const Var pair_repr = tape.concat_cols(tape.gather_rows(h, src), tape.gather_rows(h, dst));
  const Var scores = tape.matmul(pair_repr, tape.param(params.omega));
  // log σ(s) for positives, log(1 - σ(s)) = log σ(-s) for negatives.
  Var e1 = tape.sum(tape.log_sigmoid(tape.mul_const(scores, sign)));

  double e0 = 0.0;
  switch (mode) {
    case E0Mode::kUniform:
      e0 = static_cast<double>(n_pairs) * std::log(0.5);
      break;
    case E0Mode::kGaussianLogit: {
      const Tensor2D& s = tape.value(scores);
      for (Eigen::Index i = 0; i < s.rows(); ++i) e0 += std_normal_logpdf(s(i, 0));
      break;
    }
  }
  if (normalize_pairs) {
    const double inv = 1.0 / static_cast<double>(n_pairs);
    e1 = tape.scale(e1, inv);
    e0 *= inv;
  }
  return {e1, e0};
}

double structure_loglik(const PropagationGraph& graph, const PairSample& pairs,
                        const ParamStore& store, int e, E0Mode mode, bool normalize_pairs) {
  if (e != 0 && e != 1) throw std::invalid_argument("structure_loglik: e must be 0 or 1");
  Tape tape(store);
  const auto ll = structure_loglik(tape, graph, pairs, EstimatorParams::resolve(store), mode,
                                   normalize_pairs);
  return e == 1 ? tape.scalar(ll.e1) : ll.e0;
}

}  // namespace envdebias
