#include "envdebias/graph.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <string>

#include "envdebias/errors.hpp"

namespace envdebias {

void validate(const PropagationGraph& graph) {
  const int n = graph.node_count();
  if (n < 1) throw DataError("graph '" + graph.id + "' has no nodes");
  if (graph.feature_dim() < 1) throw DataError("graph '" + graph.id + "' has empty feature rows");
  if (!graph.features.allFinite()) {
    throw DataError("graph '" + graph.id + "' has non-finite feature values");
  }
  if (graph.label < 0 || graph.label >= kLabelCount) {
    throw DataError("graph '" + graph.id + "' label " + std::to_string(graph.label) +
                    " out of range");
  }
  if (graph.root < 0 || graph.root >= n) {
    throw DataError("graph '" + graph.id + "' root index out of range");
  }
  std::set<Edge> seen;
  for (const Edge& e : graph.edges) {
    if (e.parent < 0 || e.parent >= n || e.child < 0 || e.child >= n) {
      throw DataError("graph '" + graph.id + "': edge endpoint out of range (" +
                      std::to_string(e.parent) + "," + std::to_string(e.child) + ")");
    }
    if (e.parent == e.child) {
      throw DataError("graph '" + graph.id + "': self-loop on node " + std::to_string(e.parent));
    }
    if (!seen.insert(e).second) {
      throw DataError("graph '" + graph.id + "': duplicate edge (" + std::to_string(e.parent) +
                      "," + std::to_string(e.child) + ")");
    }
  }
}

void validate(Dataset& dataset) {
  if (dataset.label_count != kLabelCount) {
    throw DataError("only binary labels are supported");
  }
  for (const auto& g : dataset.graphs) {
    validate(g);
    if (dataset.feature_dim == 0) dataset.feature_dim = g.feature_dim();
    if (g.feature_dim() != dataset.feature_dim) {
      throw DataError("graph '" + g.id + "' feature dim " + std::to_string(g.feature_dim()) +
                      " differs from dataset dim " + std::to_string(dataset.feature_dim));
    }
  }
}

NormalizedAdjacency normalize_adjacency(const PropagationGraph& graph) {
  const int n = graph.node_count();
  Tensor2D a = Tensor2D::Identity(n, n);
  for (const Edge& e : graph.edges) {
    a(e.parent, e.child) = 1.0;
    a(e.child, e.parent) = 1.0;
  }
  const Eigen::VectorXd inv_sqrt_deg = a.rowwise().sum().array().rsqrt();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) *= inv_sqrt_deg(i) * inv_sqrt_deg(j);
  }
  return {std::move(a)};
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    const Dataset& dataset, double val_fraction, std::uint64_t seed) {
  if (dataset.empty()) throw DataError("split_dataset: empty dataset");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
    throw ConfigError("split_dataset: val_fraction must be in [0,1)");
  }
  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::size_t>> by_label(static_cast<std::size_t>(dataset.label_count));
  for (std::size_t i = 0; i < dataset.graphs.size(); ++i) {
    by_label[static_cast<std::size_t>(dataset.graphs[i].label)].push_back(i);
  }
  std::vector<bool> in_val(dataset.graphs.size(), false);
  for (auto& idx : by_label) {
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n_val =
        static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(idx.size())));
    for (std::size_t k = 0; k < n_val && k < idx.size(); ++k) in_val[idx[k]] = true;
  }
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  for (std::size_t i = 0; i < dataset.graphs.size(); ++i) (in_val[i] ? val : train).push_back(i);
  if (train.empty()) throw ConfigError("split_dataset: val_fraction leaves an empty train split");
  return {std::move(train), std::move(val)};
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& dataset, double val_fraction,
                                          std::uint64_t seed) {
  const auto [train_idx, val_idx] = split_indices(dataset, val_fraction, seed);
  Dataset train{.graphs = {}, .feature_dim = dataset.feature_dim, .label_count = dataset.label_count};
  Dataset val = train;
  for (std::size_t i : train_idx) train.graphs.push_back(dataset.graphs[i]);
  for (std::size_t i : val_idx) val.graphs.push_back(dataset.graphs[i]);
  return {std::move(train), std::move(val)};
}

}  // namespace envdebias
