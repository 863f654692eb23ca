#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "envdebias/tensor.hpp"

namespace envdebias {

inline constexpr int kLabelCount = 2;

struct Edge {
  int parent = 0;
  int child = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

// One news event: a post, its comments and reposts. Row i of `features`
// belongs to node i; edges run parent -> child.
struct PropagationGraph {
  std::string id;
  Tensor2D features;
  std::vector<Edge> edges;
  int label = 0;
  std::optional<std::string> domain;
  int root = 0;

  int node_count() const { return static_cast<int>(features.rows()); }
  int feature_dim() const { return static_cast<int>(features.cols()); }

  friend bool operator==(const PropagationGraph& a, const PropagationGraph& b) {
    return a.id == b.id && a.label == b.label && a.domain == b.domain && a.root == b.root &&
           a.edges == b.edges && a.features.rows() == b.features.rows() &&
           a.features.cols() == b.features.cols() && a.features == b.features;
  }
};

// Throws DataError describing the first violated invariant.
void validate(const PropagationGraph& graph);

struct Dataset {
  std::vector<PropagationGraph> graphs;
  int feature_dim = 0;
  int label_count = kLabelCount;

  bool empty() const { return graphs.empty(); }
  std::size_t size() const { return graphs.size(); }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Validates every graph plus cross-graph consistency. Sets feature_dim from
// the first graph when it is 0.
void validate(Dataset& dataset);

// Â = D̃^{-1/2} (A_sym + I) D̃^{-1/2}, dense N x N.
struct NormalizedAdjacency {
  Tensor2D matrix;
};

NormalizedAdjacency normalize_adjacency(const PropagationGraph& graph);

// Stratified by label, deterministic for a fixed seed. Returns (train, val)
// index lists, each in dataset order.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    const Dataset& dataset, double val_fraction, std::uint64_t seed);

// Stratified by label, deterministic for a fixed seed. Returns (train, val).
std::pair<Dataset, Dataset> split_dataset(const Dataset& dataset, double val_fraction,
                                          std::uint64_t seed);

}  // namespace envdebias
