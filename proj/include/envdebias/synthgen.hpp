#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "envdebias/graph.hpp"

namespace envdebias {

// Knobs for the biased propagation-data generator. Each kind of shift has its
// own knob:
//   content:      causal_strength / noise along the causal direction mu
//   structure:    biased_branching_multiplier, and scrambling of the
//                 depth cue (position_strength) in biased graphs
//   correlation:  bias_strength along nu, label-correlated only in training
struct SyntheticSpec {
  int n_train = 400;
  int n_test = 200;
  int feature_dim = 16;
  double bias_rate = 0.3;
  double causal_strength = 1.0;
  double bias_strength = 2.0;
  // Multiplies causal_strength inside biased graphs only; below 1 their labels
  // follow the environment more than the content.
  double biased_causal_scale = 1.0;
  // Per-node noise scale.
  double noise = 1.0;
  // Per-event noise shared by every node of a graph; unlike node noise it
  // survives mean pooling.
  double event_noise = 0.5;
  double branching_mean = 2.0;
  double biased_branching_multiplier = 2.0;
  int depth_max = 4;
  // Scale of the per-node depth cue along tau; 0 removes it.
  double position_strength = 1.0;
  // Child counts are Poisson truncated to [0, max_children] ([1, ...] at the root).
  int max_children = 6;
  int max_nodes = 48;
  std::uint64_t seed = 0;

  // Throws ConfigError when a field is out of range.
  void validate() const;
};

nlohmann::json to_json(const SyntheticSpec& spec);
SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j, SyntheticSpec base = {});

// Unit directions used by the generator; pairwise orthogonal.
struct SyntheticDirections {
  Tensor2D mu;   // 1 x d, causal
  Tensor2D nu;   // 1 x d, environment bias
  Tensor2D tau;  // 1 x d, depth cue
};

SyntheticDirections synthetic_directions(int feature_dim, std::uint64_t seed);

struct SyntheticBundle {
  Dataset train;
  Dataset test;
  // One flag per training graph; true marks an environment-biased sample.
  std::vector<bool> bias_flags;
};

SyntheticBundle generate(const SyntheticSpec& spec);

// Writes train.jsonl, test.jsonl, bias_flags.json and spec.json into `dir`.
void write_bundle(const SyntheticBundle& bundle, const SyntheticSpec& spec,
                  const std::filesystem::path& dir);

std::vector<bool> load_bias_flags(const std::filesystem::path& path);

}  // namespace envdebias
