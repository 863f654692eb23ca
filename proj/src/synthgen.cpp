#include "envdebias/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "envdebias/dataset_io.hpp"
#include "envdebias/errors.hpp"
#include "envdebias/seeding.hpp"

namespace envdebias {

using nlohmann::json;

void SyntheticSpec::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("synthetic spec: ") + what);
  };
  require(n_train >= 1, "n_train must be >= 1");
  require(n_test >= 0, "n_test must be >= 0");
  require(feature_dim >= 3, "feature_dim must be >= 3");
  require(bias_rate >= 0.0 && bias_rate <= 1.0, "bias_rate must lie in [0,1]");
  require(causal_strength > 0.0, "causal_strength must be > 0");
  require(bias_strength > 0.0, "bias_strength must be > 0");
  require(noise > 0.0, "noise must be > 0");
  require(biased_causal_scale >= 0.0 && biased_causal_scale <= 1.0,
          "biased_causal_scale must lie in [0,1]");
  require(event_noise >= 0.0, "event_noise must be >= 0");
  require(branching_mean > 0.0, "branching_mean must be > 0");
  require(biased_branching_multiplier > 0.0, "biased_branching_multiplier must be > 0");
  require(depth_max >= 1, "depth_max must be >= 1");
  require(position_strength >= 0.0, "position_strength must be >= 0");
  require(max_children >= 1, "max_children must be >= 1");
  require(max_nodes >= 2, "max_nodes must be >= 2");
}

json to_json(const SyntheticSpec& s) {
  return json{{"n_train", s.n_train},
              {"n_test", s.n_test},
              {"feature_dim", s.feature_dim},
              {"bias_rate", s.bias_rate},
              {"causal_strength", s.causal_strength},
              {"bias_strength", s.bias_strength},
              {"noise", s.noise},
              {"biased_causal_scale", s.biased_causal_scale},
              {"event_noise", s.event_noise},
              {"branching_mean", s.branching_mean},
              {"biased_branching_multiplier", s.biased_branching_multiplier},
              {"depth_max", s.depth_max},
              {"position_strength", s.position_strength},
              {"max_children", s.max_children},
              {"max_nodes", s.max_nodes},
              {"seed", s.seed}};
}

SyntheticSpec synthetic_spec_from_json(const json& j, SyntheticSpec s) {
  if (!j.is_object()) throw ConfigError("synthetic spec must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "n_train") s.n_train = v.get<int>();
      else if (key == "n_test") s.n_test = v.get<int>();
      else if (key == "feature_dim") s.feature_dim = v.get<int>();
      else if (key == "bias_rate") s.bias_rate = v.get<double>();
      else if (key == "causal_strength") s.causal_strength = v.get<double>();
      else if (key == "bias_strength") s.bias_strength = v.get<double>();
      else if (key == "noise") s.noise = v.get<double>();
      else if (key == "biased_causal_scale") s.biased_causal_scale = v.get<double>();
      else if (key == "event_noise") s.event_noise = v.get<double>();
      else if (key == "branching_mean") s.branching_mean = v.get<double>();
      else if (key == "biased_branching_multiplier") s.biased_branching_multiplier = v.get<double>();
      else if (key == "depth_max") s.depth_max = v.get<int>();
      else if (key == "position_strength") s.position_strength = v.get<double>();
      else if (key == "max_children") s.max_children = v.get<int>();
      else if (key == "max_nodes") s.max_nodes = v.get<int>();
      else if (key == "seed") s.seed = v.get<std::uint64_t>();
      else throw ConfigError("unknown synthetic spec key '" + key + "'");
    }
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("synthetic spec: ") + ex.what());
  }
  return s;
}

SyntheticDirections synthetic_directions(int feature_dim, std::uint64_t seed) {
  if (feature_dim < 3) throw ConfigError("synthetic directions need feature_dim >= 3");
  std::mt19937_64 rng(derive_seed(seed, {kSeedDirections}));
  std::normal_distribution<double> gauss;
  std::vector<Eigen::VectorXd> basis;
  while (basis.size() < 3) {
    Eigen::VectorXd v(feature_dim);
    for (int i = 0; i < feature_dim; ++i) v(i) = gauss(rng);
    // Two Gram-Schmidt passes keep the residual dot products at rounding level.
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& b : basis) v -= v.dot(b) * b;
    }
    const double norm = v.norm();
    if (norm < 1e-6) continue;
    basis.push_back(v / norm);
  }
  return {basis[0].transpose(), basis[1].transpose(), basis[2].transpose()};
}

namespace {

int truncated_poisson(std::mt19937_64& rng, double mean, int lo, int hi) {
  std::poisson_distribution<int> pois(mean);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const int k = pois(rng);
    if (k >= lo && k <= hi) return k;
  }
  return lo;
}

struct Tree {
  std::vector<Edge> edges;
  std::vector<int> depth;
};

Tree grow_tree(std::mt19937_64& rng, double branching, const SyntheticSpec& spec) {
  Tree t;
  t.depth.push_back(0);
  std::deque<int> frontier{0};
  while (!frontier.empty() && static_cast<int>(t.depth.size()) < spec.max_nodes) {
    const int node = frontier.front();
    frontier.pop_front();
    if (t.depth[static_cast<std::size_t>(node)] >= spec.depth_max) continue;
    const int lo = node == 0 ? 1 : 0;
    const int children = truncated_poisson(rng, branching, lo, spec.max_children);
    for (int c = 0; c < children && static_cast<int>(t.depth.size()) < spec.max_nodes; ++c) {
      const int child = static_cast<int>(t.depth.size());
      t.depth.push_back(t.depth[static_cast<std::size_t>(node)] + 1);
      t.edges.push_back({node, child});
      frontier.push_back(child);
    }
  }
  return t;
}

enum class Regime { kNeutral, kBiased, kShifted };

PropagationGraph make_graph(const SyntheticSpec& spec, const SyntheticDirections& dirs,
                            Regime regime, int label, std::uint64_t graph_seed,
                            std::string id) {
  std::mt19937_64 rng(graph_seed);
  const bool biased = regime == Regime::kBiased;
  const double branching =
      spec.branching_mean * (biased ? spec.biased_branching_multiplier : 1.0);
  Tree tree = grow_tree(rng, branching, spec);
  const int n = static_cast<int>(tree.depth.size());

  // Biased graphs carry the same depth values, assigned to the wrong nodes.
  std::vector<int> cue = tree.depth;
  if (biased) std::shuffle(cue.begin(), cue.end(), rng);

  const double y_sign = label == 1 ? 1.0 : -1.0;
  const double causal = spec.causal_strength * (biased ? spec.biased_causal_scale : 1.0);
  double env_sign = 0.0;
  if (regime == Regime::kBiased) env_sign = y_sign;
  if (regime == Regime::kShifted) env_sign = std::bernoulli_distribution(0.5)(rng) ? 1.0 : -1.0;

  std::normal_distribution<double> gauss(0.0, spec.noise);
  std::normal_distribution<double> event_gauss(0.0, spec.event_noise);
  Tensor2D event(1, spec.feature_dim);
  for (int c = 0; c < spec.feature_dim; ++c) event(0, c) = spec.event_noise > 0.0 ? event_gauss(rng) : 0.0;
  Tensor2D x(n, spec.feature_dim);
  for (int v = 0; v < n; ++v) {
    for (int c = 0; c < spec.feature_dim; ++c) x(v, c) = gauss(rng) + event(0, c);
    x.row(v) += causal * y_sign * dirs.mu;
    x.row(v) += spec.position_strength * static_cast<double>(cue[static_cast<std::size_t>(v)]) * dirs.tau;
    if (env_sign != 0.0) x.row(v) += spec.bias_strength * env_sign * dirs.nu;
  }

  PropagationGraph g;
  g.id = std::move(id);
  g.features = std::move(x);
  g.edges = std::move(tree.edges);
  g.label = label;
  g.root = 0;
  g.domain = regime == Regime::kBiased ? "env-biased" : regime == Regime::kNeutral ? "env-neutral"
                                                                                 : "unseen";
  return g;
}

}  // namespace

SyntheticBundle generate(const SyntheticSpec& spec) {
  spec.validate();
  const auto dirs = synthetic_directions(spec.feature_dim, spec.seed);

  SyntheticBundle out;
  out.train.feature_dim = spec.feature_dim;
  out.test.feature_dim = spec.feature_dim;

  const auto n_biased =
      static_cast<std::size_t>(std::llround(spec.bias_rate * static_cast<double>(spec.n_train)));
  std::vector<std::size_t> order(static_cast<std::size_t>(spec.n_train));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 pick(derive_seed(spec.seed, {kSeedBias}));
  std::shuffle(order.begin(), order.end(), pick);
  out.bias_flags.assign(order.size(), false);
  for (std::size_t k = 0; k < n_biased; ++k) out.bias_flags[order[k]] = true;

  for (int i = 0; i < spec.n_train; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    const Regime regime = out.bias_flags[idx] ? Regime::kBiased : Regime::kNeutral;
    out.train.graphs.push_back(make_graph(spec, dirs, regime, i % 2,
                                          derive_seed(spec.seed, {kSeedGraph, 0, idx}),
                                          "train-" + std::to_string(i)));
  }
  // With no environment bias at all the held-out set follows the training process.
  const Regime test_regime = spec.bias_rate > 0.0 ? Regime::kShifted : Regime::kNeutral;
  for (int i = 0; i < spec.n_test; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    out.test.graphs.push_back(make_graph(spec, dirs, test_regime, i % 2,
                                         derive_seed(spec.seed, {kSeedGraph, 1, idx}),
                                         "test-" + std::to_string(i)));
  }
  return out;
}

void write_bundle(const SyntheticBundle& bundle, const SyntheticSpec& spec,
                  const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_jsonl(bundle.train, dir / "train.jsonl");
  save_jsonl(bundle.test, dir / "test.jsonl");
  {
    std::ofstream out(dir / "bias_flags.json", std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write bias_flags.json");
    out << json(bundle.bias_flags).dump() << '\n';
  }
  std::ofstream out(dir / "spec.json", std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write spec.json");
  out << to_json(spec).dump(2) << '\n';
}

std::vector<bool> load_bias_flags(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    std::stringstream buf;
    buf << in.rdbuf();
    return json::parse(buf.str()).get<std::vector<bool>>();
  } catch (const json::exception& ex) {
    throw DataError(path.string() + ": " + ex.what());
  }
}

}  // namespace envdebias
