#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "envdebias/graph.hpp"
#include "envdebias/param_store.hpp"

namespace envdebias::testing {

// Random rooted tree on n nodes, parent index always smaller than child.
inline PropagationGraph random_tree(std::mt19937_64& rng, int n, int d, int label = -1) {
  PropagationGraph g;
  g.id = "g" + std::to_string(rng() % 100000);
  g.features.resize(n, d);
  std::normal_distribution<double> gauss;
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < d; ++c) g.features(i, c) = gauss(rng);
  for (int child = 1; child < n; ++child) {
    const int parent = static_cast<int>(rng() % static_cast<std::uint64_t>(child));
    g.edges.push_back({parent, child});
  }
  g.label = label >= 0 ? label : static_cast<int>(rng() % 2);
  return g;
}

// Random simple directed graph (not necessarily a tree); both directions of a
// pair may appear.
inline PropagationGraph random_digraph(std::mt19937_64& rng, int n, int d, double density) {
  PropagationGraph g = random_tree(rng, n, d);
  g.edges.clear();
  std::bernoulli_distribution keep(density);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && keep(rng)) g.edges.push_back({i, j});
  return g;
}

inline Dataset random_dataset(std::mt19937_64& rng, int count, int d, int max_nodes) {
  Dataset ds;
  ds.feature_dim = d;
  for (int i = 0; i < count; ++i) {
    const int n = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_nodes));
    ds.graphs.push_back(random_tree(rng, n, d, i % 2));
  }
  return ds;
}

// |a - f| / max(|a|, |f|, floor). The floor keeps entries whose true value is
// near zero from dominating through rounding noise.
inline double relative_error(double a, double f, double floor) {
  return std::abs(a - f) / std::max({std::abs(a), std::abs(f), floor});
}

struct GradCheck {
  double max_rel = 0.0;
  std::string worst;
  std::size_t checked = 0;
};

// Central differences of `loss` around the current store values, compared
// entry-by-entry against `analytic`.
inline GradCheck check_gradients(ParamStore& store, const Gradients& analytic,
                                 const std::function<double()>& loss, double eps,
                                 double floor) {
  GradCheck out;
  for (std::size_t p = 0; p < store.size(); ++p) {
    Tensor2D& w = store.mutable_value(p);
    for (Eigen::Index k = 0; k < w.size(); ++k) {
      const double saved = w.data()[k];
      w.data()[k] = saved + eps;
      const double up = loss();
      w.data()[k] = saved - eps;
      const double down = loss();
      w.data()[k] = saved;
      const double fd = (up - down) / (2.0 * eps);
      const double rel = relative_error(analytic[p].data()[k], fd, floor);
      ++out.checked;
      if (rel > out.max_rel) {
        out.max_rel = rel;
        out.worst = store.name(p) + "[" + std::to_string(k) + "]";
      }
    }
  }
  return out;
}

// Fresh scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("envdebias-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Brute-force D^{-1/2} (A_sym + I) D^{-1/2} with explicit loops.
inline Tensor2D dense_normalized_adjacency(const PropagationGraph& g) {
  const int n = g.node_count();
  std::vector<std::vector<double>> a(static_cast<std::size_t>(n),
                                     std::vector<double>(static_cast<std::size_t>(n), 0.0));
  for (int i = 0; i < n; ++i) a[i][i] = 1.0;
  for (const Edge& e : g.edges) {
    a[e.parent][e.child] = 1.0;
    a[e.child][e.parent] = 1.0;
  }
  std::vector<double> deg(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) deg[i] += a[i][j];
  Tensor2D out(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out(i, j) = a[i][j] / std::sqrt(deg[i] * deg[j]);
  return out;
}

}  // namespace envdebias::testing
