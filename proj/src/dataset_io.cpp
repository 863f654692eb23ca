#include "envdebias/dataset_io.hpp"

#include <fstream>

#include "envdebias/errors.hpp"

namespace envdebias {

using nlohmann::json;

json graph_to_json(const PropagationGraph& graph) {
  json j;
  j["id"] = graph.id;
  j["label"] = graph.label;
  if (graph.domain) j["domain"] = *graph.domain;
  j["root"] = graph.root;
  json rows = json::array();
  for (Eigen::Index r = 0; r < graph.features.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < graph.features.cols(); ++c) row.push_back(graph.features(r, c));
    rows.push_back(std::move(row));
  }
  j["features"] = std::move(rows);
  json edges = json::array();
  for (const Edge& e : graph.edges) edges.push_back({e.parent, e.child});
  j["edges"] = std::move(edges);
  return j;
}

PropagationGraph graph_from_json(const json& j) {
  if (!j.is_object()) throw DataError("record is not a JSON object");
  PropagationGraph g;
  try {
    g.id = j.at("id").get<std::string>();
    g.label = j.at("label").get<int>();
    if (j.contains("domain") && !j["domain"].is_null()) g.domain = j["domain"].get<std::string>();
    if (j.contains("root")) g.root = j["root"].get<int>();

    const json& rows = j.at("features");
    if (!rows.is_array() || rows.empty()) throw DataError("'features' must be a non-empty array");
    const std::size_t d = rows[0].size();
    g.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (!rows[r].is_array() || rows[r].size() != d) {
        throw DataError("feature rows have inconsistent length");
      }
      for (std::size_t c = 0; c < d; ++c) {
        g.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            rows[r][c].get<double>();
      }
    }
    for (const json& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) throw DataError("edge must be a pair [parent, child]");
      g.edges.push_back({e[0].get<int>(), e[1].get<int>()});
    }
  } catch (const json::exception& ex) {
    throw DataError(ex.what());
  }
  validate(g);
  return g;
}

Dataset load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  Dataset ds;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      PropagationGraph g = graph_from_json(json::parse(line));
      if (ds.feature_dim == 0) ds.feature_dim = g.feature_dim();
      if (g.feature_dim() != ds.feature_dim) {
        throw DataError("feature dim " + std::to_string(g.feature_dim()) +
                        " differs from dataset dim " + std::to_string(ds.feature_dim));
      }
      ds.graphs.push_back(std::move(g));
    } catch (const json::exception& ex) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + ex.what());
    } catch (const DataError& ex) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + ex.what());
    }
  }
  return ds;
}

void save_jsonl(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& g : dataset.graphs) out << graph_to_json(g).dump() << '\n';
  if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace envdebias
