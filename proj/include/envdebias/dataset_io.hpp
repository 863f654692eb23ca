#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "envdebias/graph.hpp"

namespace envdebias {

// JSON Lines, one graph per line:
//   {"id": str, "label": 0|1, "domain": str?, "root": int?,
//    "features": [[float,...],...], "edges": [[int,int],...]}
// Blank lines are skipped. Errors are DataError with the 1-based line number.
Dataset load_jsonl(const std::filesystem::path& path);
void save_jsonl(const Dataset& dataset, const std::filesystem::path& path);

nlohmann::json graph_to_json(const PropagationGraph& graph);
PropagationGraph graph_from_json(const nlohmann::json& j);

}  // namespace envdebias
