#pragma once

#include <filesystem>

#include <json.hpp>

#include "envdebias/param_store.hpp"
#include "envdebias/trainer.hpp"

namespace envdebias {

inline constexpr const char* kCheckpointFormat = "envdebias-checkpoint";
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  ParamStore params;
  TrainConfig config;
};

// {"format": "envdebias-checkpoint", "format_version": 1, "config": {...},
//  "params": [{"name": str, "shape": [rows, cols], "data": [row-major floats]}]}
nlohmann::json checkpoint_to_json(const ParamStore& params, const TrainConfig& config);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const ParamStore& params, const TrainConfig& config,
                     const std::filesystem::path& path);
// Throws DataError (message carries the expected format version) on any
// parse or schema failure.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace envdebias
