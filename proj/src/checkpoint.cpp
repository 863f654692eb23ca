#include "envdebias/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "envdebias/errors.hpp"

namespace envdebias {

using nlohmann::json;

namespace {

DataError checkpoint_error(const std::string& what) {
  return DataError("checkpoint (" + std::string(kCheckpointFormat) + " v" +
                   std::to_string(kCheckpointVersion) + "): " + what);
}

}  // namespace

json checkpoint_to_json(const ParamStore& params, const TrainConfig& config) {
  json list = json::array();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor2D& t = params[i];
    list.push_back({{"name", params.name(i)},
                    {"shape", {t.rows(), t.cols()}},
                    {"data", std::vector<double>(t.data(), t.data() + t.size())}});
  }
  return json{{"format", kCheckpointFormat},
              {"format_version", kCheckpointVersion},
              {"config", to_json(config)},
              {"params", std::move(list)}};
}

Checkpoint checkpoint_from_json(const json& j) {
  try {
    if (!j.is_object() || j.value("format", "") != kCheckpointFormat) {
      throw checkpoint_error("missing or wrong 'format' field");
    }
    const int version = j.at("format_version").get<int>();
    if (version != kCheckpointVersion) {
      throw checkpoint_error("unsupported format_version " + std::to_string(version));
    }
    Checkpoint ck;
    ck.config = train_config_from_json(j.at("config"));
    for (const json& p : j.at("params")) {
      const auto rows = p.at("shape").at(0).get<Eigen::Index>();
      const auto cols = p.at("shape").at(1).get<Eigen::Index>();
      const auto data = p.at("data").get<std::vector<double>>();
      if (rows < 0 || cols < 0 || static_cast<Eigen::Index>(data.size()) != rows * cols) {
        throw checkpoint_error("parameter '" + p.at("name").get<std::string>() +
                               "' data length does not match its shape");
      }
      Tensor2D t(rows, cols);
      std::copy(data.begin(), data.end(), t.data());
      if (!t.allFinite()) throw checkpoint_error("non-finite parameter values");
      ck.params.add(p.at("name").get<std::string>(), std::move(t));
    }
    return ck;
  } catch (const json::exception& ex) {
    throw checkpoint_error(ex.what());
  } catch (const ConfigError& ex) {
    throw checkpoint_error(ex.what());
  } catch (const std::invalid_argument& ex) {
    throw checkpoint_error(ex.what());
  }
}

void save_checkpoint(const ParamStore& params, const TrainConfig& config,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << checkpoint_to_json(params, config).dump(1) << '\n';
  if (!out) throw DataError("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  json j;
  try {
    j = json::parse(buf.str());
  } catch (const json::exception& ex) {
    throw checkpoint_error(std::string("parse error: ") + ex.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace envdebias
