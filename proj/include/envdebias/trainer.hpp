#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "envdebias/graph.hpp"
#include "envdebias/objective.hpp"
#include "envdebias/param_store.hpp"
#include "envdebias/posterior.hpp"

namespace envdebias {

// When posterior weights are refreshed during EM.
enum class EStepMode { kPerBatch, kPerEpoch };

std::string to_string(EStepMode mode);
EStepMode parse_estep_mode(std::string_view text);

struct TrainConfig {
  int epochs = 200;
  int batch_size = 32;
  double lr = 5e-3;
  int hidden = 64;
  int estimator_hidden = 32;
  PriorConfig prior{};
  E0Mode e0_mode = E0Mode::kUniform;
  int kl_sign = 1;
  std::uint64_t seed = 0;
  // Epochs without validation improvement before stopping; 0 disables.
  int patience = 20;
  double val_fraction = 0.1;
  EStepMode estep = EStepMode::kPerBatch;
  bool normalize_pairs = false;
  // Fix q = 1 for every sample: plain likelihood training, no KL term.
  bool no_debias = false;
  double dropout = 0.0;
  double weight_decay = 0.0;

  // Throws ConfigError on out-of-range values.
  void validate() const;
  ObjectiveOptions objective_options() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&);
};

nlohmann::json to_json(const TrainConfig& config);
// Missing keys keep their defaults; unknown keys are rejected.
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

struct EpochStats {
  double cl = 0.0;
  double reg = 0.0;
  double kl = 0.0;
  double total = 0.0;
  double mean_q = 0.0;
  // Accuracy on the training batches, measured before each update.
  double train_accuracy = 0.0;
  // Internal validation split, or the training split when it is empty.
  double val_accuracy = 0.0;
};

struct StepStats {
  int epoch = 0;
  int batch = 0;
  double cl = 0.0;
  double reg = 0.0;
  double kl = 0.0;
  double total = 0.0;
};

struct TrainReport {
  TrainConfig config;
  std::vector<EpochStats> epochs;
  std::vector<StepStats> steps;
  // Posterior under the configured prior at the returned parameters, one per
  // input graph in input order.
  std::vector<double> final_q;
  int best_epoch = -1;

  friend bool operator==(const TrainReport&, const TrainReport&);
};

nlohmann::json to_json(const TrainReport& report);
// One row per epoch.
void write_report_csv(const TrainReport& report, const std::filesystem::path& path);

struct TrainResult {
  ParamStore params;
  TrainReport report;
};

// Called after every epoch with the current (not best) parameters.
using EpochObserver = std::function<void(int epoch, const EpochStats&, const ParamStore&)>;

// EM training: per batch, evaluate both branches with the current
// parameters, infer q (detached), then take one Adam step on the total loss.
// Returns the parameters of the best validation epoch. Throws NumericalError
// naming the epoch and batch if the loss diverges.
TrainResult train(const Dataset& train_ds, const TrainConfig& config,
                  const EpochObserver& observer = {});

// Deterministic schedule pieces, shared with reference trainers in tests.
std::vector<std::size_t> epoch_order(std::uint64_t seed, int epoch, std::size_t n);
std::uint64_t negative_seed(std::uint64_t seed, int epoch, std::size_t graph_index);
// Epoch index used for the negatives of the final posterior pass.
inline constexpr int kFinalPassEpoch = -1;

struct Prediction {
  int label = 0;
  std::vector<double> probs;
};

// e = 1 inference; ties go to the lowest label.
Prediction predict(const PropagationGraph& graph, const ParamStore& params);

double accuracy(const Dataset& ds, const ParamStore& params);

// Posterior q for every graph of `ds` at fixed parameters.
EnvPosterior infer_dataset_posterior(const Dataset& ds, const ParamStore& params,
                                     const TrainConfig& config, int epoch = kFinalPassEpoch);

}  // namespace envdebias
