#include "envdebias/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <string>

#include "envdebias/adam.hpp"
#include "envdebias/errors.hpp"
#include "envdebias/seeding.hpp"

namespace envdebias {

using nlohmann::json;

std::string to_string(EStepMode mode) {
  return mode == EStepMode::kPerBatch ? "batch" : "epoch";
}

EStepMode parse_estep_mode(std::string_view text) {
  if (text == "batch") return EStepMode::kPerBatch;
  if (text == "epoch") return EStepMode::kPerEpoch;
  throw ConfigError("invalid estep mode '" + std::string(text) + "' (expected batch|epoch)");
}

void TrainConfig::validate() const {
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be > 0");
  if (hidden < 1 || estimator_hidden < 1) throw ConfigError("hidden sizes must be >= 1");
  prior.validate();
  if (kl_sign != 1 && kl_sign != -1) throw ConfigError("kl_sign must be +1 or -1");
  if (patience < 0) throw ConfigError("patience must be >= 0");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
    throw ConfigError("val_fraction must lie in [0,1)");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0,1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
}

ObjectiveOptions TrainConfig::objective_options() const {
  ObjectiveOptions o;
  o.prior = prior;
  o.e0_mode = e0_mode;
  o.normalize_pairs = normalize_pairs;
  o.kl_sign = kl_sign;
  o.include_kl = !no_debias;
  return o;
}

bool operator==(const TrainConfig& a, const TrainConfig& b) { return to_json(a) == to_json(b); }

json to_json(const TrainConfig& c) {
  return json{{"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"lr", c.lr},
              {"hidden", c.hidden},
              {"estimator_hidden", c.estimator_hidden},
              {"prior", c.prior.p_e},
              {"lambda_kl", c.prior.lambda_kl},
              {"e0_mode", to_string(c.e0_mode)},
              {"kl_sign", c.kl_sign},
              {"seed", c.seed},
              {"patience", c.patience},
              {"val_fraction", c.val_fraction},
              {"estep", to_string(c.estep)},
              {"normalize_pairs", c.normalize_pairs},
              {"no_debias", c.no_debias},
              {"dropout", c.dropout},
              {"weight_decay", c.weight_decay}};
}

TrainConfig train_config_from_json(const json& j, TrainConfig c) {
  if (!j.is_object()) throw ConfigError("train config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "epochs") c.epochs = v.get<int>();
      else if (key == "batch_size") c.batch_size = v.get<int>();
      else if (key == "lr") c.lr = v.get<double>();
      else if (key == "hidden") c.hidden = v.get<int>();
      else if (key == "estimator_hidden") c.estimator_hidden = v.get<int>();
      else if (key == "prior") c.prior.p_e = v.get<double>();
      else if (key == "lambda_kl") c.prior.lambda_kl = v.get<double>();
      else if (key == "e0_mode") c.e0_mode = parse_e0_mode(v.get<std::string>());
      else if (key == "kl_sign") c.kl_sign = v.get<int>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "patience") c.patience = v.get<int>();
      else if (key == "val_fraction") c.val_fraction = v.get<double>();
      else if (key == "estep") c.estep = parse_estep_mode(v.get<std::string>());
      else if (key == "normalize_pairs") c.normalize_pairs = v.get<bool>();
      else if (key == "no_debias") c.no_debias = v.get<bool>();
      else if (key == "dropout") c.dropout = v.get<double>();
      else if (key == "weight_decay") c.weight_decay = v.get<double>();
      else throw ConfigError("unknown train config key '" + key + "'");
    }
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("train config: ") + ex.what());
  }
  return c;
}

bool operator==(const TrainReport& a, const TrainReport& b) { return to_json(a) == to_json(b); }

json to_json(const TrainReport& r) {
  json epochs = json::array();
  for (std::size_t i = 0; i < r.epochs.size(); ++i) {
    const auto& e = r.epochs[i];
    epochs.push_back({{"epoch", i},
                      {"l_cl", e.cl},
                      {"l_reg", e.reg},
                      {"l_kl", e.kl},
                      {"total", e.total},
                      {"mean_q", e.mean_q},
                      {"train_accuracy", e.train_accuracy},
                      {"val_accuracy", e.val_accuracy}});
  }
  json steps = json::array();
  for (const auto& s : r.steps) {
    steps.push_back({{"epoch", s.epoch},
                     {"batch", s.batch},
                     {"l_cl", s.cl},
                     {"l_reg", s.reg},
                     {"l_kl", s.kl},
                     {"total", s.total}});
  }
  return json{{"config", to_json(r.config)},
              {"best_epoch", r.best_epoch},
              {"epochs", std::move(epochs)},
              {"steps", std::move(steps)},
              {"final_q", r.final_q}};
}

void write_report_csv(const TrainReport& r, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.precision(17);
  out << "epoch,l_cl,l_reg,l_kl,total,mean_q,train_accuracy,val_accuracy\n";
  for (std::size_t i = 0; i < r.epochs.size(); ++i) {
    const auto& e = r.epochs[i];
    out << i << ',' << e.cl << ',' << e.reg << ',' << e.kl << ',' << e.total << ',' << e.mean_q
        << ',' << e.train_accuracy << ',' << e.val_accuracy << '\n';
  }
}

std::vector<std::size_t> epoch_order(std::uint64_t seed, int epoch, std::size_t n) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(derive_seed(seed, {kSeedShuffle, static_cast<std::uint64_t>(epoch)}));
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

std::uint64_t negative_seed(std::uint64_t seed, int epoch, std::size_t graph_index) {
  return derive_seed(seed, {kSeedNegatives, static_cast<std::uint64_t>(static_cast<std::int64_t>(epoch)),
                            graph_index});
}

Prediction predict(const PropagationGraph& graph, const ParamStore& params) {
  const auto dims = dims_of(params);
  if (graph.feature_dim() != dims.feature_dim) {
    throw DataError("predict: graph feature dim " + std::to_string(graph.feature_dim()) +
                    " does not match model dim " + std::to_string(dims.feature_dim));
  }
  Prediction p;
  p.probs = classifier_forward(graph, normalize_adjacency(graph), params);
  p.label = static_cast<int>(std::max_element(p.probs.begin(), p.probs.end()) - p.probs.begin());
  return p;
}

double accuracy(const Dataset& ds, const ParamStore& params) {
  if (ds.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& g : ds.graphs) correct += predict(g, params).label == g.label ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

namespace {

struct Prepared {
  const PropagationGraph* graph;
  NormalizedAdjacency adj;
};

bool argmax_matches(const Tensor2D& logits, int label) {
  Eigen::Index best = 0;
  logits.row(0).maxCoeff(&best);
  return static_cast<int>(best) == label;
}

}  // namespace

EnvPosterior infer_dataset_posterior(const Dataset& ds, const ParamStore& params,
                                     const TrainConfig& config, int epoch) {
  const auto layout = ModelParams::resolve(params);
  const auto options = config.objective_options();
  EnvPosterior out;
  out.q.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& g = ds.graphs[i];
    const auto pairs = sample_negatives(g, negative_seed(config.seed, epoch, i));
    Tape tape(params);
    const GraphTerms t = graph_terms(tape, g, normalize_adjacency(g), pairs, layout, options);
    out.q.push_back(posterior_of(tape, std::span(&t, 1), config.prior).q.front());
  }
  return out;
}

TrainResult train(const Dataset& train_ds, const TrainConfig& config,
                  const EpochObserver& observer) {
  config.validate();
  if (train_ds.empty()) throw DataError("train: empty dataset");
  Dataset checked = train_ds;
  validate(checked);

  ModelDims dims;
  dims.feature_dim = checked.feature_dim;
  dims.hidden = config.hidden;
  dims.estimator_hidden = config.estimator_hidden;
  dims.label_count = checked.label_count;

  TrainResult result{init_model(dims, config.seed), {}};
  ParamStore& params = result.params;
  TrainReport& report = result.report;
  report.config = config;
  const auto layout = ModelParams::resolve(params);
  const auto options = config.objective_options();

  const auto [train_idx, val_idx] =
      split_indices(checked, config.val_fraction, derive_seed(config.seed, {kSeedSplit}));
  std::vector<Prepared> prepared;
  prepared.reserve(checked.size());
  for (const auto& g : checked.graphs) prepared.push_back({&g, normalize_adjacency(g)});

  auto eval_accuracy = [&](const std::vector<std::size_t>& idx) {
    std::size_t correct = 0;
    for (std::size_t i : idx) {
      Tape tape(params);
      const Var logits =
          classifier_logits(tape, *prepared[i].graph, prepared[i].adj, layout.classifier);
      correct += argmax_matches(tape.value(logits), prepared[i].graph->label) ? 1 : 0;
    }
    return idx.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(idx.size());
  };

  AdamState adam(params, AdamOptions{.weight_decay = config.weight_decay});
  std::mt19937_64 dropout_rng(derive_seed(config.seed, {kSeedDropout}));
  const Dropout dropout{config.dropout, config.dropout > 0.0 ? &dropout_rng : nullptr};

  ParamStore best = params;
  double best_val = -1.0;
  int since_best = 0;
  const auto batch = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto order = epoch_order(config.seed, epoch, train_idx.size());
    std::vector<PairSample> pairs(checked.size());
    for (std::size_t i : train_idx) {
      pairs[i] = sample_negatives(*prepared[i].graph, negative_seed(config.seed, epoch, i));
    }

    std::vector<double> epoch_q(checked.size(), 1.0);
    if (!config.no_debias && config.estep == EStepMode::kPerEpoch) {
      for (std::size_t i : train_idx) {
        Tape tape(params);
        const GraphTerms t =
            graph_terms(tape, *prepared[i].graph, prepared[i].adj, pairs[i], layout, options);
        epoch_q[i] = posterior_of(tape, std::span(&t, 1), config.prior).q.front();
      }
    }

    EpochStats stats;
    std::size_t seen = 0;
    std::size_t correct = 0;
    double q_sum = 0.0;
    int batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += batch, ++batch_index) {
      const std::size_t stop = std::min(order.size(), start + batch);
      Tape tape(params);
      std::vector<GraphTerms> terms;
      std::vector<std::size_t> members;
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t i = train_idx[order[k]];
        members.push_back(i);
        const auto& prep = prepared[i];
        const Var logits = classifier_logits(tape, *prep.graph, prep.adj, layout.classifier, dropout);
        correct += argmax_matches(tape.value(logits), prep.graph->label) ? 1 : 0;
        const LabelLogLik y = label_loglik(tape, logits, prep.graph->label, options.e0_mode);
        const StructureLogLik a = structure_loglik(tape, *prep.graph, pairs[i], layout.estimator,
                                                   options.e0_mode, options.normalize_pairs);
        terms.push_back({y.e1, y.e0, a.e1, a.e0});
      }

      std::vector<double> q(terms.size(), 1.0);
      if (!config.no_debias) {
        if (config.estep == EStepMode::kPerBatch) {
          q = posterior_of(tape, terms, config.prior).q;
        } else {
          for (std::size_t k = 0; k < members.size(); ++k) q[k] = epoch_q[members[k]];
        }
      }

      const LossVars losses = assemble_losses(tape, terms, q, options);
      const double total = tape.scalar(losses.total);
      if (!std::isfinite(total)) {
        throw NumericalError("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batch_index));
      }
      Gradients grads = [&] {
        try {
          return tape.backward(losses.total);
        } catch (const NumericalError& ex) {
          throw NumericalError(std::string(ex.what()) + " at epoch " + std::to_string(epoch) +
                               ", batch " + std::to_string(batch_index));
        }
      }();
      adam.step(params, grads, config.lr);

      StepStats step{epoch, batch_index, tape.scalar(losses.cl), tape.scalar(losses.reg),
                     tape.scalar(losses.kl), total};
      report.steps.push_back(step);
      const auto nb = static_cast<double>(terms.size());
      stats.cl += step.cl * nb;
      stats.reg += step.reg * nb;
      stats.kl += step.kl * nb;
      stats.total += step.total * nb;
      q_sum += std::accumulate(q.begin(), q.end(), 0.0);
      seen += terms.size();
    }
    const auto n_seen = static_cast<double>(seen);
    stats.cl /= n_seen;
    stats.reg /= n_seen;
    stats.kl /= n_seen;
    stats.total /= n_seen;
    stats.mean_q = q_sum / n_seen;
    stats.train_accuracy = static_cast<double>(correct) / n_seen;
    stats.val_accuracy = eval_accuracy(val_idx.empty() ? train_idx : val_idx);
    report.epochs.push_back(stats);
    if (observer) observer(epoch, stats, params);

    if (stats.val_accuracy > best_val) {
      best_val = stats.val_accuracy;
      best = params;
      report.best_epoch = epoch;
      since_best = 0;
    } else if (config.patience > 0 && ++since_best >= config.patience) {
      break;
    }
  }
  if (config.epochs > 0) params = std::move(best);

  report.final_q = infer_dataset_posterior(checked, params, config).q;
  return result;
}

}  // namespace envdebias
