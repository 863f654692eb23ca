// envdebias command-line harness: gen, train, eval, inspect-env, sweep.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 data error,
// 3 numerical failure.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "envdebias/checkpoint.hpp"
#include "envdebias/dataset_io.hpp"
#include "envdebias/errors.hpp"
#include "envdebias/metrics.hpp"
#include "envdebias/synthgen.hpp"
#include "envdebias/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace envdebias;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

// Flags are bound to shadow values and copied into the target only when given
// on the command line, so they override the --config file rather than the
// other way round.
class Overrides {
 public:
  template <class T>
  CLI::Option* add(CLI::App* app, const std::string& flag, T& target, const std::string& help) {
    auto value = std::make_shared<T>(target);
    CLI::Option* o = app->add_option(flag, *value, help)->capture_default_str();
    apply_.push_back([o, value, &target] {
      if (o->count() > 0) target = *value;
    });
    return o;
  }

  CLI::Option* add_flag(CLI::App* app, const std::string& flag, bool& target,
                        const std::string& help) {
    CLI::Option* o = app->add_flag(flag, help);
    apply_.push_back([o, &target] {
      if (o->count() > 0) target = true;
    });
    return o;
  }

  template <class T>
  CLI::Option* add_choice(CLI::App* app, const std::string& flag, T& target,
                          std::vector<std::string> choices, T (*parse)(std::string_view),
                          const std::string& help) {
    auto text = std::make_shared<std::string>(to_string(target));
    CLI::Option* o = app->add_option(flag, *text, help)
                         ->check(CLI::IsMember(std::move(choices)))
                         ->capture_default_str();
    apply_.push_back([o, text, parse, &target] {
      if (o->count() > 0) target = parse(*text);
    });
    return o;
  }

  void apply() const {
    for (const auto& f : apply_) f();
  }

 private:
  std::vector<std::function<void()>> apply_;
};

struct Common {
  std::uint64_t seed = 0;
  std::string config_path;
  std::string out = ".";
  CLI::Option* seed_opt = nullptr;
};

// Commands that read their configuration from a checkpoint take no --config.
void add_common(CLI::App* app, Common& c, bool with_config = true) {
  c.seed_opt = app->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  if (with_config) {
    app->add_option("--config", c.config_path, "JSON config file; explicit flags take precedence")
        ->check(CLI::ExistingFile);
  }
  app->add_option("--out", c.out, "Output directory")->capture_default_str();
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& ex) {
    throw DataError(path.string() + ": " + ex.what());
  }
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

// A config file is either a bare object for the command's own section or
// {"synthetic": {...}, "train": {...}}.
json config_section(const std::string& path, const std::string& section) {
  if (path.empty()) return json::object();
  const json j = read_json(path);
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  if (!j.contains("synthetic") && !j.contains("train")) return j;
  for (const auto& [key, _] : j.items()) {
    if (key != "synthetic" && key != "train") {
      throw ConfigError("unknown config section '" + key + "'");
    }
  }
  return j.value(section, json::object());
}

// Accepts a file, or a directory holding `default_name`.
fs::path resolve_data(const std::string& path, const char* default_name) {
  fs::path p(path);
  if (fs::is_directory(p)) p /= default_name;
  return p;
}

void add_train_flags(CLI::App* app, Overrides& o, TrainConfig& c) {
  o.add(app, "--epochs", c.epochs, "Maximum training epochs");
  o.add(app, "--batch-size", c.batch_size, "Graphs per mini-batch");
  o.add(app, "--lr", c.lr, "Adam learning rate");
  o.add(app, "--hidden", c.hidden, "Classifier hidden width");
  o.add(app, "--estimator-hidden", c.estimator_hidden, "Structure estimator width");
  o.add(app, "--prior", c.prior.p_e, "Prior probability of the unbiased environment");
  o.add(app, "--lambda-kl", c.prior.lambda_kl, "Weight of the KL term");
  o.add(app, "--kl-sign", c.kl_sign, "Sign of the KL term (+1 or -1)");
  o.add(app, "--patience", c.patience, "Early-stopping patience in epochs (0 disables)");
  o.add(app, "--val-fraction", c.val_fraction, "Held-out fraction for model selection");
  o.add(app, "--dropout", c.dropout, "Dropout rate");
  o.add(app, "--weight-decay", c.weight_decay, "L2 weight decay");
  o.add_choice(app, "--e0-mode", c.e0_mode, {"uniform", "gaussian-logit"}, &parse_e0_mode,
               "Likelihood model of the biased branch");
  o.add_choice(app, "--estep", c.estep, {"batch", "epoch"}, &parse_estep_mode,
               "Posterior refresh frequency");
  o.add_flag(app, "--normalize-pairs", c.normalize_pairs,
             "Average structure log-likelihoods over pairs instead of summing");
  o.add_flag(app, "--no-debias", c.no_debias, "Baseline: fix every posterior weight to 1");
}

// Defaults, then the config file, then explicit flags. `c` is the storage the
// overrides write into.
void resolve_train_config(const Common& common, const Overrides& o, TrainConfig& c) {
  c = train_config_from_json(config_section(common.config_path, "train"));
  o.apply();
  if (common.seed_opt->count() > 0) c.seed = common.seed;
  c.validate();
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Sample standard deviation; 0 for fewer than two values.
double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// --- gen ---------------------------------------------------------------------

struct GenCmd {
  Common common;
  Overrides overrides;
  SyntheticSpec spec;

  void attach(CLI::App& root) {
    CLI::App* app = root.add_subcommand("gen", "Generate a synthetic biased dataset");
    add_common(app, common);
    auto& o = overrides;
    o.add(app, "--n-train", spec.n_train, "Training graphs");
    o.add(app, "--n-test", spec.n_test, "Test graphs");
    o.add(app, "--dim", spec.feature_dim, "Node feature dimension");
    o.add(app, "--bias-rate", spec.bias_rate, "Fraction of environment-biased training graphs");
    o.add(app, "--causal-strength", spec.causal_strength, "Scale of the causal direction");
    o.add(app, "--bias-strength", spec.bias_strength, "Scale of the environment direction");
    o.add(app, "--biased-causal-scale", spec.biased_causal_scale,
          "Causal scale multiplier inside biased graphs");
    o.add(app, "--noise", spec.noise, "Per-node noise scale");
    o.add(app, "--event-noise", spec.event_noise, "Per-graph shared noise scale");
    o.add(app, "--branching", spec.branching_mean, "Mean children per node");
    o.add(app, "--biased-branching", spec.biased_branching_multiplier,
          "Branching multiplier in biased graphs");
    o.add(app, "--depth-max", spec.depth_max, "Maximum tree depth");
    o.add(app, "--position-strength", spec.position_strength, "Scale of the depth cue");
    o.add(app, "--max-children", spec.max_children, "Cap on children per node");
    o.add(app, "--max-nodes", spec.max_nodes, "Cap on nodes per graph");
    app->callback([this] { run(); });
  }

  void run() {
    spec = synthetic_spec_from_json(config_section(common.config_path, "synthetic"));
    overrides.apply();
    if (common.seed_opt->count() > 0) spec.seed = common.seed;
    spec.validate();
    const auto bundle = generate(spec);
    write_bundle(bundle, spec, common.out);
    const auto biased = std::count(bundle.bias_flags.begin(), bundle.bias_flags.end(), true);
    std::cout << "wrote " << bundle.train.size() << " train (" << biased << " biased) and "
              << bundle.test.size() << " test graphs to " << common.out << '\n';
  }
};

// --- train -------------------------------------------------------------------

struct TrainCmd {
  Common common;
  Overrides overrides;
  TrainConfig config;
  std::string data;

  void attach(CLI::App& root) {
    CLI::App* app = root.add_subcommand("train", "Train a debiased (or baseline) classifier");
    add_common(app, common);
    app->add_option("--data", data, "Training JSONL, or a directory holding train.jsonl")
        ->required();
    add_train_flags(app, overrides, config);
    app->callback([this] { run(); });
  }

  void run() {
    resolve_train_config(common, overrides, config);
    const fs::path path = resolve_data(data, "train.jsonl");
    const Dataset ds = load_jsonl(path);
    fs::create_directories(common.out);
    const auto start = std::chrono::steady_clock::now();
    const TrainResult r = train(ds, config, [](int epoch, const EpochStats& s, const ParamStore&) {
      std::cerr << "epoch " << epoch << " total " << s.total << " mean_q " << s.mean_q << " val "
                << s.val_accuracy << '\n';
    });
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const fs::path out(common.out);
    save_checkpoint(r.params, config, out / "checkpoint.json");
    json report = to_json(r.report);
    report["data"] = path.string();
    report["wall_seconds"] = seconds;
    write_json(out / "report.json", report);
    write_report_csv(r.report, out / "report.csv");
    std::cout << "trained " << r.report.epochs.size() << " epochs (best " << r.report.best_epoch
              << ") in " << seconds << " s; wrote " << (out / "checkpoint.json").string() << '\n';
  }
};

// --- eval --------------------------------------------------------------------

struct EvalCmd {
  Common common;
  std::string checkpoint;
  std::string data;

  void attach(CLI::App& root) {
    CLI::App* app = root.add_subcommand("eval", "Evaluate a checkpoint on labelled data");
    app->add_option("--out", common.out, "Output directory")->capture_default_str();
    app->add_option("--checkpoint", checkpoint, "checkpoint.json, or its directory")->required();
    app->add_option("--data", data, "Test JSONL, or a directory holding test.jsonl")->required();
    app->callback([this] { run(); });
  }

  void run() {
    const Checkpoint ck = load_checkpoint(resolve_data(checkpoint, "checkpoint.json"));
    const fs::path path = resolve_data(data, "test.jsonl");
    const Dataset ds = load_jsonl(path);
    std::vector<int> labels, predicted;
    for (const auto& g : ds.graphs) {
      labels.push_back(g.label);
      predicted.push_back(predict(g, ck.params).label);
    }
    const MetricsReport m = compute_metrics(labels, predicted);
    json j = to_json(m);
    j["config"] = to_json(ck.config);
    j["seed"] = ck.config.seed;
    j["data"] = path.string();
    j["checkpoint"] = checkpoint;
    fs::create_directories(common.out);
    write_json(fs::path(common.out) / "metrics.json", j);
    std::cout << "accuracy " << m.accuracy << " f1_true " << m.f1_true << " f1_fake " << m.f1_fake
              << '\n';
  }
};

// --- inspect-env ---------------------------------------------------------------

struct InspectCmd {
  Common common;
  std::string checkpoint;
  std::string data;
  std::string flags_path;
  double band = 0.2;
  double prior = 0.0;
  CLI::Option* prior_opt = nullptr;

  void attach(CLI::App& root) {
    CLI::App* app =
        root.add_subcommand("inspect-env", "Posterior environment weights of training graphs");
    add_common(app, common, false);
    app->add_option("--checkpoint", checkpoint, "checkpoint.json, or its directory")->required();
    app->add_option("--data", data, "Training JSONL, or a directory holding train.jsonl")
        ->required();
    app->add_option("--bias-flags", flags_path, "bias_flags.json for AUC against ground truth");
    prior_opt = app->add_option("--prior", prior, "Override the checkpoint's prior");
    app->add_option("--band", band, "Half-width of the band around the prior")
        ->capture_default_str();
    app->callback([this] { run(); });
  }

  void run() {
    const Checkpoint ck = load_checkpoint(resolve_data(checkpoint, "checkpoint.json"));
    TrainConfig config = ck.config;
    if (prior_opt->count() > 0) config.prior.p_e = prior;
    // The seed only picks the negative pairs of this pass.
    if (common.seed_opt->count() > 0) config.seed = common.seed;
    config.validate();
    const fs::path path = resolve_data(data, "train.jsonl");
    const Dataset ds = load_jsonl(path);
    const std::vector<double> q = infer_dataset_posterior(ds, ck.params, config).q;

    std::vector<bool> flags;
    if (!flags_path.empty()) {
      flags = load_bias_flags(resolve_data(flags_path, "bias_flags.json"));
      if (flags.size() != q.size()) {
        throw DataError("bias flags hold " + std::to_string(flags.size()) + " entries for " +
                        std::to_string(q.size()) + " graphs");
      }
    }

    const fs::path out(common.out);
    fs::create_directories(out);
    {
      std::ofstream csv(out / "q.csv", std::ios::binary | std::ios::trunc);
      if (!csv) throw DataError("cannot write q.csv");
      csv.precision(17);
      csv << "index,id,label,q" << (flags.empty() ? "" : ",biased") << '\n';
      for (std::size_t i = 0; i < q.size(); ++i) {
        csv << i << ',' << ds.graphs[i].id << ',' << ds.graphs[i].label << ',' << q[i];
        if (!flags.empty()) csv << ',' << (flags[i] ? 1 : 0);
        csv << '\n';
      }
    }
    const int bins = 20;
    const auto hist = histogram01(q, bins);
    {
      std::ofstream csv(out / "q_histogram.csv", std::ios::binary | std::ios::trunc);
      if (!csv) throw DataError("cannot write q_histogram.csv");
      csv << "bin_low,bin_high,count\n";
      for (int b = 0; b < bins; ++b) {
        csv << static_cast<double>(b) / bins << ',' << static_cast<double>(b + 1) / bins << ','
            << hist[static_cast<std::size_t>(b)] << '\n';
      }
    }

    const double p = config.prior.p_e;
    const auto near =
        std::count_if(q.begin(), q.end(), [&](double v) { return std::abs(v - p) <= band; });
    json summary{{"config", to_json(config)},
                 {"data", path.string()},
                 {"checkpoint", checkpoint},
                 {"count", q.size()},
                 {"mean_q", mean_of(q)},
                 {"band", band},
                 {"fraction_near_prior",
                  q.empty() ? 0.0 : static_cast<double>(near) / static_cast<double>(q.size())}};
    if (!flags.empty()) {
      std::vector<bool> unbiased(flags.size());
      for (std::size_t i = 0; i < flags.size(); ++i) unbiased[i] = !flags[i];
      summary["auc_unbiased"] = roc_auc(q, unbiased);
      summary["bias_flags"] = flags_path;
    }
    write_json(out / "env_summary.json", summary);
    std::cout << "mean q " << summary["mean_q"].get<double>();
    if (summary.contains("auc_unbiased")) std::cout << " auc " << summary["auc_unbiased"];
    std::cout << '\n';
  }
};

// --- sweep -------------------------------------------------------------------

struct SweepCmd {
  Common common;
  Overrides overrides;
  TrainConfig config;
  std::string train_path;
  std::string test_path;
  std::vector<double> priors{0.1, 0.3, 0.5, 0.6, 0.7, 0.9, 0.99};
  int n_seeds = 5;
  bool skip_baseline = false;

  void attach(CLI::App& root) {
    CLI::App* app =
        root.add_subcommand("sweep", "Out-of-distribution accuracy across a grid of priors");
    add_common(app, common);
    app->add_option("--data", train_path, "Training JSONL, or a bundle directory")->required();
    app->add_option("--test", test_path, "Test JSONL; defaults to test.jsonl beside --data");
    app->add_option("--priors", priors, "Prior grid")->delimiter(',')->capture_default_str();
    app->add_option("--n-seeds", n_seeds, "Seeds per prior, counting up from --seed")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_flag("--skip-baseline", skip_baseline, "Omit the no-debias reference row");
    add_train_flags(app, overrides, config);
    app->callback([this] { run(); });
  }

  void run() {
    resolve_train_config(common, overrides, config);
    const fs::path train_file = resolve_data(train_path, "train.jsonl");
    const fs::path test_file = test_path.empty() ? train_file.parent_path() / "test.jsonl"
                                                 : resolve_data(test_path, "test.jsonl");
    const Dataset train_ds = load_jsonl(train_file);
    const Dataset test_ds = load_jsonl(test_file);
    for (double p : priors) PriorConfig{p, config.prior.lambda_kl}.validate();

    struct Row {
      std::string name;
      double prior;
      std::vector<double> acc;
    };
    std::vector<Row> rows;
    auto run_row = [&](Row row, bool no_debias) {
      for (int k = 0; k < n_seeds; ++k) {
        TrainConfig c = config;
        c.seed = config.seed + static_cast<std::uint64_t>(k);
        c.no_debias = no_debias;
        if (!no_debias) c.prior.p_e = row.prior;
        const TrainResult r = train(train_ds, c);
        row.acc.push_back(accuracy(test_ds, r.params));
        std::cerr << row.name << " seed " << c.seed << " ood " << row.acc.back() << '\n';
      }
      rows.push_back(std::move(row));
    };
    for (double p : priors) run_row({"prior", p, {}}, false);
    if (!skip_baseline) run_row({"no-debias", 1.0, {}}, true);

    const fs::path out(common.out);
    fs::create_directories(out);
    json table = json::array();
    std::ofstream csv(out / "sweep.csv", std::ios::binary | std::ios::trunc);
    if (!csv) throw DataError("cannot write sweep.csv");
    csv.precision(17);
    csv << "row,prior,mean_ood_accuracy,sd_ood_accuracy,seeds\n";
    for (const Row& r : rows) {
      const double m = mean_of(r.acc), s = sd_of(r.acc);
      csv << r.name << ',' << r.prior << ',' << m << ',' << s << ',' << r.acc.size() << '\n';
      table.push_back({{"row", r.name},
                       {"prior", r.prior},
                       {"mean_ood_accuracy", m},
                       {"sd_ood_accuracy", s},
                       {"accuracies", r.acc}});
      std::cout << r.name << ' ' << r.prior << ": " << m << " +/- " << s << '\n';
    }
    write_json(out / "sweep.json", {{"config", to_json(config)},
                                    {"data", train_file.string()},
                                    {"test", test_file.string()},
                                    {"priors", priors},
                                    {"seeds", n_seeds},
                                    {"rows", table}});
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Environment-debiased fake news detection on propagation graphs"};
  app.require_subcommand(1);
  GenCmd gen;
  TrainCmd train_cmd;
  EvalCmd eval;
  InspectCmd inspect;
  SweepCmd sweep;
  gen.attach(app);
  train_cmd.attach(app);
  eval.attach(app);
  inspect.attach(app);
  sweep.attach(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}
