#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "envdebias/checkpoint.hpp"
#include "envdebias/errors.hpp"
#include "envdebias/synthgen.hpp"
#include "envdebias/trainer.hpp"
#include "support.hpp"

namespace envdebias {
namespace {

TrainConfig small_config(std::uint64_t seed) {
  TrainConfig c;
  c.epochs = 25;
  c.batch_size = 16;
  c.hidden = 16;
  c.estimator_hidden = 8;
  c.seed = seed;
  c.patience = 0;
  return c;
}

SyntheticSpec small_spec(std::uint64_t seed) {
  SyntheticSpec s;
  s.n_train = 120;
  s.n_test = 80;
  s.max_nodes = 16;
  s.seed = seed;
  return s;
}

TEST(Trainer, ZeroEpochsReturnsInitialParameters) {
  std::mt19937_64 rng(1);
  const Dataset ds = testing::random_dataset(rng, 10, 3, 5);
  TrainConfig c = small_config(4);
  c.epochs = 0;
  const TrainResult r = train(ds, c);
  EXPECT_TRUE(r.report.epochs.empty());
  EXPECT_TRUE(r.report.steps.empty());
  EXPECT_EQ(r.report.best_epoch, -1);
  const ParamStore init = init_model(dims_of(r.params), 4);
  for (std::size_t i = 0; i < init.size(); ++i) EXPECT_EQ(r.params[i], init[i]);
  EXPECT_EQ(r.report.final_q.size(), ds.size());
}

TEST(Trainer, RejectsBadInput) {
  EXPECT_THROW(train(Dataset{}, small_config(0)), DataError);
  std::mt19937_64 rng(2);
  const Dataset ds = testing::random_dataset(rng, 4, 2, 3);
  TrainConfig c = small_config(0);
  c.batch_size = 0;
  EXPECT_THROW(train(ds, c), ConfigError);
}

// With no environment bias and little noise the content direction alone
// separates the classes.
TEST(Trainer, LearnsSeparableData) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SyntheticSpec s = small_spec(seed);
    s.bias_rate = 0.0;
    s.event_noise = 0.1;
    const auto bundle = generate(s);
    const TrainResult r = train(bundle.train, small_config(seed));
    EXPECT_GE(accuracy(bundle.train, r.params), 0.95) << "seed " << seed;
    EXPECT_GE(accuracy(bundle.test, r.params), 0.9) << "seed " << seed;
  }
}

TEST(Trainer, LossDecreases) {
  const auto bundle = generate(small_spec(3));
  const TrainResult r = train(bundle.train, small_config(3));
  ASSERT_EQ(r.report.epochs.size(), 25u);
  EXPECT_LT(r.report.epochs.back().cl, r.report.epochs.front().cl);
  EXPECT_LT(r.report.epochs.back().reg, r.report.epochs.front().reg);
}

TEST(Trainer, IsDeterministic) {
  const auto bundle = generate(small_spec(5));
  TrainConfig c = small_config(5);
  c.epochs = 6;
  const TrainResult a = train(bundle.train, c);
  const TrainResult b = train(bundle.train, c);
  EXPECT_TRUE(a.report == b.report);
  for (std::size_t i = 0; i < a.params.size(); ++i) EXPECT_EQ(a.params[i], b.params[i]);
  c.seed = 6;
  EXPECT_FALSE(train(bundle.train, c).report == a.report);
}

// A prior of almost 1 pins q at 1, which is the no-debias objective up to a
// vanishing KL term. Per-pair averaging and small graphs keep the likelihood
// evidence far below the prior log-odds (about 27.6 nats).
TEST(Trainer, CertainPriorMatchesNoDebias) {
  SyntheticSpec spec = small_spec(7);
  spec.max_nodes = 6;
  const auto bundle = generate(spec);
  TrainConfig base = small_config(7);
  base.epochs = 3;
  base.normalize_pairs = true;
  TrainConfig certain = base;
  certain.prior.p_e = 1.0 - 1e-12;
  TrainConfig plain = base;
  plain.no_debias = true;
  const TrainReport a = train(bundle.train, certain).report;
  const TrainReport b = train(bundle.train, plain).report;
  ASSERT_EQ(a.steps.size(), b.steps.size());
  for (std::size_t k = 0; k < a.steps.size(); ++k) {
    EXPECT_NEAR(a.steps[k].cl, b.steps[k].cl, 1e-6) << "step " << k;
    EXPECT_NEAR(a.steps[k].reg, b.steps[k].reg, 1e-6) << "step " << k;
    EXPECT_LT(a.steps[k].kl, 1e-6);
    EXPECT_EQ(b.steps[k].kl, 0.0);
  }
  for (const auto& e : a.epochs) EXPECT_GT(e.mean_q, 1.0 - 1e-6);
  for (const auto& e : b.epochs) EXPECT_EQ(e.mean_q, 1.0);
}

TEST(Trainer, PosteriorFavoursUnbiasedGraphs) {
  const auto bundle = generate(small_spec(11));
  const TrainResult r = train(bundle.train, small_config(11));
  double q_biased = 0.0, q_clean = 0.0;
  int n_biased = 0;
  for (std::size_t i = 0; i < bundle.bias_flags.size(); ++i) {
    if (bundle.bias_flags[i]) {
      q_biased += r.report.final_q[i];
      ++n_biased;
    } else {
      q_clean += r.report.final_q[i];
    }
  }
  const int n_clean = static_cast<int>(bundle.bias_flags.size()) - n_biased;
  EXPECT_GT(q_clean / n_clean, q_biased / n_biased);
}

TEST(Trainer, EarlyStoppingKeepsBestEpoch) {
  const auto bundle = generate(small_spec(12));
  TrainConfig c = small_config(12);
  c.epochs = 60;
  c.patience = 3;
  std::vector<ParamStore> snapshots;
  const TrainResult r = train(bundle.train, c, [&](int, const EpochStats&, const ParamStore& p) {
    snapshots.push_back(p);
  });
  const auto& epochs = r.report.epochs;
  ASSERT_GE(r.report.best_epoch, 0);
  EXPECT_LE(epochs.size(), static_cast<std::size_t>(r.report.best_epoch + 1 + c.patience));
  for (std::size_t e = 0; e < epochs.size(); ++e) {
    if (static_cast<int>(e) < r.report.best_epoch)
      EXPECT_LT(epochs[e].val_accuracy, epochs[r.report.best_epoch].val_accuracy);
    else
      EXPECT_LE(epochs[e].val_accuracy, epochs[r.report.best_epoch].val_accuracy);
  }
  const ParamStore& best = snapshots[static_cast<std::size_t>(r.report.best_epoch)];
  for (std::size_t i = 0; i < best.size(); ++i) EXPECT_EQ(r.params[i], best[i]);
}

TEST(Trainer, ScheduleHelpers) {
  const auto a = epoch_order(1, 0, 50);
  std::vector<std::size_t> sorted = a;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::size_t> iota(50);
  std::iota(iota.begin(), iota.end(), std::size_t{0});
  EXPECT_EQ(sorted, iota);
  EXPECT_EQ(a, epoch_order(1, 0, 50));
  EXPECT_NE(a, epoch_order(1, 1, 50));
  EXPECT_NE(negative_seed(1, 0, 3), negative_seed(1, 0, 4));
  EXPECT_NE(negative_seed(1, kFinalPassEpoch, 3), negative_seed(1, 0, 3));
}

TEST(Predict, TieGoesToFirstLabel) {
  ParamStore p = init_model(ModelDims{3, 4, 2, 2}, 0);
  p.set(kParamM2, Tensor2D::Zero(p.at(kParamM2).rows(), p.at(kParamM2).cols()));
  p.set(kParamB2, Tensor2D::Zero(1, 2));
  std::mt19937_64 rng(3);
  const Prediction pred = predict(testing::random_tree(rng, 4, 3), p);
  EXPECT_EQ(pred.label, 0);
  EXPECT_DOUBLE_EQ(pred.probs[0], 0.5);
  EXPECT_THROW(predict(testing::random_tree(rng, 4, 5), p), DataError);
}

TEST(TrainConfigJson, RoundTripAndUnknownKeys) {
  TrainConfig c;
  c.epochs = 7;
  c.prior.p_e = 0.3;
  c.prior.lambda_kl = 0.25;
  c.e0_mode = E0Mode::kGaussianLogit;
  c.estep = EStepMode::kPerEpoch;
  c.kl_sign = -1;
  c.no_debias = true;
  c.seed = 1234567890123ULL;
  EXPECT_TRUE(train_config_from_json(to_json(c)) == c);
  EXPECT_THROW(train_config_from_json({{"epochz", 3}}), ConfigError);
  EXPECT_THROW(train_config_from_json({{"epochs", "three"}}), ConfigError);
  EXPECT_THROW(train_config_from_json({{"estep", "sometimes"}}), ConfigError);
  const TrainConfig partial = train_config_from_json({{"lr", 0.1}});
  EXPECT_EQ(partial.lr, 0.1);
  EXPECT_EQ(partial.epochs, TrainConfig{}.epochs);
}

TEST(TrainConfigJson, Validation) {
  TrainConfig c;
  c.val_fraction = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.prior.p_e = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.kl_sign = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Report, CsvHasOneRowPerEpoch) {
  std::mt19937_64 rng(8);
  const Dataset ds = testing::random_dataset(rng, 12, 3, 5);
  TrainConfig c = small_config(8);
  c.epochs = 4;
  const TrainReport r = train(ds, c).report;
  testing::TempDir dir("report");
  write_report_csv(r, dir / "r.csv");
  std::ifstream in(dir / "r.csv");
  std::string line;
  int rows = 0;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("epoch,l_cl,l_reg,l_kl,total", 0), 0u);
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 4);
  EXPECT_EQ(to_json(r)["config"], to_json(c));
}

TEST(Checkpoint, RoundTripPreservesPredictions) {
  std::mt19937_64 rng(9);
  const Dataset ds = testing::random_dataset(rng, 16, 4, 6);
  TrainConfig c = small_config(9);
  c.epochs = 3;
  const TrainResult r = train(ds, c);
  testing::TempDir dir("ckpt");
  save_checkpoint(r.params, c, dir / "c.json");
  const Checkpoint back = load_checkpoint(dir / "c.json");
  EXPECT_TRUE(back.config == c);
  ASSERT_EQ(back.params.size(), r.params.size());
  for (std::size_t i = 0; i < r.params.size(); ++i) {
    EXPECT_EQ(back.params.name(i), r.params.name(i));
    EXPECT_EQ(back.params[i], r.params[i]);
  }
  for (int k = 0; k < 50; ++k) {
    const auto g = testing::random_tree(rng, 1 + k % 9, 4);
    EXPECT_EQ(predict(g, back.params).probs, predict(g, r.params).probs);
  }
}

TEST(Checkpoint, CorruptFilesAreDataErrors) {
  testing::TempDir dir("ckpt-bad");
  auto expect_versioned_error = [&](const std::string& content) {
    {
      std::ofstream out(dir / "bad.json");
      out << content;
    }
    try {
      load_checkpoint(dir / "bad.json");
      ADD_FAILURE() << "no error for: " << content;
    } catch (const DataError& e) {
      EXPECT_NE(std::string(e.what()).find("v1"), std::string::npos) << e.what();
    }
  };
  expect_versioned_error("{not json");
  expect_versioned_error("{}");
  expect_versioned_error(R"({"format": "other", "format_version": 1})");
  expect_versioned_error(R"({"format": "envdebias-checkpoint", "format_version": 2})");

  const ParamStore p = init_model(ModelDims{2, 3, 2, 2}, 0);
  auto j = checkpoint_to_json(p, TrainConfig{});
  j["params"][0]["data"].erase(0);
  {
    std::ofstream out(dir / "bad.json");
    out << j.dump();
  }
  EXPECT_THROW(load_checkpoint(dir / "bad.json"), DataError);
  EXPECT_THROW(load_checkpoint(dir / "missing.json"), DataError);
}

}  // namespace
}  // namespace envdebias
