#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "envdebias/metrics.hpp"

namespace envdebias {
namespace {

TEST(Metrics, PerfectPredictor) {
  const std::vector<int> y{0, 1, 1, 0, 1};
  const auto m = compute_metrics(y, y);
  EXPECT_EQ(m.accuracy, 1.0);
  EXPECT_EQ(m.f1_true, 1.0);
  EXPECT_EQ(m.f1_fake, 1.0);
  EXPECT_EQ(m.confusion[0][0], 2);
  EXPECT_EQ(m.confusion[1][1], 3);
  EXPECT_EQ(m.total(), 5);
}

TEST(Metrics, SingleClassPredictor) {
  const std::vector<int> y{0, 1, 0, 1}, p{0, 0, 0, 0};
  const auto m = compute_metrics(y, p);
  EXPECT_EQ(m.accuracy, 0.5);
  EXPECT_EQ(m.f1_fake, 0.0);
  EXPECT_NEAR(m.f1_true, 2.0 / 3.0, 1e-15);
}

// Confusion [[3, 1], [2, 4]] worked by hand: fake precision 4/5, recall 4/6.
TEST(Metrics, HandWorkedConfusion) {
  std::vector<int> y, p;
  auto add = [&](int a, int b, int n) {
    for (int i = 0; i < n; ++i) {
      y.push_back(a);
      p.push_back(b);
    }
  };
  add(0, 0, 3);
  add(0, 1, 1);
  add(1, 0, 2);
  add(1, 1, 4);
  const auto m = compute_metrics(y, p);
  EXPECT_NEAR(m.accuracy, 0.7, 1e-15);
  EXPECT_NEAR(m.f1_fake, 2.0 * 0.8 * (4.0 / 6.0) / (0.8 + 4.0 / 6.0), 1e-15);
  EXPECT_NEAR(m.f1_true, 2.0 * 0.6 * 0.75 / (0.6 + 0.75), 1e-15);
  const auto j = to_json(m);
  EXPECT_EQ(j["confusion"]["fake_as_true"], 2);
  EXPECT_EQ(j["count"], 10);
}

TEST(Metrics, EmptyAndInvalid) {
  const std::vector<int> none;
  EXPECT_EQ(compute_metrics(none, none).accuracy, 0.0);
  const std::vector<int> a{0, 1}, b{0};
  EXPECT_THROW(compute_metrics(a, b), std::invalid_argument);
  const std::vector<int> bad{2, 0};
  EXPECT_THROW(compute_metrics(bad, a), std::invalid_argument);
}

TEST(RocAuc, KnownValues) {
  const std::vector<double> s{0.1, 0.4, 0.35, 0.8};
  const std::vector<bool> pos{false, false, true, true};
  EXPECT_DOUBLE_EQ(roc_auc(s, pos), 0.75);
  const std::vector<double> tied{0.5, 0.5, 0.5, 0.5};
  EXPECT_DOUBLE_EQ(roc_auc(tied, pos), 0.5);
  const std::vector<bool> all{true, true, true, true};
  EXPECT_DOUBLE_EQ(roc_auc(s, all), 0.5);
  const std::vector<double> perfect{0.0, 0.1, 0.9, 1.0};
  EXPECT_DOUBLE_EQ(roc_auc(perfect, pos), 1.0);
}

TEST(RocAuc, MatchesPairCounting) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> level(0, 5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> s(30);
    std::vector<bool> pos(30);
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] = level(rng) / 5.0;
      pos[i] = rng() % 2;
    }
    double wins = 0.0, pairs = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
      for (std::size_t j = 0; j < s.size(); ++j)
        if (pos[i] && !pos[j]) {
          pairs += 1.0;
          wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
        }
    if (pairs == 0.0) continue;
    EXPECT_NEAR(roc_auc(s, pos), wins / pairs, 1e-12);
  }
}

TEST(Histogram, BinsAndEdges) {
  const std::vector<double> v{0.0, 0.049, 0.05, 0.5, 0.999, 1.0};
  const auto h = histogram01(v);
  ASSERT_EQ(h.size(), 20u);
  EXPECT_EQ(h[0], 2);
  EXPECT_EQ(h[1], 1);
  EXPECT_EQ(h[10], 1);
  EXPECT_EQ(h[19], 2);
  long total = 0;
  for (long c : h) total += c;
  EXPECT_EQ(total, 6);
  EXPECT_EQ(histogram01(v, 2)[1], 3);
}

}  // namespace
}  // namespace envdebias
