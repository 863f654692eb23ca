#include "envdebias/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace envdebias {

long MetricsReport::total() const {
  return confusion[0][0] + confusion[0][1] + confusion[1][0] + confusion[1][1];
}

namespace {

double safe_ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

double class_f1(const MetricsReport& m, int c) {
  const auto tp = static_cast<double>(m.confusion[c][c]);
  const auto predicted = static_cast<double>(m.confusion[0][c] + m.confusion[1][c]);
  const auto actual = static_cast<double>(m.confusion[c][0] + m.confusion[c][1]);
  const double precision = safe_ratio(tp, predicted);
  const double recall = safe_ratio(tp, actual);
  return safe_ratio(2.0 * precision * recall, precision + recall);
}

}  // namespace

MetricsReport compute_metrics(std::span<const int> labels, std::span<const int> predicted) {
  if (labels.size() != predicted.size()) {
    throw std::invalid_argument("compute_metrics: length mismatch");
  }
  MetricsReport m;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    const int p = predicted[i];
    if (y < 0 || y > 1 || p < 0 || p > 1) throw std::invalid_argument("compute_metrics: label");
    ++m.confusion[static_cast<std::size_t>(y)][static_cast<std::size_t>(p)];
  }
  m.accuracy = safe_ratio(static_cast<double>(m.confusion[0][0] + m.confusion[1][1]),
                          static_cast<double>(m.total()));
  m.f1_true = class_f1(m, 0);
  m.f1_fake = class_f1(m, 1);
  return m;
}

nlohmann::json to_json(const MetricsReport& m) {
  return {{"accuracy", m.accuracy},
          {"f1_true", m.f1_true},
          {"f1_fake", m.f1_fake},
          {"confusion",
           {{"true_as_true", m.confusion[0][0]},
            {"true_as_fake", m.confusion[0][1]},
            {"fake_as_true", m.confusion[1][0]},
            {"fake_as_fake", m.confusion[1][1]}}},
          {"count", m.total()}};
}

double roc_auc(std::span<const double> scores, const std::vector<bool>& positive) {
  if (scores.size() != positive.size()) throw std::invalid_argument("roc_auc: length mismatch");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Average ranks over tie groups.
  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t start = 0; start < idx.size();) {
    std::size_t stop = start;
    while (stop < idx.size() && scores[idx[stop]] == scores[idx[start]]) ++stop;
    const double avg_rank = 0.5 * static_cast<double>(start + stop + 1);
    for (std::size_t k = start; k < stop; ++k) {
      if (positive[idx[k]]) {
        pos_rank_sum += avg_rank;
        ++n_pos;
      }
    }
    start = stop;
  }
  const std::size_t n_neg = scores.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) return 0.5;
  const auto np = static_cast<double>(n_pos);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

std::vector<long> histogram01(std::span<const double> values, int bins) {
  if (bins < 1) throw std::invalid_argument("histogram01: bins must be >= 1");
  std::vector<long> counts(static_cast<std::size_t>(bins), 0);
  for (double v : values) {
    auto b = static_cast<long>(std::clamp(v, 0.0, 1.0) * bins);
    b = std::min<long>(b, bins - 1);
    ++counts[static_cast<std::size_t>(b)];
  }
  return counts;
}

}  // namespace envdebias
