#pragma once

#include <array>
#include <span>
#include <vector>

#include <json.hpp>

namespace envdebias {

// Binary confusion counts; class 0 is true news, class 1 is fake news.
// confusion[actual][predicted].
struct MetricsReport {
  double accuracy = 0.0;
  double f1_true = 0.0;
  double f1_fake = 0.0;
  std::array<std::array<long, 2>, 2> confusion{};
  long total() const;
};

// Per-class F1 is the harmonic mean of precision and recall; any 0/0 ratio
// counts as 0.
MetricsReport compute_metrics(std::span<const int> labels, std::span<const int> predicted);

nlohmann::json to_json(const MetricsReport& m);

// Area under the ROC curve of `scores` for separating positives from
// negatives (Mann-Whitney, ties count one half). Returns 0.5 when either
// class is absent.
double roc_auc(std::span<const double> scores, const std::vector<bool>& positive);

// Counts of values in `bins` equal-width bins over [0, 1]; 1.0 falls in the last bin.
std::vector<long> histogram01(std::span<const double> values, int bins = 20);

}  // namespace envdebias
