#pragma once

#include <string>
#include <utility>
#include <vector>

#include "iprop/types.hpp"

namespace iprop {

using GoldLabel = std::pair<InstanceId, std::string>;

/// Counts indexed (gold, predicted). The predicted axis has one extra column,
/// `unknown_column()`, for UNKNOWN predictions.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(LabelSet labels);

  const LabelSet& label_set() const noexcept { return labels_; }
  std::size_t unknown_column() const noexcept { return labels_.size(); }
  std::size_t at(std::size_t gold, std::size_t predicted) const {
    return counts_.at(gold * cols() + predicted);
  }
  void add(std::size_t gold, std::size_t predicted) { ++counts_.at(gold * cols() + predicted); }
  std::size_t total() const noexcept;

  std::size_t true_positives(std::size_t label) const { return at(label, label); }
  std::size_t support(std::size_t label) const;          // row sum
  std::size_t predicted_count(std::size_t label) const;  // column sum

  double precision(std::size_t label) const;
  double recall(std::size_t label) const;
  double f1(std::size_t label) const;
  /// Support-weighted mean of per-class F1; 0/0 terms count as 0.
  double weighted_f1() const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t cols() const noexcept { return labels_.size() + 1; }

  LabelSet labels_;
  std::vector<std::size_t> counts_;
};

/// Throws IdMismatch if the prediction and gold id sets differ (or contain
/// duplicates) and EmptyEvaluation if both are empty.
ConfusionMatrix confusion(const std::vector<Prediction>& predictions,
                          const std::vector<GoldLabel>& gold, const LabelSet& label_set);

double weighted_f1(const std::vector<Prediction>& predictions, const std::vector<GoldLabel>& gold,
                   const LabelSet& label_set);

}  // namespace iprop
