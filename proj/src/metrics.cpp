#include "iprop/metrics.hpp"

#include <algorithm>
#include <map>

#include "iprop/error.hpp"

namespace iprop {

namespace {

double safe_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

double f1_of(double tp, double fp, double fn) {
  const double p = safe_div(tp, tp + fp);
  const double r = safe_div(tp, tp + fn);
  return safe_div(2.0 * p * r, p + r);
}

/// (gold index, predicted index or nullopt) per instance, joined on id.
std::vector<std::pair<std::size_t, std::optional<std::size_t>>> align(
    const std::vector<Prediction>& predictions, const std::vector<GoldLabel>& gold,
    const LabelSet& label_set) {
  if (predictions.empty() && gold.empty()) {
    throw Error(ErrorCode::EmptyEvaluation, "nothing to evaluate");
  }
  std::map<InstanceId, const Prediction*> by_id;
  for (const auto& p : predictions) {
    if (!by_id.emplace(p.instance_id, &p).second) {
      throw Error(ErrorCode::IdMismatch,
                  "duplicate prediction for instance " + std::to_string(p.instance_id));
    }
  }
  if (by_id.size() != gold.size()) {
    throw Error(ErrorCode::IdMismatch, "predictions and gold cover different instances");
  }
  std::vector<std::pair<std::size_t, std::optional<std::size_t>>> rows;
  rows.reserve(gold.size());
  for (const auto& [id, label] : gold) {
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      throw Error(ErrorCode::IdMismatch, "no prediction for instance " + std::to_string(id));
    }
    auto g = label_set.index_of(label);
    if (!g) throw Error(ErrorCode::IdMismatch, "gold label '" + label + "' outside label set");
    std::optional<std::size_t> p;
    if (it->second->predicted_label) p = label_set.index_of(*it->second->predicted_label);
    rows.emplace_back(*g, p);
    by_id.erase(it);  // catches duplicate gold ids
  }
  return rows;
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(LabelSet labels)
    : labels_(std::move(labels)), counts_(labels_.size() * (labels_.size() + 1), 0) {}

std::size_t ConfusionMatrix::total() const noexcept {
  std::size_t t = 0;
  for (auto c : counts_) t += c;
  return t;
}

std::size_t ConfusionMatrix::support(std::size_t label) const {
  std::size_t s = 0;
  for (std::size_t p = 0; p < cols(); ++p) s += at(label, p);
  return s;
}

std::size_t ConfusionMatrix::predicted_count(std::size_t label) const {
  std::size_t s = 0;
  for (std::size_t g = 0; g < labels_.size(); ++g) s += at(g, label);
  return s;
}

double ConfusionMatrix::precision(std::size_t label) const {
  return safe_div(static_cast<double>(true_positives(label)),
                  static_cast<double>(predicted_count(label)));
}

double ConfusionMatrix::recall(std::size_t label) const {
  return safe_div(static_cast<double>(true_positives(label)), static_cast<double>(support(label)));
}

double ConfusionMatrix::f1(std::size_t label) const {
  const double tp = static_cast<double>(true_positives(label));
  return f1_of(tp, static_cast<double>(predicted_count(label)) - tp,
               static_cast<double>(support(label)) - tp);
}

double ConfusionMatrix::weighted_f1() const {
  const double n = static_cast<double>(total());
  if (n == 0.0) return 0.0;
  double acc = 0.0;
  for (std::size_t c = 0; c < labels_.size(); ++c) {
    acc += static_cast<double>(support(c)) / n * f1(c);
  }
  return acc;
}

ConfusionMatrix confusion(const std::vector<Prediction>& predictions,
                          const std::vector<GoldLabel>& gold, const LabelSet& label_set) {
  ConfusionMatrix m(label_set);
  for (const auto& [g, p] : align(predictions, gold, label_set)) {
    m.add(g, p.value_or(m.unknown_column()));
  }
  return m;
}

double weighted_f1(const std::vector<Prediction>& predictions, const std::vector<GoldLabel>& gold,
                   const LabelSet& label_set) {
  const auto rows = align(predictions, gold, label_set);
  const auto k = label_set.size();
  std::vector<double> tp(k, 0.0), fp(k, 0.0), fn(k, 0.0), support(k, 0.0);
  for (const auto& [g, p] : rows) {
    support[g] += 1.0;
    if (p == g) {
      tp[g] += 1.0;
    } else {
      fn[g] += 1.0;
      if (p) fp[*p] += 1.0;
    }
  }
  const double n = static_cast<double>(rows.size());
  double acc = 0.0;
  for (std::size_t c = 0; c < k; ++c) acc += support[c] / n * f1_of(tp[c], fp[c], fn[c]);
  return std::clamp(acc, 0.0, 1.0);
}

}  // namespace iprop
