#include "iprop/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "iprop/error.hpp"
#include "iprop/text.hpp"

namespace iprop {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::MalformedContent: return "MalformedContent";
    case ErrorCode::SingleLabelDataset: return "SingleLabelDataset";
    case ErrorCode::StratificationImpossible: return "StratificationImpossible";
    case ErrorCode::SizeTooLarge: return "SizeTooLarge";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::LabelInconsistency: return "LabelInconsistency";
    case ErrorCode::ProviderUnreachable: return "ProviderUnreachable";
    case ErrorCode::AuthFailure: return "AuthFailure";
    case ErrorCode::ResponseEmpty: return "ResponseEmpty";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::BadResponse: return "BadResponse";
    case ErrorCode::ParaphraseEmpty: return "ParaphraseEmpty";
    case ErrorCode::IdMismatch: return "IdMismatch";
    case ErrorCode::EmptyEvaluation: return "EmptyEvaluation";
    case ErrorCode::IterationFailed: return "IterationFailed";
    case ErrorCode::InvalidChoice: return "InvalidChoice";
    case ErrorCode::InvalidState: return "InvalidState";
    case ErrorCode::NotFound: return "NotFound";
  }
  return "Unknown";
}

LabelSet::LabelSet(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.size() < 2) {
    throw Error(ErrorCode::InvalidConfig, "a label set needs at least 2 labels");
  }
  std::set<std::string> seen;
  for (const auto& l : labels_) {
    if (text::trim(l).empty()) throw Error(ErrorCode::InvalidConfig, "empty label");
    if (!seen.insert(text::fold_case(l)).second) {
      throw Error(ErrorCode::InvalidConfig, "duplicate label '" + l + "'");
    }
  }
}

std::optional<std::size_t> LabelSet::index_of(std::string_view label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (text::iequals(labels_[i], label)) return i;
  }
  return std::nullopt;
}

std::string LabelSet::joined() const {
  std::string out;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (i) out += ", ";
    out += labels_[i];
  }
  return out;
}

void EvaluationCache::retain(const std::vector<PromptId>& keep) {
  auto drop = [&](auto& m) {
    std::erase_if(m, [&](const auto& kv) {
      return std::find(keep.begin(), keep.end(), kv.first.first) == keep.end();
    });
  };
  drop(predictions);
  drop(explanations);
}

std::string_view to_string(PromptOrigin origin) noexcept {
  return origin == PromptOrigin::seed ? "seed" : "paraphrase";
}

std::string_view to_string(ProviderKind kind) noexcept {
  switch (kind) {
    case ProviderKind::openai_compatible: return "openai-compatible";
    case ProviderKind::local_server: return "local-server";
    case ProviderKind::mock: return "mock";
  }
  return "mock";
}

std::string_view to_string(SessionStatus status) noexcept {
  switch (status) {
    case SessionStatus::working: return "working";
    case SessionStatus::awaiting_selection: return "awaiting_selection";
    case SessionStatus::finished: return "finished";
  }
  return "working";
}

std::string_view to_string(SamplingStrategy) noexcept { return "uniform"; }

PromptOrigin parse_prompt_origin(std::string_view name) {
  if (name == "seed") return PromptOrigin::seed;
  if (name == "paraphrase") return PromptOrigin::paraphrase;
  throw Error(ErrorCode::InvalidConfig, "unknown prompt origin '" + std::string(name) + "'");
}

ProviderKind parse_provider_kind(std::string_view name) {
  if (name == "openai-compatible") return ProviderKind::openai_compatible;
  if (name == "local-server") return ProviderKind::local_server;
  if (name == "mock") return ProviderKind::mock;
  throw Error(ErrorCode::InvalidConfig, "unknown provider '" + std::string(name) + "'");
}

SessionStatus parse_session_status(std::string_view name) {
  if (name == "working") return SessionStatus::working;
  if (name == "awaiting_selection") return SessionStatus::awaiting_selection;
  if (name == "finished") return SessionStatus::finished;
  throw Error(ErrorCode::InvalidConfig, "unknown session status '" + std::string(name) + "'");
}

SamplingStrategy parse_sampling_strategy(std::string_view name) {
  if (name == "uniform") return SamplingStrategy::uniform;
  throw Error(ErrorCode::InvalidConfig, "unknown sampling strategy '" + std::string(name) + "'");
}

namespace {

bool is_subset(const std::vector<InstanceId>& part, const std::vector<InstanceId>& whole) {
  std::set<InstanceId> w(whole.begin(), whole.end());
  return std::all_of(part.begin(), part.end(), [&](InstanceId id) { return w.count(id) > 0; });
}

}  // namespace

std::vector<std::string> check_invariants(const Dataset& dataset) {
  std::vector<std::string> v;
  if (dataset.instances.empty()) v.emplace_back("dataset is empty");
  if (dataset.label_set.size() < 2) v.emplace_back("label set has fewer than 2 labels");
  std::vector<bool> used(dataset.label_set.size(), false);
  for (std::size_t i = 0; i < dataset.instances.size(); ++i) {
    const auto& inst = dataset.instances[i];
    if (inst.id != i) v.push_back("instance ids are not contiguous at position " + std::to_string(i));
    if (text::trim(inst.text).empty()) v.push_back("instance " + std::to_string(i) + " has empty text");
    auto idx = dataset.label_set.index_of(inst.gold_label);
    if (!idx) {
      v.push_back("instance " + std::to_string(i) + " has label outside the label set");
    } else {
      used[*idx] = true;
    }
  }
  for (std::size_t k = 0; k < used.size(); ++k) {
    if (!used[k]) v.push_back("label '" + dataset.label_set[k] + "' has no instance");
  }
  return v;
}

std::vector<std::string> check_invariants(const Dataset& dataset, const Splits& splits,
                                          const std::array<double, 3>& ratios) {
  std::vector<std::string> v;
  std::vector<int> owner(dataset.size(), -1);
  const std::array<const std::vector<InstanceId>*, 3> parts{&splits.train, &splits.validation,
                                                            &splits.test};
  for (int s = 0; s < 3; ++s) {
    for (InstanceId id : *parts[s]) {
      if (id >= dataset.size()) {
        v.push_back("split contains unknown id " + std::to_string(id));
      } else if (owner[id] != -1) {
        v.push_back("id " + std::to_string(id) + " appears in more than one split slot");
      } else {
        owner[id] = s;
      }
    }
  }
  if (std::find(owner.begin(), owner.end(), -1) != owner.end()) {
    v.emplace_back("splits do not cover the whole dataset");
  }
  // per-label counts within 1 of the exact proportional count
  const auto n_labels = dataset.label_set.size();
  std::vector<std::array<std::size_t, 3>> counts(n_labels, {0, 0, 0});
  std::vector<std::size_t> totals(n_labels, 0);
  for (InstanceId id = 0; id < dataset.size(); ++id) {
    auto idx = dataset.label_set.index_of(dataset.at(id).gold_label);
    if (!idx) continue;
    ++totals[*idx];
    if (owner[id] >= 0) ++counts[*idx][static_cast<std::size_t>(owner[id])];
  }
  for (std::size_t k = 0; k < n_labels; ++k) {
    for (std::size_t s = 0; s < 3; ++s) {
      const double exact = static_cast<double>(totals[k]) * ratios[s];
      if (std::abs(static_cast<double>(counts[k][s]) - exact) > 1.0 + 1e-9) {
        v.push_back("label '" + dataset.label_set[k] + "' deviates from proportional count in split " +
                    std::to_string(s));
      }
    }
  }
  return v;
}

std::vector<std::string> check_invariants(const SessionConfig& config) {
  std::vector<std::string> v;
  double sum = 0.0;
  for (double r : config.split_ratios) {
    if (!(r > 0.0)) v.emplace_back("split ratios must be positive");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) v.emplace_back("split ratios must sum to 1");
  if (config.n_paraphrases < 1) v.emplace_back("n_paraphrases must be >= 1");
  if (config.max_iterations < 1) v.emplace_back("max_iterations must be >= 1");
  if (config.sampling.alpha_size < 1) v.emplace_back("alpha_size must be positive");
  if (config.sampling.beta_size < 1) v.emplace_back("beta_size must be positive");
  if (config.generation.temperature < 0.0 || config.generation.rephrase_temperature < 0.0) {
    v.emplace_back("temperatures must be >= 0");
  }
  if (config.generation.max_tokens < 1) v.emplace_back("max_tokens must be positive");
  if (config.model_name.empty()) v.emplace_back("model_name must not be empty");

  const auto& t = config.meta_prompts;
  auto require = [&](const std::string& tmpl, std::string_view which,
                     std::initializer_list<std::string_view> names) {
    for (auto name : names) {
      if (!text::has_placeholder(tmpl, name)) {
        v.push_back(std::string(which) + " template lacks {" + std::string(name) + "}");
      }
    }
  };
  require(t.rephrase_template, "rephrase", {"prompt"});
  require(t.classify_template, "classify", {"prompt", "text", "labels"});
  require(t.explain_template, "explain", {"prompt", "text", "label"});
  return v;
}

std::vector<std::string> check_invariants(const SessionState& state) {
  auto v = check_invariants(state.dataset);
  auto c = check_invariants(state.config);
  v.insert(v.end(), c.begin(), c.end());
  auto sp = check_invariants(state.dataset, state.splits, state.config.split_ratios);
  v.insert(v.end(), sp.begin(), sp.end());
  if (!is_subset(state.t_alpha, state.splits.train)) v.emplace_back("t_alpha not within train split");
  if (!is_subset(state.t_beta, state.splits.train)) v.emplace_back("t_beta not within train split");
  if (state.status == SessionStatus::awaiting_selection && state.candidates.size() < 2) {
    v.emplace_back("awaiting selection with fewer than 2 candidates");
  }
  if (state.status == SessionStatus::working && !state.candidates.empty()) {
    v.emplace_back("working state still holds presented candidates");
  }
  if (state.trajectory.size() > state.config.max_iterations) {
    v.emplace_back("trajectory longer than max_iterations");
  }
  for (std::size_t i = 0; i < state.trajectory.size(); ++i) {
    const auto& r = state.trajectory[i];
    if (r.iteration != i) v.emplace_back("trajectory iterations have gaps");
    if (r.train_subset_f1 < 0.0 || r.train_subset_f1 > 1.0 || r.validation_f1 < 0.0 ||
        r.validation_f1 > 1.0) {
      v.emplace_back("trajectory F1 outside [0,1]");
    }
  }
  if (state.iteration != state.trajectory.size()) {
    v.emplace_back("iteration counter disagrees with trajectory length");
  }
  for (const auto& p : state.incumbents) {
    const bool seed = p.origin == PromptOrigin::seed;
    if (seed != !p.parent_id.has_value()) v.emplace_back("prompt origin/parent mismatch");
    if (seed && p.iteration_created != 0) v.emplace_back("seed prompt created after iteration 0");
    if (p.id >= state.next_prompt_id) v.emplace_back("prompt id not below next_prompt_id");
  }
  for (const auto& pres : state.candidates) {
    if (pres.train_subset_f1 < 0.0 || pres.train_subset_f1 > 1.0) {
      v.emplace_back("candidate F1 outside [0,1]");
    }
    if (pres.shown_examples.size() != state.t_alpha.size()) {
      v.emplace_back("candidate does not show exactly T_alpha");
    } else {
      for (std::size_t i = 0; i < state.t_alpha.size(); ++i) {
        if (pres.shown_examples[i].instance.id != state.t_alpha[i]) {
          v.emplace_back("shown examples out of T_alpha order");
          break;
        }
      }
    }
  }
  return v;
}

void validate(const SessionConfig& config) {
  auto v = check_invariants(config);
  if (v.empty()) return;
  std::string msg = "invalid configuration:";
  for (const auto& s : v) msg += " " + s + ";";
  throw Error(ErrorCode::InvalidConfig, msg, nlohmann::json{{"violations", v}});
}

}  // namespace iprop
