#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace iprop {

using InstanceId = std::size_t;
using PromptId = std::size_t;

/// Rendering of a prediction for which no label could be identified.
inline constexpr std::string_view kUnknownLabel = "UNKNOWN";

/// Closed, ordered label vocabulary of a dataset. Labels compare
/// case-insensitively but keep the casing they were first seen with.
class LabelSet {
 public:
  LabelSet() = default;
  /// Throws Error(InvalidConfig) unless there are >= 2 non-empty labels that
  /// are pairwise distinct under case folding.
  explicit LabelSet(std::vector<std::string> labels);

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::size_t size() const noexcept { return labels_.size(); }
  const std::string& operator[](std::size_t i) const { return labels_[i]; }

  std::optional<std::size_t> index_of(std::string_view label) const;
  bool contains(std::string_view label) const { return index_of(label).has_value(); }
  /// Labels joined with ", " in set order.
  std::string joined() const;

  friend bool operator==(const LabelSet&, const LabelSet&) = default;

 private:
  std::vector<std::string> labels_;
};

struct Instance {
  InstanceId id = 0;
  std::string text;
  std::string gold_label;

  friend bool operator==(const Instance&, const Instance&) = default;
};

struct Dataset {
  std::vector<Instance> instances;
  LabelSet label_set;

  const Instance& at(InstanceId id) const { return instances.at(id); }
  std::size_t size() const noexcept { return instances.size(); }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct Splits {
  std::vector<InstanceId> train;
  std::vector<InstanceId> validation;
  std::vector<InstanceId> test;

  friend bool operator==(const Splits&, const Splits&) = default;
};

enum class PromptOrigin { seed, paraphrase };

struct Prompt {
  PromptId id = 0;
  std::string text;
  std::optional<PromptId> parent_id;
  PromptOrigin origin = PromptOrigin::seed;
  std::size_t iteration_created = 0;

  friend bool operator==(const Prompt&, const Prompt&) = default;
};

struct Prediction {
  InstanceId instance_id = 0;
  /// nullopt is the UNKNOWN sentinel: always scored as incorrect.
  std::optional<std::string> predicted_label;
  std::string raw_output;

  bool is_unknown() const noexcept { return !predicted_label.has_value(); }
  std::string_view label_or_unknown() const noexcept {
    return predicted_label ? std::string_view(*predicted_label) : kUnknownLabel;
  }

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

struct ExplainedPrediction {
  Prediction prediction;
  std::string explanation;

  friend bool operator==(const ExplainedPrediction&, const ExplainedPrediction&) = default;
};

struct ShownExample {
  Instance instance;
  ExplainedPrediction explained;

  friend bool operator==(const ShownExample&, const ShownExample&) = default;
};

/// Everything shown to the selector for one candidate prompt.
struct Presentation {
  Prompt prompt;
  std::vector<ShownExample> shown_examples;  // T_alpha, in instance-id order
  double train_subset_f1 = 0.0;              // weighted F1 on T_beta

  friend bool operator==(const Presentation&, const Presentation&) = default;
};

enum class SamplingStrategy { uniform };

struct SamplingConfig {
  std::size_t alpha_size = 5;
  std::size_t beta_size = 20;
  std::uint64_t seed = 0;
  SamplingStrategy alpha_strategy = SamplingStrategy::uniform;
  SamplingStrategy beta_strategy = SamplingStrategy::uniform;

  friend bool operator==(const SamplingConfig&, const SamplingConfig&) = default;
};

enum class ProviderKind { openai_compatible, local_server, mock };

struct GenerationParams {
  double temperature = 0.0;           // classify + explain
  double rephrase_temperature = 1.0;  // paraphrase
  int max_tokens = 256;

  friend bool operator==(const GenerationParams&, const GenerationParams&) = default;
};

/// Meta-prompts for the three LLM roles. Placeholders: {prompt}, {text},
/// {labels}, {label}.
struct MetaPromptTemplates {
  std::string rephrase_template = "Rephrase the following prompt:\n\n{prompt}";
  std::string classify_template =
      "{prompt}\n\nText: {text}\n\n"
      "Answer with exactly one of the following labels and nothing else: {labels}.";
  std::string explain_template =
      "{prompt}\n\nText: {text}\nPredicted label: {label}\n\n"
      "Explain in one or two sentences why this label fits.";

  friend bool operator==(const MetaPromptTemplates&, const MetaPromptTemplates&) = default;
};

struct SessionConfig {
  ProviderKind provider = ProviderKind::mock;
  std::string model_name = "mock";
  std::size_t n_paraphrases = 1;
  SamplingConfig sampling;
  std::array<double, 3> split_ratios{0.70, 0.15, 0.15};
  std::size_t max_iterations = 15;
  GenerationParams generation;
  MetaPromptTemplates meta_prompts;

  friend bool operator==(const SessionConfig&, const SessionConfig&) = default;
};

struct TrajectoryRecord {
  std::size_t iteration = 0;
  PromptId selected_prompt_id = 0;
  double train_subset_f1 = 0.0;
  double validation_f1 = 0.0;

  friend bool operator==(const TrajectoryRecord&, const TrajectoryRecord&) = default;
};

enum class SessionStatus { working, awaiting_selection, finished };

/// Per-session memo of LLM results keyed by (prompt id, instance id).
struct EvaluationCache {
  std::map<std::pair<PromptId, InstanceId>, Prediction> predictions;
  std::map<std::pair<PromptId, InstanceId>, std::string> explanations;

  /// Drops every entry whose prompt is not in `keep`.
  void retain(const std::vector<PromptId>& keep);

  friend bool operator==(const EvaluationCache&, const EvaluationCache&) = default;
};

struct SessionState {
  std::string session_id;
  std::string dataset_name;
  std::string created_at;  // UTC, ISO-8601, seconds precision
  SessionConfig config;
  Dataset dataset;
  Splits splits;
  std::vector<InstanceId> t_alpha;
  std::vector<InstanceId> t_beta;
  std::vector<Prompt> incumbents;          // P
  std::vector<Presentation> candidates;    // presented P u M(P); only while awaiting_selection
  std::size_t iteration = 0;
  std::vector<TrajectoryRecord> trajectory;
  SessionStatus status = SessionStatus::working;
  PromptId next_prompt_id = 0;
  EvaluationCache cache;

  friend bool operator==(const SessionState&, const SessionState&) = default;
};

std::string_view to_string(PromptOrigin origin) noexcept;
std::string_view to_string(ProviderKind kind) noexcept;
std::string_view to_string(SessionStatus status) noexcept;
std::string_view to_string(SamplingStrategy strategy) noexcept;

/// Inverse parsers; throw Error(InvalidConfig) on unknown names.
PromptOrigin parse_prompt_origin(std::string_view name);
ProviderKind parse_provider_kind(std::string_view name);
SessionStatus parse_session_status(std::string_view name);
SamplingStrategy parse_sampling_strategy(std::string_view name);

// Invariant predicates. Each returns human-readable violations; empty means valid.
std::vector<std::string> check_invariants(const Dataset& dataset);
std::vector<std::string> check_invariants(const Dataset& dataset, const Splits& splits,
                                          const std::array<double, 3>& ratios);
std::vector<std::string> check_invariants(const SessionConfig& config);
std::vector<std::string> check_invariants(const SessionState& state);

/// Throws Error(InvalidConfig) listing every violation.
void validate(const SessionConfig& config);

}  // namespace iprop
