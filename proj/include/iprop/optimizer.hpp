#pragma once

#include <functional>
#include <optional>
#include <stop_token>
#include <string>
#include <string_view>
#include <vector>

#include "iprop/llm_client.hpp"
#include "iprop/types.hpp"

namespace iprop {

/// Who picks the preferred prompt among the presented candidates.
struct Selector {
  enum class Kind { human, simulated };
  Kind kind = Kind::simulated;

  static Selector human() { return {Kind::human}; }
  static Selector simulated() { return {Kind::simulated}; }
};

struct BuildOptions {
  std::stop_token stop;
  /// Called after each candidate finishes evaluating: (done, total).
  std::function<void(std::size_t, std::size_t)> on_progress;
};

/// Validates the config and seed prompt, computes the splits and draws T_alpha
/// and T_beta once. The seed prompt gets id 0.
/// Errors: InvalidConfig, LabelInconsistency (details: missing_labels),
/// StratificationImpossible, SizeTooLarge.
SessionState init_session(const SessionConfig& config, const Dataset& dataset,
                          std::string_view seed_prompt_text, std::string dataset_name = {});

/// Paraphrases every incumbent, evaluates incumbents and paraphrases (weighted
/// F1 on T_beta, explained predictions on T_alpha) and moves the session to
/// awaiting_selection. Candidates whose LLM calls fail are dropped as long as
/// two survive; otherwise IterationFailed. AuthFailure always propagates.
std::vector<Presentation> build_candidates(SessionState& state, LlmClient& client,
                                           const BuildOptions& options = {});

/// argmax of train_subset_f1; ties go to the smallest prompt id.
PromptId simulated_choice(const std::vector<Presentation>& candidates);

/// Resolves the selected prompt, scores it on the full validation split and
/// appends a trajectory record. The selected prompt becomes the only
/// incumbent. The session finishes when max_iterations is reached or
/// `stop_after` is set. Errors: InvalidState, InvalidChoice.
void select(SessionState& state, const Selector& selector, std::optional<PromptId> choice,
            LlmClient& client, bool stop_after = false);

/// Marks the session finished. Idempotent.
void terminate(SessionState& state);

/// Headless loop with the simulated selector until the session finishes.
/// `on_iteration` sees the state after every selection (used to persist
/// partial trajectories).
std::vector<TrajectoryRecord> run_simulation(
    const SessionConfig& config, const Dataset& dataset, std::string_view seed_prompt_text,
    LlmClient& client, const std::function<void(const SessionState&)>& on_iteration = {});

/// Random 128-bit id, URL-safe base64 without padding (22 characters).
std::string new_session_id();
/// Current UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

}  // namespace iprop
