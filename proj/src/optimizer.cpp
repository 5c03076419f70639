#include "iprop/optimizer.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <ctime>
#include <exception>
#include <random>
#include <thread>

#include "iprop/dataset.hpp"
#include "iprop/error.hpp"
#include "iprop/log.hpp"
#include "iprop/metrics.hpp"
#include "iprop/prompt_ops.hpp"
#include "iprop/text.hpp"

namespace iprop {

namespace {

/// Runs fn(0..n-1) on up to `workers` threads; returns one exception slot per index.
template <typename F>
std::vector<std::exception_ptr> parallel_for(std::size_t n, std::size_t workers, F&& fn) {
  std::vector<std::exception_ptr> errors(n);
  if (n == 0) return errors;
  std::atomic<std::size_t> next{0};
  auto run = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto threads = std::clamp<std::size_t>(workers, 1, n);
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads - 1);
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(run);
    run();
  }
  return errors;
}

RoleContext role_context(const SessionState& state, LlmClient& client) {
  return RoleContext{client, state.config.meta_prompts, state.config.model_name,
                     state.config.generation};
}

void throw_if_cancelled(const std::stop_token& stop) {
  if (stop.stop_requested()) throw Error(ErrorCode::InvalidState, "candidate building cancelled");
}

/// Rethrows the first error that must abort the whole iteration; returns
/// whether any error occurred.
bool triage(const std::vector<std::exception_ptr>& errors, std::string& first_message) {
  bool failed = false;
  for (const auto& e : errors) {
    if (!e) continue;
    try {
      std::rethrow_exception(e);
    } catch (const Error& err) {
      if (err.code() == ErrorCode::AuthFailure || !err.is_provider_failure()) throw;
      if (!failed) first_message = err.what();
      failed = true;
    }
  }
  return failed;
}

std::vector<InstanceId> sorted_union(const std::vector<InstanceId>& a, const std::vector<InstanceId>& b) {
  std::vector<InstanceId> out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

/// Classifies every (prompt, instance) pair missing from the cache.
/// Returns false if any call failed with a recoverable provider error.
bool fill_predictions(const SessionState& state, EvaluationCache& cache, LlmClient& client,
                      const Prompt& prompt, const std::vector<InstanceId>& ids,
                      const std::stop_token& stop, std::string& failure) {
  std::vector<InstanceId> todo;
  for (auto id : ids) {
    if (!cache.predictions.contains({prompt.id, id})) todo.push_back(id);
  }
  const auto ctx = role_context(state, client);
  std::vector<std::optional<Prediction>> results(todo.size());
  auto errors = parallel_for(todo.size(), client.max_in_flight(), [&](std::size_t i) {
    throw_if_cancelled(stop);
    results[i] = classify(prompt, state.dataset.at(todo[i]), state.dataset.label_set, ctx);
  });
  throw_if_cancelled(stop);
  const bool failed = triage(errors, failure);
  for (std::size_t i = 0; i < todo.size(); ++i) {
    if (results[i]) cache.predictions.emplace(std::pair{prompt.id, todo[i]}, std::move(*results[i]));
  }
  return !failed;
}

bool fill_explanations(SessionState& state, LlmClient& client, const Prompt& prompt,
                       const std::stop_token& stop, std::string& failure) {
  std::vector<InstanceId> todo;
  for (auto id : state.t_alpha) {
    if (!state.cache.explanations.contains({prompt.id, id})) todo.push_back(id);
  }
  const auto ctx = role_context(state, client);
  std::vector<std::optional<std::string>> results(todo.size());
  auto errors = parallel_for(todo.size(), client.max_in_flight(), [&](std::size_t i) {
    throw_if_cancelled(stop);
    const auto& pred = state.cache.predictions.at({prompt.id, todo[i]});
    results[i] = explain(prompt, state.dataset.at(todo[i]), pred, ctx).explanation;
  });
  throw_if_cancelled(stop);
  const bool failed = triage(errors, failure);
  for (std::size_t i = 0; i < todo.size(); ++i) {
    if (results[i]) state.cache.explanations.emplace(std::pair{prompt.id, todo[i]}, std::move(*results[i]));
  }
  return !failed;
}

double subset_f1(const SessionState& state, const EvaluationCache& cache, PromptId prompt,
                 const std::vector<InstanceId>& ids) {
  std::vector<Prediction> preds;
  std::vector<GoldLabel> gold;
  preds.reserve(ids.size());
  gold.reserve(ids.size());
  for (auto id : ids) {
    preds.push_back(cache.predictions.at({prompt, id}));
    gold.emplace_back(id, state.dataset.at(id).gold_label);
  }
  return weighted_f1(preds, gold, state.dataset.label_set);
}

Presentation present(const SessionState& state, const Prompt& prompt) {
  Presentation p;
  p.prompt = prompt;
  p.train_subset_f1 = subset_f1(state, state.cache, prompt.id, state.t_beta);
  for (auto id : state.t_alpha) {
    ExplainedPrediction ep{state.cache.predictions.at({prompt.id, id}),
                           state.cache.explanations.at({prompt.id, id})};
    p.shown_examples.push_back(ShownExample{state.dataset.at(id), std::move(ep)});
  }
  return p;
}

}  // namespace

std::string new_session_id() {
  static constexpr char alphabet[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_";
  std::random_device rd;
  std::array<unsigned char, 16> bytes{};
  for (auto& b : bytes) b = static_cast<unsigned char>(rd() & 0xFF);
  std::string out;
  std::uint32_t acc = 0;
  int bits = 0;
  for (auto b : bytes) {
    acc = (acc << 8) | b;
    bits += 8;
    while (bits >= 6) {
      bits -= 6;
      out += alphabet[(acc >> bits) & 0x3F];
    }
  }
  if (bits > 0) out += alphabet[(acc << (6 - bits)) & 0x3F];
  return out;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

SessionState init_session(const SessionConfig& config, const Dataset& dataset,
                          std::string_view seed_prompt_text, std::string dataset_name) {
  validate(config);
  const auto seed_text = std::string(text::trim(seed_prompt_text));
  if (seed_text.empty()) throw Error(ErrorCode::InvalidConfig, "seed prompt is empty");
  if (auto missing = check_label_consistency(seed_text, dataset); !missing.empty()) {
    std::string msg = "seed prompt does not mention label(s):";
    for (const auto& l : missing) msg += " " + l;
    throw Error(ErrorCode::LabelInconsistency, msg, nlohmann::json{{"missing_labels", missing}});
  }

  SessionState s;
  s.session_id = new_session_id();
  s.dataset_name = std::move(dataset_name);
  s.created_at = utc_timestamp();
  s.config = config;
  s.dataset = dataset;
  s.splits = stratified_split(dataset, config.split_ratios, config.sampling.seed);
  if (s.splits.train.empty() || s.splits.validation.empty()) {
    throw Error(ErrorCode::StratificationImpossible,
                "dataset too small: train and validation splits must both be non-empty");
  }
  s.t_alpha = sample_subset(s.splits.train, config.sampling.alpha_size, config.sampling.seed,
                            SubsetPurpose::alpha);
  s.t_beta = sample_subset(s.splits.train, config.sampling.beta_size, config.sampling.seed,
                           SubsetPurpose::beta);
  s.incumbents.push_back(Prompt{0, seed_text, std::nullopt, PromptOrigin::seed, 0});
  s.next_prompt_id = 1;
  s.status = SessionStatus::working;
  return s;
}

std::vector<Presentation> build_candidates(SessionState& state, LlmClient& client,
                                           const BuildOptions& options) {
  if (state.status != SessionStatus::working) {
    throw Error(ErrorCode::InvalidState, std::string("cannot build candidates while session is ") +
                                             std::string(to_string(state.status)));
  }
  const auto& stop = options.stop;
  const auto ctx = role_context(state, client);

  std::vector<Prompt> pool = state.incumbents;
  std::sort(pool.begin(), pool.end(), [](const Prompt& a, const Prompt& b) { return a.id < b.id; });
  for (const auto& incumbent : std::vector<Prompt>(pool)) {
    // ids are consumed even for failed paraphrases so they never get reused
    for (std::size_t k = 0; k < state.config.n_paraphrases; ++k) {
      throw_if_cancelled(stop);
      try {
        auto p = paraphrase(incumbent, 1, ctx, state.next_prompt_id, state.iteration,
                            state.config.sampling.seed);
        pool.push_back(std::move(p.front()));
      } catch (const Error& e) {
        if (e.code() == ErrorCode::AuthFailure ||
            (!e.is_provider_failure() && e.code() != ErrorCode::ParaphraseEmpty)) {
          throw;
        }
        ++state.next_prompt_id;
        log::warn(std::string("dropping a paraphrase of prompt ") + std::to_string(incumbent.id) +
                  ": " + e.what());
      }
    }
  }

  const auto evaluated = sorted_union(state.t_alpha, state.t_beta);
  std::vector<Presentation> out;
  std::size_t done = 0;
  for (const auto& prompt : pool) {
    std::string failure;
    const bool ok = fill_predictions(state, state.cache, client, prompt, evaluated, stop, failure) &&
                    fill_explanations(state, client, prompt, stop, failure);
    if (ok) {
      out.push_back(present(state, prompt));
    } else {
      log::warn("dropping candidate prompt " + std::to_string(prompt.id) + ": " + failure);
    }
    if (options.on_progress) options.on_progress(++done, pool.size());
  }
  if (out.size() < 2) {
    throw Error(ErrorCode::IterationFailed,
                "only " + std::to_string(out.size()) + " candidate(s) could be evaluated",
                nlohmann::json{{"surviving", out.size()}});
  }
  state.candidates = out;
  state.status = SessionStatus::awaiting_selection;
  return out;
}

PromptId simulated_choice(const std::vector<Presentation>& candidates) {
  if (candidates.empty()) throw Error(ErrorCode::InvalidState, "no candidates to choose from");
  const Presentation* best = &candidates.front();
  for (const auto& c : candidates) {
    if (c.train_subset_f1 > best->train_subset_f1 ||
        (c.train_subset_f1 == best->train_subset_f1 && c.prompt.id < best->prompt.id)) {
      best = &c;
    }
  }
  return best->prompt.id;
}

void select(SessionState& state, const Selector& selector, std::optional<PromptId> choice,
            LlmClient& client, bool stop_after) {
  if (state.status != SessionStatus::awaiting_selection) {
    throw Error(ErrorCode::InvalidState, std::string("no selection pending; session is ") +
                                             std::string(to_string(state.status)));
  }
  PromptId chosen = 0;
  if (selector.kind == Selector::Kind::simulated) {
    chosen = simulated_choice(state.candidates);
  } else {
    if (!choice) throw Error(ErrorCode::InvalidChoice, "a prompt id must be chosen");
    chosen = *choice;
  }
  auto it = std::find_if(state.candidates.begin(), state.candidates.end(),
                         [&](const Presentation& p) { return p.prompt.id == chosen; });
  if (it == state.candidates.end()) {
    throw Error(ErrorCode::InvalidChoice,
                "prompt " + std::to_string(chosen) + " is not among the presented candidates",
                nlohmann::json{{"prompt_id", chosen}});
  }
  const Presentation winner = *it;

  // Score on validation before touching the state so a failure leaves it intact.
  EvaluationCache cache = state.cache;
  std::string failure;
  if (!fill_predictions(state, cache, client, winner.prompt, state.splits.validation, {}, failure)) {
    throw Error(ErrorCode::ProviderUnreachable, "validation scoring failed: " + failure);
  }
  const double val_f1 = subset_f1(state, cache, winner.prompt.id, state.splits.validation);

  state.cache = std::move(cache);
  state.trajectory.push_back(
      TrajectoryRecord{state.iteration, winner.prompt.id, winner.train_subset_f1, val_f1});
  ++state.iteration;
  state.incumbents = {winner.prompt};
  state.candidates.clear();
  state.cache.retain({winner.prompt.id});
  state.status = (stop_after || state.iteration >= state.config.max_iterations)
                     ? SessionStatus::finished
                     : SessionStatus::working;
}

void terminate(SessionState& state) {
  state.status = SessionStatus::finished;
  state.candidates.clear();
}

std::vector<TrajectoryRecord> run_simulation(
    const SessionConfig& config, const Dataset& dataset, std::string_view seed_prompt_text,
    LlmClient& client, const std::function<void(const SessionState&)>& on_iteration) {
  auto state = init_session(config, dataset, seed_prompt_text);
  while (state.status != SessionStatus::finished) {
    build_candidates(state, client);
    select(state, Selector::simulated(), std::nullopt, client);
    if (on_iteration) on_iteration(state);
  }
  return state.trajectory;
}

}  // namespace iprop
