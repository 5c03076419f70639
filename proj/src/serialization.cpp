#include "iprop/serialization.hpp"

#include "iprop/error.hpp"

namespace iprop {

namespace {

template <typename T>
json optional_to_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> optional_from_json(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

template <typename T>
void read_if_present(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void to_json(json& j, const LabelSet& v) { j = v.labels(); }
void from_json(const json& j, LabelSet& v) { v = LabelSet(j.get<std::vector<std::string>>()); }

void to_json(json& j, const Instance& v) {
  j = json{{"id", v.id}, {"text", v.text}, {"gold_label", v.gold_label}};
}
void from_json(const json& j, Instance& v) {
  j.at("id").get_to(v.id);
  j.at("text").get_to(v.text);
  j.at("gold_label").get_to(v.gold_label);
}

void to_json(json& j, const Dataset& v) {
  j = json{{"label_set", v.label_set}, {"instances", v.instances}};
}
void from_json(const json& j, Dataset& v) {
  j.at("label_set").get_to(v.label_set);
  j.at("instances").get_to(v.instances);
}

void to_json(json& j, const Splits& v) {
  j = json{{"train", v.train}, {"validation", v.validation}, {"test", v.test}};
}
void from_json(const json& j, Splits& v) {
  j.at("train").get_to(v.train);
  j.at("validation").get_to(v.validation);
  j.at("test").get_to(v.test);
}

void to_json(json& j, const Prompt& v) {
  j = json{{"id", v.id},
           {"text", v.text},
           {"parent_id", optional_to_json(v.parent_id)},
           {"origin", to_string(v.origin)},
           {"iteration_created", v.iteration_created}};
}
void from_json(const json& j, Prompt& v) {
  j.at("id").get_to(v.id);
  j.at("text").get_to(v.text);
  v.parent_id = optional_from_json<PromptId>(j, "parent_id");
  v.origin = parse_prompt_origin(j.at("origin").get<std::string>());
  j.at("iteration_created").get_to(v.iteration_created);
}

void to_json(json& j, const Prediction& v) {
  j = json{{"instance_id", v.instance_id},
           {"predicted_label", optional_to_json(v.predicted_label)},
           {"raw_output", v.raw_output}};
}
void from_json(const json& j, Prediction& v) {
  j.at("instance_id").get_to(v.instance_id);
  v.predicted_label = optional_from_json<std::string>(j, "predicted_label");
  j.at("raw_output").get_to(v.raw_output);
}

void to_json(json& j, const ExplainedPrediction& v) {
  j = json{{"prediction", v.prediction}, {"explanation", v.explanation}};
}
void from_json(const json& j, ExplainedPrediction& v) {
  j.at("prediction").get_to(v.prediction);
  j.at("explanation").get_to(v.explanation);
}

void to_json(json& j, const ShownExample& v) {
  j = json{{"instance", v.instance}, {"explained", v.explained}};
}
void from_json(const json& j, ShownExample& v) {
  j.at("instance").get_to(v.instance);
  j.at("explained").get_to(v.explained);
}

void to_json(json& j, const Presentation& v) {
  j = json{{"prompt", v.prompt},
           {"shown_examples", v.shown_examples},
           {"train_subset_f1", v.train_subset_f1}};
}
void from_json(const json& j, Presentation& v) {
  j.at("prompt").get_to(v.prompt);
  j.at("shown_examples").get_to(v.shown_examples);
  j.at("train_subset_f1").get_to(v.train_subset_f1);
}

void to_json(json& j, const SamplingConfig& v) {
  j = json{{"alpha_size", v.alpha_size},
           {"beta_size", v.beta_size},
           {"seed", v.seed},
           {"alpha_strategy", to_string(v.alpha_strategy)},
           {"beta_strategy", to_string(v.beta_strategy)}};
}
void from_json(const json& j, SamplingConfig& v) {
  read_if_present(j, "alpha_size", v.alpha_size);
  read_if_present(j, "beta_size", v.beta_size);
  read_if_present(j, "seed", v.seed);
  if (j.contains("alpha_strategy")) {
    v.alpha_strategy = parse_sampling_strategy(j.at("alpha_strategy").get<std::string>());
  }
  if (j.contains("beta_strategy")) {
    v.beta_strategy = parse_sampling_strategy(j.at("beta_strategy").get<std::string>());
  }
}

void to_json(json& j, const GenerationParams& v) {
  j = json{{"temperature", v.temperature},
           {"rephrase_temperature", v.rephrase_temperature},
           {"max_tokens", v.max_tokens}};
}
void from_json(const json& j, GenerationParams& v) {
  read_if_present(j, "temperature", v.temperature);
  read_if_present(j, "rephrase_temperature", v.rephrase_temperature);
  read_if_present(j, "max_tokens", v.max_tokens);
}

void to_json(json& j, const MetaPromptTemplates& v) {
  j = json{{"rephrase_template", v.rephrase_template},
           {"classify_template", v.classify_template},
           {"explain_template", v.explain_template}};
}
void from_json(const json& j, MetaPromptTemplates& v) {
  read_if_present(j, "rephrase_template", v.rephrase_template);
  read_if_present(j, "classify_template", v.classify_template);
  read_if_present(j, "explain_template", v.explain_template);
}

void to_json(json& j, const SessionConfig& v) {
  j = json{{"provider", to_string(v.provider)},
           {"model_name", v.model_name},
           {"n_paraphrases", v.n_paraphrases},
           {"sampling", v.sampling},
           {"split_ratios", v.split_ratios},
           {"max_iterations", v.max_iterations},
           {"generation_params", v.generation},
           {"meta_prompts", v.meta_prompts}};
}

void merge_config(SessionConfig& v, const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "session config must be a JSON object");
  try {
    if (j.contains("provider")) v.provider = parse_provider_kind(j.at("provider").get<std::string>());
    read_if_present(j, "model_name", v.model_name);
    read_if_present(j, "n_paraphrases", v.n_paraphrases);
    if (j.contains("sampling")) from_json(j.at("sampling"), v.sampling);
    read_if_present(j, "split_ratios", v.split_ratios);
    read_if_present(j, "max_iterations", v.max_iterations);
    if (j.contains("generation_params")) from_json(j.at("generation_params"), v.generation);
    if (j.contains("meta_prompts")) from_json(j.at("meta_prompts"), v.meta_prompts);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("bad session config: ") + e.what());
  }
}

void from_json(const json& j, SessionConfig& v) {
  v = SessionConfig{};
  merge_config(v, j);
}

void to_json(json& j, const TrajectoryRecord& v) {
  j = json{{"iteration", v.iteration},
           {"selected_prompt_id", v.selected_prompt_id},
           {"train_subset_f1", v.train_subset_f1},
           {"validation_f1", v.validation_f1}};
}
void from_json(const json& j, TrajectoryRecord& v) {
  j.at("iteration").get_to(v.iteration);
  j.at("selected_prompt_id").get_to(v.selected_prompt_id);
  j.at("train_subset_f1").get_to(v.train_subset_f1);
  j.at("validation_f1").get_to(v.validation_f1);
}

void to_json(json& j, const EvaluationCache& v) {
  json preds = json::array();
  for (const auto& [key, p] : v.predictions) {
    preds.push_back(json{{"prompt_id", key.first}, {"prediction", p}});
  }
  json expls = json::array();
  for (const auto& [key, e] : v.explanations) {
    expls.push_back(json{{"prompt_id", key.first}, {"instance_id", key.second}, {"explanation", e}});
  }
  j = json{{"predictions", std::move(preds)}, {"explanations", std::move(expls)}};
}
void from_json(const json& j, EvaluationCache& v) {
  v = {};
  for (const auto& e : j.at("predictions")) {
    auto p = e.at("prediction").get<Prediction>();
    v.predictions.emplace(std::pair{e.at("prompt_id").get<PromptId>(), p.instance_id}, std::move(p));
  }
  for (const auto& e : j.at("explanations")) {
    v.explanations.emplace(
        std::pair{e.at("prompt_id").get<PromptId>(), e.at("instance_id").get<InstanceId>()},
        e.at("explanation").get<std::string>());
  }
}

void to_json(json& j, const SessionState& v) {
  j = json{{"format_version", 1},
           {"session_id", v.session_id},
           {"dataset_name", v.dataset_name},
           {"created_at", v.created_at},
           {"config", v.config},
           {"dataset", v.dataset},
           {"splits", v.splits},
           {"t_alpha", v.t_alpha},
           {"t_beta", v.t_beta},
           {"incumbents", v.incumbents},
           {"candidates", v.candidates},
           {"iteration", v.iteration},
           {"trajectory", v.trajectory},
           {"status", to_string(v.status)},
           {"next_prompt_id", v.next_prompt_id},
           {"cache", v.cache}};
}
void from_json(const json& j, SessionState& v) {
  j.at("session_id").get_to(v.session_id);
  j.at("dataset_name").get_to(v.dataset_name);
  j.at("created_at").get_to(v.created_at);
  j.at("config").get_to(v.config);
  j.at("dataset").get_to(v.dataset);
  j.at("splits").get_to(v.splits);
  j.at("t_alpha").get_to(v.t_alpha);
  j.at("t_beta").get_to(v.t_beta);
  j.at("incumbents").get_to(v.incumbents);
  j.at("candidates").get_to(v.candidates);
  j.at("iteration").get_to(v.iteration);
  j.at("trajectory").get_to(v.trajectory);
  v.status = parse_session_status(j.at("status").get<std::string>());
  j.at("next_prompt_id").get_to(v.next_prompt_id);
  j.at("cache").get_to(v.cache);
}

}  // namespace iprop
