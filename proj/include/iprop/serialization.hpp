#pragma once

#include <nlohmann/json.hpp>

#include "iprop/types.hpp"

// nlohmann ADL hooks for the domain model. The encoding of SessionState is the
// on-disk session document used by the service.
namespace iprop {

using json = nlohmann::json;

void to_json(json& j, const LabelSet& v);
void from_json(const json& j, LabelSet& v);
void to_json(json& j, const Instance& v);
void from_json(const json& j, Instance& v);
void to_json(json& j, const Dataset& v);
void from_json(const json& j, Dataset& v);
void to_json(json& j, const Splits& v);
void from_json(const json& j, Splits& v);
void to_json(json& j, const Prompt& v);
void from_json(const json& j, Prompt& v);
void to_json(json& j, const Prediction& v);
void from_json(const json& j, Prediction& v);
void to_json(json& j, const ExplainedPrediction& v);
void from_json(const json& j, ExplainedPrediction& v);
void to_json(json& j, const ShownExample& v);
void from_json(const json& j, ShownExample& v);
void to_json(json& j, const Presentation& v);
void from_json(const json& j, Presentation& v);
void to_json(json& j, const SamplingConfig& v);
void from_json(const json& j, SamplingConfig& v);
void to_json(json& j, const GenerationParams& v);
void from_json(const json& j, GenerationParams& v);
void to_json(json& j, const MetaPromptTemplates& v);
void from_json(const json& j, MetaPromptTemplates& v);
void to_json(json& j, const SessionConfig& v);
void from_json(const json& j, SessionConfig& v);
void to_json(json& j, const TrajectoryRecord& v);
void from_json(const json& j, TrajectoryRecord& v);
void to_json(json& j, const EvaluationCache& v);
void from_json(const json& j, EvaluationCache& v);
void to_json(json& j, const SessionState& v);
void from_json(const json& j, SessionState& v);

/// Applies the keys present in `patch` on top of `config` (missing keys keep
/// their current values). Used for partial configs from the CLI and HTTP API.
void merge_config(SessionConfig& config, const json& patch);

}  // namespace iprop
