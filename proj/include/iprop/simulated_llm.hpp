#pragma once

#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <string>
#include <string_view>

#include "iprop/llm_client.hpp"
#include "iprop/mock_client.hpp"
#include "iprop/provider_config.hpp"
#include "iprop/types.hpp"

namespace iprop {

/// Handler for MockClient that simulates an LLM whose prompts carry a hidden
/// quality q:
///  - the seed prompt has q = spec.initial;
///  - a paraphrase appends a revision tag " [v:xxxxxxxx]" to its parent and
///    shifts q by a value drawn from [perturb_min, perturb_max] keyed by the tag;
///  - classifying an instance is correct iff a uniform draw keyed by
///    (prompt revision chain, instance text) is below q; otherwise the next
///    label in set order is returned.
/// Responses are pure functions of the request, so runs are reproducible and
/// survive process restarts.
class SimulatedQualityModel {
 public:
  SimulatedQualityModel(QualitySpec spec, const Dataset& dataset,
                        const MetaPromptTemplates& templates);

  std::optional<std::string> respond(const ChatRequest& request) const;

  /// Hidden quality of a prompt text, clamped to [0, 1].
  double quality_of(std::string_view prompt_text) const;
  /// Whether classifying `instance_text` under `prompt_text` comes out right.
  bool classifies_correctly(std::string_view prompt_text, std::string_view instance_text) const;

 private:
  struct Pattern {
    std::regex re;
    std::map<std::string, std::size_t> groups;  // placeholder -> capture index
  };
  static Pattern compile(const std::string& tmpl);

  QualitySpec spec_;
  LabelSet labels_;
  std::map<std::string, std::string, std::less<>> gold_by_text_;
  Pattern rephrase_;
  Pattern classify_;
};

/// Builds the client for a provider configuration. For the mock provider the
/// script is loaded from `config.mock_script` (if set); when it carries a
/// quality spec and a dataset is supplied, a SimulatedQualityModel is attached.
std::shared_ptr<LlmClient> make_client(const ProviderConfig& config,
                                       const Dataset* dataset = nullptr,
                                       const MetaPromptTemplates& templates = {});

}  // namespace iprop
