#include "iprop/simulated_llm.hpp"

#include <algorithm>
#include <cstdio>

#include "iprop/http_client.hpp"
#include "iprop/prompt_ops.hpp"
#include "iprop/random.hpp"

namespace iprop {

namespace {

const std::regex& revision_re() {
  static const std::regex re(R"(\[v:([0-9a-f]{8})\])");
  return re;
}

std::string escape_regex(std::string_view s) {
  static constexpr std::string_view special = R"(\^$.|?*+()[]{}/)";
  std::string out;
  for (char c : s) {
    if (special.find(c) != std::string_view::npos) out += '\\';
    out += c;
  }
  return out;
}

std::string hex8(std::uint64_t v) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", static_cast<unsigned>(v & 0xFFFFFFFFu));
  return buf;
}

/// Concatenated revision tags; empty for a seed prompt.
std::string revision_chain(std::string_view prompt_text) {
  std::string chain;
  const std::string s(prompt_text);
  for (std::sregex_iterator it(s.begin(), s.end(), revision_re()), end; it != end; ++it) {
    chain += (*it)[1].str();
    chain += '/';
  }
  return chain;
}

}  // namespace

SimulatedQualityModel::Pattern SimulatedQualityModel::compile(const std::string& tmpl) {
  static const std::regex placeholder(R"(\{(prompt|text|labels|label)\})");
  Pattern p;
  std::string re = "^";
  std::size_t last = 0;
  std::size_t group = 0;
  for (std::sregex_iterator it(tmpl.begin(), tmpl.end(), placeholder), end; it != end; ++it) {
    re += escape_regex(std::string_view(tmpl).substr(last, static_cast<std::size_t>(it->position()) - last));
    re += R"(([\s\S]*?))";
    p.groups.emplace((*it)[1].str(), ++group);
    last = static_cast<std::size_t>(it->position() + it->length());
  }
  re += escape_regex(std::string_view(tmpl).substr(last));
  re += "$";
  p.re = std::regex(re);
  return p;
}

SimulatedQualityModel::SimulatedQualityModel(QualitySpec spec, const Dataset& dataset,
                                             const MetaPromptTemplates& templates)
    : spec_(spec),
      labels_(dataset.label_set),
      rephrase_(compile(templates.rephrase_template)),
      classify_(compile(templates.classify_template + std::string(kClassifySuffix))) {
  for (const auto& inst : dataset.instances) gold_by_text_.emplace(inst.text, inst.gold_label);
}

double SimulatedQualityModel::quality_of(std::string_view prompt_text) const {
  double q = spec_.initial;
  const std::string s(prompt_text);
  for (std::sregex_iterator it(s.begin(), s.end(), revision_re()), end; it != end; ++it) {
    const auto tag = (*it)[1].str();
    const double u = hash_uniform01(fnv1a(tag, splitmix64(spec_.seed ^ 0x51ED)));
    q += spec_.perturb_min + (spec_.perturb_max - spec_.perturb_min) * u;
  }
  return std::clamp(q, 0.0, 1.0);
}

bool SimulatedQualityModel::classifies_correctly(std::string_view prompt_text,
                                                 std::string_view instance_text) const {
  const auto key = fnv1a(instance_text, fnv1a(revision_chain(prompt_text), splitmix64(spec_.seed)));
  return hash_uniform01(key) < quality_of(prompt_text);
}

std::optional<std::string> SimulatedQualityModel::respond(const ChatRequest& request) const {
  const auto system = request.system_message.value_or("");
  std::smatch m;
  if (system == kRephraseSystem) {
    if (!std::regex_match(request.user_message, m, rephrase_.re)) return std::nullopt;
    const std::string parent = m[static_cast<int>(rephrase_.groups.at("prompt"))].str();
    const auto tag = hex8(splitmix64(fnv1a(revision_chain(parent), request.seed.value_or(0) ^ spec_.seed)));
    return parent + " [v:" + tag + "]";
  }
  if (system == kClassifySystem) {
    if (!std::regex_match(request.user_message, m, classify_.re)) return std::nullopt;
    const auto prompt = m[static_cast<int>(classify_.groups.at("prompt"))].str();
    const auto text = m[static_cast<int>(classify_.groups.at("text"))].str();
    auto gold = gold_by_text_.find(text);
    if (gold == gold_by_text_.end()) return std::nullopt;
    if (classifies_correctly(prompt, text)) return gold->second;
    const auto idx = labels_.index_of(gold->second).value_or(0);
    return labels_[(idx + 1) % labels_.size()];
  }
  if (system == kExplainSystem) {
    return std::string("The wording of the text points to the predicted label (simulated rationale).");
  }
  return std::nullopt;
}

std::shared_ptr<LlmClient> make_client(const ProviderConfig& config, const Dataset* dataset,
                                       const MetaPromptTemplates& templates) {
  if (config.kind != ProviderKind::mock) return std::make_shared<HttpChatClient>(config);

  MockScript script = config.mock_script.empty() ? MockScript{} : load_mock_script(config.mock_script);
  auto quality = script.quality;
  auto client = std::make_shared<MockClient>(std::move(script), config.max_in_flight);
  if (quality && dataset) {
    auto model = std::make_shared<SimulatedQualityModel>(*quality, *dataset, templates);
    client->set_handler([model](const ChatRequest& r) { return model->respond(r); });
  }
  return client;
}

}  // namespace iprop
