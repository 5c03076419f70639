#include "iprop/prompt_ops.hpp"

#include <array>
#include <regex>

#include "iprop/error.hpp"
#include "iprop/log.hpp"
#include "iprop/random.hpp"
#include "iprop/text.hpp"

namespace iprop {

namespace {

// "Here's ...:", "Here is ...:", "Sure, ...:", "Rephrased prompt:" on the first line.
const std::regex& preamble_re() {
  static const std::regex re(
      "^(here('|\xE2\x80\x99| i)s .*?:|sure[,.!]? .*?:|rephrased prompt:)\\s*",
      std::regex::ECMAScript | std::regex::icase);
  return re;
}

const std::regex& newline_run_re() {
  static const std::regex re("[ \\t]*(\\r?\\n|\\r)+\\s*");
  return re;
}

constexpr std::array<std::pair<std::string_view, std::string_view>, 4> kQuotePairs{{
    {"\"", "\""},
    {"'", "'"},
    {"\xE2\x80\x9C", "\xE2\x80\x9D"},  // “ ”
    {"\xE2\x80\x98", "\xE2\x80\x99"},  // ‘ ’
}};

std::string_view strip_one_quote_layer(std::string_view s) {
  for (const auto& [open, close] : kQuotePairs) {
    if (s.size() >= open.size() + close.size() && s.starts_with(open) && s.ends_with(close)) {
      return s.substr(open.size(), s.size() - open.size() - close.size());
    }
  }
  return s;
}

std::string clean_once(std::string_view raw) {
  std::string s(text::trim(raw));
  s = std::regex_replace(s, preamble_re(), "", std::regex_constants::format_first_only);
  s = std::string(text::trim(s));
  s = std::string(text::trim(strip_one_quote_layer(s)));
  return std::regex_replace(s, newline_run_re(), " ");
}

// Characters ignored around a bare-label answer.
constexpr std::array<std::string_view, 14> kEdgeNoise{
    " ",  "\t", "\n", "\r", ".", ",", ":", ";", "!", "\"", "'", "`",
    "\xE2\x80\x9C", "\xE2\x80\x9D"};
constexpr std::array<std::string_view, 2> kEdgeNoiseExtra{"\xE2\x80\x98", "\xE2\x80\x99"};

std::string_view strip_edge_noise(std::string_view s) {
  auto strip_front = [&](std::string_view token) {
    if (s.starts_with(token)) {
      s.remove_prefix(token.size());
      return true;
    }
    return false;
  };
  auto strip_back = [&](std::string_view token) {
    if (s.ends_with(token)) {
      s.remove_suffix(token.size());
      return true;
    }
    return false;
  };
  for (bool changed = true; changed && !s.empty();) {
    changed = false;
    for (auto t : kEdgeNoise) changed = strip_front(t) || strip_back(t) || changed;
    for (auto t : kEdgeNoiseExtra) changed = strip_front(t) || strip_back(t) || changed;
  }
  return s;
}

ChatRequest make_request(const RoleContext& ctx, std::string_view system, std::string user,
                         double temperature) {
  ChatRequest req;
  req.model_name = ctx.model_name;
  req.system_message = std::string(system);
  req.user_message = std::move(user);
  req.temperature = temperature;
  req.max_tokens = ctx.generation.max_tokens;
  return req;
}

}  // namespace

std::string clean_paraphrase(std::string_view raw) {
  std::string current = clean_once(raw);
  for (;;) {
    std::string next = clean_once(current);
    if (next == current) return current;
    current = std::move(next);
  }
}

std::optional<std::string> extract_label(std::string_view raw, const LabelSet& label_set) {
  const std::string folded = text::fold_case(text::trim(raw));

  const auto bare = strip_edge_noise(folded);
  for (const auto& label : label_set.labels()) {
    if (bare == text::fold_case(label)) return label;
  }

  std::optional<std::size_t> best;
  std::size_t best_pos = std::string::npos;
  for (std::size_t i = 0; i < label_set.size(); ++i) {
    const auto needle = text::fold_case(label_set[i]);
    const auto pos = text::find_whole_word(folded, needle);
    if (pos == std::string::npos) continue;
    // earliest mention wins; at the same offset the longer label is more specific
    if (!best || pos < best_pos ||
        (pos == best_pos && label_set[i].size() > label_set[*best].size())) {
      best = i;
      best_pos = pos;
    }
  }
  if (best) return label_set[*best];
  return std::nullopt;
}

std::vector<Prompt> paraphrase(const Prompt& prompt, std::size_t n, const RoleContext& ctx,
                               PromptId& next_id, std::size_t iteration, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorCode::InvalidConfig, "paraphrase count must be >= 1");
  const std::string user =
      text::render_template(ctx.templates.rephrase_template, {{"prompt", prompt.text}});
  const auto parent_key = text::fold_case(text::trim(prompt.text));

  std::vector<Prompt> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const PromptId id = next_id;
    auto request = make_request(ctx, kRephraseSystem, user, ctx.generation.rephrase_temperature);

    std::string cleaned;
    for (int attempt = 0; attempt < 2; ++attempt) {
      request.seed = derive_seed(seed, "paraphrase/" + std::to_string(id) + "/" +
                                           std::to_string(attempt));
      cleaned = clean_paraphrase(ctx.client.complete(request).text);
      if (cleaned.empty()) {
        throw Error(ErrorCode::ParaphraseEmpty,
                    "paraphrase of prompt " + std::to_string(prompt.id) + " is empty after cleaning");
      }
      if (text::fold_case(cleaned) != parent_key) break;
      if (attempt == 1) {
        log::warn("paraphrase " + std::to_string(id) + " duplicates its parent prompt " +
                  std::to_string(prompt.id) + "; keeping it");
      }
    }
    out.push_back(Prompt{id, std::move(cleaned), prompt.id, PromptOrigin::paraphrase, iteration});
    ++next_id;
  }
  return out;
}

std::string render_classify_message(const Prompt& prompt, const Instance& instance,
                                    const LabelSet& label_set,
                                    const MetaPromptTemplates& templates) {
  std::string msg = text::render_template(
      templates.classify_template,
      {{"prompt", prompt.text}, {"text", instance.text}, {"labels", label_set.joined()}});
  msg += kClassifySuffix;
  return msg;
}

Prediction classify(const Prompt& prompt, const Instance& instance, const LabelSet& label_set,
                    const RoleContext& ctx) {
  auto request = make_request(ctx, kClassifySystem,
                              render_classify_message(prompt, instance, label_set, ctx.templates),
                              ctx.generation.temperature);
  auto response = ctx.client.complete(request);
  auto label = extract_label(response.text, label_set);
  return Prediction{instance.id, std::move(label), std::move(response.text)};
}

ExplainedPrediction explain(const Prompt& prompt, const Instance& instance,
                            const Prediction& prediction, const RoleContext& ctx) {
  if (prediction.is_unknown()) return ExplainedPrediction{prediction, std::string(kNoLabelExplanation)};

  auto request = make_request(
      ctx, kExplainSystem,
      text::render_template(ctx.templates.explain_template, {{"prompt", prompt.text},
                                                             {"text", instance.text},
                                                             {"label", *prediction.predicted_label}}),
      ctx.generation.temperature);
  const auto response = ctx.client.complete(request);
  const auto trimmed = text::trim(response.text);
  if (trimmed.empty()) throw Error(ErrorCode::ResponseEmpty, "explanation is blank");
  return ExplainedPrediction{prediction,
                             text::truncate_on_word(trimmed, kMaxExplanationChars, kTruncationMarker)};
}

MetaPromptTemplates parse_templates(std::string_view content, MetaPromptTemplates base) {
  std::string* current = nullptr;
  std::string body;
  const auto flush = [&] {
    if (current) *current = std::string(text::trim(body));
    body.clear();
  };
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= content.size()) {
    auto end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    const auto line = content.substr(start, end - start);
    start = end + 1;
    ++line_no;
    const auto trimmed = text::trim(line);
    if (trimmed.size() > 2 && trimmed.front() == '[' && trimmed.back() == ']') {
      flush();
      const auto name = trimmed.substr(1, trimmed.size() - 2);
      if (name == "rephrase") current = &base.rephrase_template;
      else if (name == "classify") current = &base.classify_template;
      else if (name == "explain") current = &base.explain_template;
      else throw Error(ErrorCode::InvalidConfig, "unknown template section [" + std::string(name) + "]");
      continue;
    }
    if (!current) {
      if (trimmed.empty() || trimmed.front() == '#') continue;
      throw Error(ErrorCode::InvalidConfig,
                  "template text outside a section on line " + std::to_string(line_no));
    }
    body += line;
    body += '\n';
  }
  flush();
  return base;
}

}  // namespace iprop
