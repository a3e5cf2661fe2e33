#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "logicode/common.hpp"
#include "logicode/rules.hpp"

// Request prompts are assembled from template files under prompts/. A
// template is a list of "## section" blocks whose bodies may contain {{slot}}
// placeholders. Rendering expands the slots and emits the sections in file
// order.

namespace logicode::prompt {

class PromptError : public Error {
 public:
  using Error::Error;
};

class UnknownTemplate : public PromptError {
 public:
  using PromptError::PromptError;
};

inline constexpr std::size_t kMaxPromptBytes = 16 * 1024;

inline constexpr const char* kOutputContract =
    "Answer with exactly one fenced code block tagged checklang that contains one check per rule, "
    "each declaring `covers <rule_id>` for the rule it implements.";

inline constexpr const char* kJudgeContract =
    "Reply with MATCH or MISMATCH alone on the first line. You may explain on later lines.";

inline std::filesystem::path default_template_dir() {
#ifdef LOGICODE_DATA_DIR
  return std::filesystem::path(LOGICODE_DATA_DIR) / "prompts";
#else
  return "prompts";
#endif
}

struct Template {
  std::string id;
  std::string hash;  // sha256 of the file bytes
  std::vector<std::pair<std::string, std::string>> sections;

  const std::string* section(std::string_view name) const {
    for (const auto& [n, body] : sections)
      if (n == name) return &body;
    return nullptr;
  }
};

inline Template parse_template(std::string id, const std::string& text) {
  Template t;
  t.id = std::move(id);
  t.hash = sha256_hex(text);
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.starts_with("## ")) {
      t.sections.emplace_back(trim(line.substr(3)), "");
    } else if (!t.sections.empty()) {
      t.sections.back().second += line + "\n";
    } else if (!trim(line).empty()) {
      throw PromptError("template '" + t.id + "': text before the first section");
    }
  }
  for (auto& [_, body] : t.sections) {
    while (body.ends_with("\n\n")) body.pop_back();
  }
  if (t.sections.empty()) throw PromptError("template '" + t.id + "' has no sections");
  return t;
}

inline Template load_template(const std::string& id, const std::filesystem::path& dir = default_template_dir()) {
  const bool safe = !id.empty() && std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
  });
  const auto path = dir / (id + ".prompt");
  if (!safe || !std::filesystem::is_regular_file(path)) throw UnknownTemplate("unknown prompt template '" + id + "'");
  return parse_template(id, read_file(path.string()));
}

/// Replaces every {{slot}}. Unknown or unterminated slots are errors.
inline std::string expand(const std::string& body, const std::map<std::string, std::string>& slots,
                          const std::string& where) {
  std::string out;
  std::size_t i = 0;
  while (i < body.size()) {
    const auto open = body.find("{{", i);
    if (open == std::string::npos) {
      out.append(body, i);
      break;
    }
    out.append(body, i, open - i);
    const auto close = body.find("}}", open + 2);
    if (close == std::string::npos) throw PromptError(where + ": unterminated {{ slot");
    const std::string name = trim(std::string_view(body).substr(open + 2, close - open - 2));
    auto it = slots.find(name);
    if (it == slots.end()) throw PromptError(where + ": unknown slot {{" + name + "}}");
    out += it->second;
    i = close + 2;
  }
  return out;
}

inline std::map<std::string, std::string> expand_sections(const Template& t,
                                                          const std::map<std::string, std::string>& slots) {
  std::map<std::string, std::string> out;
  for (const auto& [name, body] : t.sections)
    out[name] = expand(body, slots, "template '" + t.id + "' section '" + name + "'");
  return out;
}

inline std::string render_sections(const Template& t, const std::map<std::string, std::string>& expanded) {
  std::string out;
  for (const auto& [name, _] : t.sections) {
    if (!out.empty()) out += "\n";
    out += expanded.at(name);
  }
  return out;
}

// ── Code-generation prompt ──────────────────────────────────────────────────

struct PromptBundle {
  std::string template_id;
  std::string template_hash;
  std::string task_interpretation;
  std::string function_structuring;
  std::string knowledge_integration;
  std::string prompt_engineering;
  std::string language_spec;
  std::vector<std::string> rule_sentences;  // "- rule_id: sentence"
  std::string rendered;
};

inline constexpr std::array<const char*, 6> kRequiredSections = {
    "task_interpretation", "function_structuring", "knowledge_integration",
    "prompt_engineering",  "language_spec",        "rules"};

inline std::string vocabulary_text(const rules::RuleSet& rules) {
  std::string out;
  for (const auto& [name, attrs] : rules.scene_vocabulary().objects) {
    out += "  " + name + ":";
    if (attrs.empty()) out += " no attributes";
    bool first = true;
    for (const auto& [attr, type] : attrs) {
      out += std::string(first ? " " : ", ") + attr + " (" + std::string(rules::to_string(type));
      if (type == rules::AttrType::Rgb) out += ", read through color()";
      out += ")";
      first = false;
    }
    out += "\n";
  }
  if (!out.empty()) out.pop_back();
  return out;
}

inline std::vector<std::string> rule_sentences(const rules::RuleSet& rules) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < rules.rules.size(); ++i)
    out.push_back("- " + rules.rules[i].rule_id + ": " + trim(rules.natural_language.at(i)));
  return out;
}

inline PromptBundle build_prompt(const rules::RuleSet& rules, const Template& t) {
  if (rules.rules.empty()) throw PromptError("rule set '" + rules.category + "' has no rules");
  rules::require_lint_clean(rules);
  for (const char* s : kRequiredSections)
    if (!t.section(s)) throw PromptError("template '" + t.id + "' lacks section '" + s + "'");

  PromptBundle b;
  b.template_id = t.id;
  b.template_hash = t.hash;
  b.rule_sentences = rule_sentences(rules);
  const std::map<std::string, std::string> slots = {{"category", rules.category},
                                                    {"vocabulary", vocabulary_text(rules)},
                                                    {"rules", join(b.rule_sentences, "\n")},
                                                    {"output_contract", kOutputContract}};
  const auto ex = expand_sections(t, slots);
  b.task_interpretation = ex.at("task_interpretation");
  b.function_structuring = ex.at("function_structuring");
  b.knowledge_integration = ex.at("knowledge_integration");
  b.prompt_engineering = ex.at("prompt_engineering");
  b.language_spec = ex.at("language_spec");
  b.rendered = render_sections(t, ex);
  if (b.rendered.find(kOutputContract) == std::string::npos)
    throw PromptError("template '" + t.id + "' does not place {{output_contract}}");
  if (b.rendered.size() > kMaxPromptBytes)
    throw PromptError("rendered prompt is " + std::to_string(b.rendered.size()) + " bytes, limit " +
                      std::to_string(kMaxPromptBytes));
  return b;
}

inline PromptBundle build_prompt(const rules::RuleSet& rules, const std::string& template_id,
                                 const std::filesystem::path& dir = default_template_dir()) {
  return build_prompt(rules, load_template(template_id, dir));
}

// ── Judge prompt ────────────────────────────────────────────────────────────

struct JudgePrompt {
  std::string template_id;
  std::string template_hash;
  std::string rendered;
};

/// Reason lists are embedded as JSON arrays on the PREDICTED / GROUND_TRUTH
/// lines so they appear verbatim and can be read back.
inline JudgePrompt build_judge_prompt(const Template& t, const std::vector<std::string>& predicted,
                                      const std::vector<std::string>& ground_truth) {
  const std::map<std::string, std::string> slots = {{"predicted", Json(predicted).dump()},
                                                    {"ground_truth", Json(ground_truth).dump()},
                                                    {"output_contract", kJudgeContract}};
  JudgePrompt p{t.id, t.hash, render_sections(t, expand_sections(t, slots))};
  if (p.rendered.find(kJudgeContract) == std::string::npos)
    throw PromptError("judge template '" + t.id + "' does not place {{output_contract}}");
  return p;
}

struct JudgeLists {
  std::vector<std::string> predicted, ground_truth;
};

/// Reads the two reason lists back out of a rendered judge prompt.
inline std::optional<JudgeLists> parse_judge_prompt(const std::string& text) {
  std::optional<Json> pred, gt;
  std::istringstream in(text);
  std::string line;
  auto list_after = [](const std::string& l, std::string_view key) -> std::optional<Json> {
    if (!l.starts_with(key)) return std::nullopt;
    Json j = Json::parse(l.substr(key.size()), nullptr, false);
    if (j.is_discarded() || !j.is_array()) return std::nullopt;
    for (const auto& x : j)
      if (!x.is_string()) return std::nullopt;
    return j;
  };
  while (std::getline(in, line)) {
    if (!pred) pred = list_after(line, "PREDICTED: ");
    if (!gt) gt = list_after(line, "GROUND_TRUTH: ");
  }
  if (!pred || !gt) return std::nullopt;
  return JudgeLists{pred->get<std::vector<std::string>>(), gt->get<std::vector<std::string>>()};
}

}  // namespace logicode::prompt
