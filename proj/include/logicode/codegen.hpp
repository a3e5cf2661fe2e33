#pragma once

#include <algorithm>
#include <future>
#include <optional>
#include <string>
#include <vector>

#include "logicode/checklang/parser.hpp"
#include "logicode/checklang/printer.hpp"
#include "logicode/checklang/validate.hpp"
#include "logicode/llm.hpp"
#include "logicode/prompt.hpp"
#include "logicode/rules.hpp"

namespace logicode::codegen {

using checklang::Outcome;

inline constexpr const char* kSystemMessage =
    "You write inspection programs in the checklang language. Follow the output format exactly.";

struct GenerationSettings {
  std::string model = "gpt-4";
  double temperature = 0.7;
  int max_tokens = 2048;
};

inline llm::LlmRequest generation_request(const prompt::PromptBundle& p, const GenerationSettings& s) {
  return {s.model, {{"system", kSystemMessage}, {"user", p.rendered}}, s.temperature, s.max_tokens};
}

/// Body of the first fenced code block; an unclosed fence runs to the end.
/// Without any fence the whole response is the source.
inline std::string extract_code(const std::string& response) {
  const auto open = response.find("```");
  if (open == std::string::npos) return response;
  auto start = response.find('\n', open);
  if (start == std::string::npos) return "";
  ++start;
  const auto close = response.find("```", start);
  return response.substr(start, close == std::string::npos ? std::string::npos : close - start);
}

struct Classification {
  Outcome outcome = Outcome::Error;
  std::vector<std::string> diagnostics;
  std::optional<checklang::CheckProgram> program;  // set iff outcome is Success
};

/// Pure function of the source text and the rules.
inline Classification classify(const std::string& source, const rules::RuleSet& rules) {
  Classification c;
  if (trim(source).empty()) {
    c.diagnostics.push_back("empty program");
    return c;
  }
  checklang::CheckProgram prog;
  try {
    prog = checklang::parse(source);
  } catch (const checklang::SyntaxError& e) {
    c.diagnostics.push_back(e.what());
    return c;
  }
  const auto rep = checklang::validate(prog, rules);
  for (const auto& d : rep.errors) c.diagnostics.push_back("type error: " + d.to_string());
  for (const auto& m : rep.missing) c.diagnostics.push_back("missing coverage: " + m);
  c.outcome = rep.outcome();
  if (c.outcome == Outcome::Success) c.program = std::move(prog);
  return c;
}

struct GenerationOutcome {
  std::string category;
  std::size_t attempt_index = 0;
  std::string raw_response;
  std::optional<std::string> extracted_source;
  Outcome outcome = Outcome::Error;
  std::vector<std::string> diagnostics;
  std::optional<checklang::CheckProgram> program;

  Json to_json() const {
    Json j = {{"category", category},
              {"attempt_index", attempt_index},
              {"raw_response", raw_response},
              {"extracted_source", extracted_source ? Json(*extracted_source) : Json(nullptr)},
              {"outcome", checklang::to_string(outcome)},
              {"diagnostics", diagnostics}};
    if (program) j["program_hash"] = sha256_hex(checklang::pretty_print(*program));
    return j;
  }

  /// Reads a logged outcome and classifies its source again.
  static GenerationOutcome from_json(const Json& j, const rules::RuleSet& rules) {
    GenerationOutcome g;
    try {
      g.category = j.at("category").get<std::string>();
      g.attempt_index = j.at("attempt_index").get<std::size_t>();
      g.raw_response = j.at("raw_response").get<std::string>();
      if (!j.at("extracted_source").is_null()) g.extracted_source = j["extracted_source"].get<std::string>();
    } catch (const Json::exception& e) {
      throw SchemaError(std::string("malformed generation outcome: ") + e.what());
    }
    auto c = classify(g.extracted_source.value_or(""), rules);
    g.outcome = c.outcome;
    g.diagnostics = std::move(c.diagnostics);
    g.program = std::move(c.program);
    return g;
  }
};

inline GenerationOutcome outcome_from_response(const rules::RuleSet& rules, std::size_t attempt_index,
                                               std::string raw_response) {
  GenerationOutcome g;
  g.category = rules.category;
  g.attempt_index = attempt_index;
  g.raw_response = std::move(raw_response);
  if (!trim(g.raw_response).empty()) g.extracted_source = extract_code(g.raw_response);
  auto c = classify(g.extracted_source.value_or(""), rules);
  g.outcome = c.outcome;
  g.diagnostics = std::move(c.diagnostics);
  g.program = std::move(c.program);
  return g;
}

/// One attempt. Bad model output is data; only backend errors propagate.
inline GenerationOutcome generate_program(const rules::RuleSet& rules, llm::Backend& backend,
                                          const prompt::PromptBundle& prompt, std::size_t attempt_index,
                                          const GenerationSettings& settings = {}) {
  const auto resp = backend.complete(generation_request(prompt, settings));
  return outcome_from_response(rules, attempt_index, resp.content);
}

inline GenerationOutcome generate_program(const rules::RuleSet& rules, llm::Backend& backend,
                                          const std::string& template_id, std::size_t attempt_index,
                                          const GenerationSettings& settings = {}) {
  return generate_program(rules, backend, prompt::build_prompt(rules, template_id), attempt_index, settings);
}

struct OutcomeCounts {
  std::size_t success = 0, error = 0, missing = 0;

  std::size_t total() const { return success + error + missing; }
  void add(Outcome o) { ++(o == Outcome::Success ? success : o == Outcome::Error ? error : missing); }
  double rate(std::size_t k) const { return total() ? double(k) / double(total()) : 0.0; }

  Json to_json() const {
    return {{"n", total()},
            {"counts", {{"success", success}, {"error", error}, {"missing", missing}}},
            {"rates", {{"success", rate(success)}, {"error", rate(error)}, {"missing", rate(missing)}}}};
  }
};

struct Campaign {
  std::string category;
  std::string prompt_template_hash;
  std::vector<GenerationOutcome> outcomes;  // by attempt_index
  OutcomeCounts counts;

  const GenerationOutcome* first_success() const {
    for (const auto& o : outcomes)
      if (o.outcome == Outcome::Success) return &o;
    return nullptr;
  }

  std::string outcome_log() const {
    std::string out;
    for (const auto& o : outcomes) out += o.to_json().dump() + "\n";
    return out;
  }

  Json summary() const {
    Json j = counts.to_json();
    j["category"] = category;
    j["prompt_template_hash"] = prompt_template_hash;
    return j;
  }
};

/// n attempts with the same prompt. Backends whose answers depend on call
/// order (replay, recording) are driven sequentially.
inline Campaign run_generation_campaign(const rules::RuleSet& rules, llm::Backend& backend,
                                        const prompt::PromptBundle& prompt, std::size_t n_attempts,
                                        const GenerationSettings& settings = {}) {
  if (n_attempts < 1) throw ConfigError("generation attempts must be at least 1");
  Campaign c;
  c.category = rules.category;
  c.prompt_template_hash = prompt.template_hash;
  c.outcomes.resize(n_attempts);
  const std::size_t width = backend.order_independent() ? std::max<std::size_t>(1, backend.max_in_flight()) : 1;
  for (std::size_t base = 0; base < n_attempts; base += width) {
    const std::size_t end = std::min(n_attempts, base + width);
    if (width == 1) {
      c.outcomes[base] = generate_program(rules, backend, prompt, base, settings);
      continue;
    }
    std::vector<std::future<GenerationOutcome>> fs;
    for (std::size_t i = base; i < end; ++i)
      fs.push_back(std::async(std::launch::async, [&, i] { return generate_program(rules, backend, prompt, i, settings); }));
    for (std::size_t i = base; i < end; ++i) c.outcomes[i] = fs[i - base].get();
  }
  for (const auto& o : c.outcomes) c.counts.add(o.outcome);
  return c;
}

}  // namespace logicode::codegen
