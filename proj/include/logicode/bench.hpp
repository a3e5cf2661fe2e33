#pragma once

#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "logicode/codegen.hpp"
#include "logicode/dataset.hpp"
#include "logicode/exec.hpp"
#include "logicode/llm.hpp"
#include "logicode/prompt.hpp"

namespace logicode::bench {

class MissingGroundTruth : public Error {
 public:
  using Error::Error;
};

class EmptyRuns : public Error {
 public:
  using Error::Error;
};

class CategoryMismatch : public Error {
 public:
  using Error::Error;
};

inline std::string fmt3(double v) { return fixed(v, 3); }

// ── Binary classification ───────────────────────────────────────────────────

/// Positive class is abnormal. Failed images count against the metrics:
/// as a false positive on a normal image and a false negative on an
/// abnormal one.
struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::size_t failed_normal = 0, failed_abnormal = 0;

  std::size_t failed() const { return failed_normal + failed_abnormal; }
  std::size_t total() const { return tp + fp + tn + fn + failed(); }

  Json to_json() const {
    return {{"tp", tp}, {"fp", fp}, {"tn", tn}, {"fn", fn}, {"failed", failed()},
            {"failed_normal", failed_normal}, {"failed_abnormal", failed_abnormal}};
  }

  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

struct Metrics {
  double accuracy = 0, precision = 0, recall = 0, f1 = 0;

  Json to_json() const { return {{"accuracy", accuracy}, {"precision", precision}, {"recall", recall}, {"f1", f1}}; }
  std::string rendered() const { return fmt3(accuracy) + "/" + fmt3(precision) + "/" + fmt3(recall) + "/" + fmt3(f1); }
};

/// precision = 1 when nothing is predicted positive, recall = 1 when there
/// is nothing to find, f1 = 0 when both are 0. Accuracy of zero images is 0.
inline Metrics metrics(const ConfusionCounts& c) {
  const double tp = double(c.tp), fp = double(c.fp + c.failed_normal), fn = double(c.fn + c.failed_abnormal);
  Metrics m;
  m.accuracy = c.total() ? double(c.tp + c.tn) / double(c.total()) : 0.0;
  m.precision = tp + fp == 0 ? 1.0 : tp / (tp + fp);
  m.recall = tp + fn == 0 ? 1.0 : tp / (tp + fn);
  m.f1 = m.precision + m.recall == 0 ? 0.0 : 2 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

inline ConfusionCounts count_run(const exec::RunRecord& run, const dataset::DatasetManifest& manifest) {
  ConfusionCounts c;
  for (const auto& r : run.reports) {
    const auto* rec = manifest.find(r.image_id);
    if (!rec) throw MissingGroundTruth("no ground truth for image '" + r.image_id + "'");
    const bool truth = rec->label == dataset::Label::Abnormal;
    switch (r.predicted) {
      case Prediction::Abnormal: ++(truth ? c.tp : c.fp); break;
      case Prediction::Normal: ++(truth ? c.fn : c.tn); break;
      case Prediction::EvaluationFailed: ++(truth ? c.failed_abnormal : c.failed_normal); break;
    }
  }
  return c;
}

struct BinaryScore {
  std::string category;
  ConfusionCounts counts;
  Metrics metrics;

  Json to_json() const { return {{"category", category}, {"counts", counts.to_json()}, {"metrics", metrics.to_json()}}; }
};

inline BinaryScore score_binary(const exec::RunRecord& run, const dataset::DatasetManifest& manifest) {
  BinaryScore s;
  s.category = run.category;
  s.counts = count_run(run, manifest);
  s.metrics = metrics(s.counts);
  return s;
}

struct MetricsReport {
  std::string category;
  std::vector<Metrics> per_run;
  Metrics average;

  std::size_t n_runs() const { return per_run.size(); }

  Json to_json() const {
    Json runs = Json::array();
    for (const auto& m : per_run) runs.push_back(m.to_json());
    return {{"category", category}, {"n_runs", n_runs()}, {"per_run", runs}, {"average", average.to_json()}};
  }
};

inline MetricsReport average_runs(const std::vector<BinaryScore>& runs) {
  if (runs.empty()) throw EmptyRuns("no runs to average");
  MetricsReport r;
  r.category = runs.front().category;
  for (const auto& s : runs) {
    if (s.category != r.category)
      throw CategoryMismatch("cannot average runs of '" + r.category + "' and '" + s.category + "'");
    r.per_run.push_back(s.metrics);
    r.average.accuracy += s.metrics.accuracy;
    r.average.precision += s.metrics.precision;
    r.average.recall += s.metrics.recall;
    r.average.f1 += s.metrics.f1;
  }
  const double n = double(runs.size());
  r.average = {r.average.accuracy / n, r.average.precision / n, r.average.recall / n, r.average.f1 / n};
  return r;
}

// ── Reasoning accuracy: LLM judge ───────────────────────────────────────────

enum class Verdict { Match, Mismatch, Unparseable };

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Match: return "match";
    case Verdict::Mismatch: return "mismatch";
    case Verdict::Unparseable: return "unparseable";
  }
  return "?";
}

/// Only the first line counts, and it must read MATCH or MISMATCH.
inline Verdict parse_verdict(std::string_view response) {
  const auto nl = response.find('\n');
  const std::string first = trim(response.substr(0, nl));
  if (first == "MATCH") return Verdict::Match;
  if (first == "MISMATCH") return Verdict::Mismatch;
  return Verdict::Unparseable;
}

struct JudgeVerdict {
  std::string image_id;
  std::vector<std::string> predicted_reasons;
  std::vector<std::string> ground_truth_reasons;
  Verdict verdict = Verdict::Unparseable;
  std::string raw_response;

  Json to_json() const {
    return {{"image_id", image_id},
            {"predicted_reasons", predicted_reasons},
            {"ground_truth_reasons", ground_truth_reasons},
            {"verdict", to_string(verdict)},
            {"raw_response", raw_response}};
  }
};

struct JudgeResult {
  std::string category;
  std::string judge_template_hash;
  std::vector<JudgeVerdict> verdicts;  // by image_id
  std::size_t match = 0, mismatch = 0, unparseable = 0;

  /// match / (match + mismatch); absent when nothing was judged.
  std::optional<double> accuracy() const {
    if (match + mismatch == 0) return std::nullopt;
    return double(match) / double(match + mismatch);
  }

  Json to_json() const {
    Json v = Json::array();
    for (const auto& x : verdicts) v.push_back(x.to_json());
    const auto a = accuracy();
    return {{"category", category},
            {"judge_template_hash", judge_template_hash},
            {"match", match},
            {"mismatch", mismatch},
            {"unparseable", unparseable},
            {"accuracy", a ? Json(*a) : Json(nullptr)},
            {"verdicts", v}};
  }
};

struct JudgeSettings {
  std::string model = "gpt-4";
  double temperature = 0.0;
  int max_tokens = 16;
};

inline llm::LlmRequest judge_request(const prompt::JudgePrompt& p, const JudgeSettings& s) {
  return {s.model,
          {{"system", "You grade anomaly explanations. Follow the output format exactly."}, {"user", p.rendered}},
          s.temperature,
          s.max_tokens};
}

/// Judges images whose ground truth and prediction are both abnormal.
inline JudgeResult judge_reasoning(const exec::RunRecord& run, const dataset::DatasetManifest& manifest,
                                   llm::Backend& backend, const prompt::Template& judge_template,
                                   const JudgeSettings& settings = {}) {
  JudgeResult res;
  res.category = run.category;
  res.judge_template_hash = judge_template.hash;
  for (const auto& r : run.reports) {
    const auto* rec = manifest.find(r.image_id);
    if (!rec) throw MissingGroundTruth("no ground truth for image '" + r.image_id + "'");
    if (rec->label != dataset::Label::Abnormal || r.predicted != Prediction::Abnormal) continue;
    res.verdicts.push_back({r.image_id, r.reasons, rec->reasons, Verdict::Unparseable, ""});
  }
  auto ask = [&](JudgeVerdict& v) {
    const auto p = prompt::build_judge_prompt(judge_template, v.predicted_reasons, v.ground_truth_reasons);
    v.raw_response = backend.complete(judge_request(p, settings)).content;
    v.verdict = parse_verdict(v.raw_response);
  };
  const std::size_t width = backend.order_independent() ? std::max<std::size_t>(1, backend.max_in_flight()) : 1;
  for (std::size_t base = 0; base < res.verdicts.size(); base += width) {
    const std::size_t end = std::min(res.verdicts.size(), base + width);
    if (width == 1) {
      ask(res.verdicts[base]);
      continue;
    }
    std::vector<std::future<void>> fs;
    for (std::size_t i = base; i < end; ++i) fs.push_back(std::async(std::launch::async, [&, i] { ask(res.verdicts[i]); }));
    for (auto& f : fs) f.get();
  }
  for (const auto& v : res.verdicts) {
    if (v.verdict == Verdict::Match) ++res.match;
    else if (v.verdict == Verdict::Mismatch) ++res.mismatch;
    else ++res.unparseable;
  }
  return res;
}

// ── Reasoning accuracy: human evaluation ────────────────────────────────────

struct HumanEval {
  std::map<std::string, double> per_rater;  // rater_id -> accuracy
  double accuracy = 0;                      // mean of per-rater accuracies
  std::size_t rows = 0;

  Json to_json() const { return {{"per_rater", per_rater}, {"accuracy", accuracy}, {"rows", rows}}; }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line, const std::string& where) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (quoted) throw SchemaError(where + ": unterminated quote");
  out.push_back(trim(cur));
  return out;
}

}  // namespace detail

/// CSV with columns image_id, rater_id, verdict (match|mismatch). Each
/// rater's accuracy is computed separately and the accuracies averaged.
inline HumanEval import_human_eval(std::istream& in, const std::set<std::string>& known_images,
                                   const std::string& name = "<csv>") {
  std::string line;
  std::size_t lineno = 0;
  std::map<std::string, std::size_t> col;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto head = detail::split_csv_line(line, name + ":" + std::to_string(lineno));
    for (std::size_t i = 0; i < head.size(); ++i) col[head[i]] = i;
    break;
  }
  for (const char* need : {"image_id", "rater_id", "verdict"})
    if (!col.count(need)) throw SchemaError(name + ": missing column '" + need + "'");

  std::map<std::string, std::pair<std::size_t, std::size_t>> tally;  // rater -> (match, total)
  std::set<std::pair<std::string, std::string>> seen;
  HumanEval h;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::string where = name + ":" + std::to_string(lineno);
    const auto f = detail::split_csv_line(line, where);
    if (f.size() != col.size()) throw SchemaError(where + ": expected " + std::to_string(col.size()) + " fields");
    const std::string& image = f[col["image_id"]];
    const std::string& rater = f[col["rater_id"]];
    const std::string& verdict = f[col["verdict"]];
    if (image.empty() || rater.empty()) throw SchemaError(where + ": empty image_id or rater_id");
    if (verdict != "match" && verdict != "mismatch")
      throw SchemaError(where + ": verdict must be match or mismatch, got '" + verdict + "'");
    if (!known_images.count(image)) throw SchemaError(where + ": unknown image_id '" + image + "'");
    if (!seen.insert({image, rater}).second)
      throw SchemaError(where + ": duplicate row for image '" + image + "' and rater '" + rater + "'");
    auto& t = tally[rater];
    t.first += verdict == "match";
    ++t.second;
    ++h.rows;
  }
  if (tally.empty()) throw SchemaError(name + ": no ratings");
  for (const auto& [rater, t] : tally) {
    h.per_rater[rater] = double(t.first) / double(t.second);
    h.accuracy += h.per_rater[rater];
  }
  h.accuracy /= double(tally.size());
  return h;
}

inline HumanEval import_human_eval(const std::string& path, const std::set<std::string>& known_images) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return import_human_eval(in, known_images, path);
}

// ── Reports ─────────────────────────────────────────────────────────────────

/// Everything measured for one category.
struct CategoryResult {
  std::optional<MetricsReport> detection;
  std::optional<codegen::OutcomeCounts> generation;
  std::optional<double> llm_reasoning;
  std::optional<double> human_reasoning;
};

struct BenchReport {
  std::map<std::string, CategoryResult> categories;
  Json provenance = Json::object();

  Json to_json() const {
    Json cats = Json::object();
    for (const auto& [name, c] : categories) {
      Json j = Json::object();
      if (c.detection) j["detection"] = c.detection->to_json();
      if (c.generation) j["generation"] = c.generation->to_json();
      if (c.llm_reasoning) j["reasoning_llm"] = *c.llm_reasoning;
      if (c.human_reasoning) j["reasoning_human"] = *c.human_reasoning;
      cats[name] = j;
    }
    return {{"categories", cats}, {"provenance", provenance}};
  }

  /// Markdown tables: detection metrics, generation outcomes, reasoning.
  std::string markdown() const {
    std::string out;
    auto mean_row = [](const std::vector<std::vector<double>>& cols) {
      std::string row = "| Average |";
      for (const auto& col : cols) {
        double s = 0;
        for (double v : col) s += v;
        row += " " + (col.empty() ? std::string("-") : fmt3(s / double(col.size()))) + " |";
      }
      return row + "\n";
    };

    out += "## Detection\n\n| Category | Accuracy | Precision | Recall | F1 | Runs |\n|---|---|---|---|---|---|\n";
    std::vector<std::vector<double>> det(4);
    for (const auto& [name, c] : categories) {
      if (!c.detection) continue;
      const auto& a = c.detection->average;
      out += "| " + name + " | " + fmt3(a.accuracy) + " | " + fmt3(a.precision) + " | " + fmt3(a.recall) + " | " +
             fmt3(a.f1) + " | " + std::to_string(c.detection->n_runs()) + " |\n";
      det[0].push_back(a.accuracy);
      det[1].push_back(a.precision);
      det[2].push_back(a.recall);
      det[3].push_back(a.f1);
    }
    out += mean_row(det);

    out += "\n## Code generation\n\n| Category | Success | Error | Missing | Attempts |\n|---|---|---|---|---|\n";
    std::vector<std::vector<double>> gen(3);
    for (const auto& [name, c] : categories) {
      if (!c.generation) continue;
      const auto& g = *c.generation;
      out += "| " + name + " | " + fmt3(g.rate(g.success)) + " | " + fmt3(g.rate(g.error)) + " | " +
             fmt3(g.rate(g.missing)) + " | " + std::to_string(g.total()) + " |\n";
      gen[0].push_back(g.rate(g.success));
      gen[1].push_back(g.rate(g.error));
      gen[2].push_back(g.rate(g.missing));
    }
    out += mean_row(gen);

    out += "\n## Reasoning accuracy\n\n| Category | Human | LLM |\n|---|---|---|\n";
    std::vector<std::vector<double>> rea(2);
    for (const auto& [name, c] : categories) {
      if (!c.human_reasoning && !c.llm_reasoning) continue;
      out += "| " + name + " | " + (c.human_reasoning ? fmt3(*c.human_reasoning) : "-") + " | " +
             (c.llm_reasoning ? fmt3(*c.llm_reasoning) : "-") + " |\n";
      if (c.human_reasoning) rea[0].push_back(*c.human_reasoning);
      if (c.llm_reasoning) rea[1].push_back(*c.llm_reasoning);
    }
    out += mean_row(rea);
    return out;
  }
};

}  // namespace logicode::bench
