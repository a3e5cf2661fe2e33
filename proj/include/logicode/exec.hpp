#pragma once

#include <atomic>
#include <chrono>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "logicode/checklang/eval.hpp"
#include "logicode/checklang/parser.hpp"
#include "logicode/checklang/printer.hpp"
#include "logicode/dataset.hpp"
#include "logicode/facts.hpp"
#include "logicode/report.hpp"

namespace logicode::exec {

/// Where a run came from. Every field is required in a RunRecord.
struct Provenance {
  std::string program_hash;
  std::string prompt_template_hash;
  std::string rules_hash;
  std::string backend_id;
  std::string dataset_id;

  Json to_json() const {
    return {{"program_hash", program_hash},
            {"prompt_template_hash", prompt_template_hash},
            {"rules_hash", rules_hash},
            {"backend_id", backend_id},
            {"dataset_id", dataset_id}};
  }
};

inline std::string program_hash(const checklang::CheckProgram& p) { return sha256_hex(checklang::pretty_print(p)); }

struct RunRecord {
  Provenance provenance;
  std::string category;
  dataset::Split split = dataset::Split::Test;
  std::string program_source;  // canonical text, so the run can be replayed
  std::vector<AnalysisReport> reports;  // sorted by image_id

  Json to_json(bool with_timings = false) const {
    Json reps = Json::array();
    for (const auto& r : reports) reps.push_back(r.to_json(with_timings));
    return {{"provenance", provenance.to_json()},
            {"category", category},
            {"split", dataset::to_string(split)},
            {"program", program_source},
            {"reports", reps}};
  }

  static RunRecord from_json(const Json& j) {
    RunRecord r;
    try {
      const Json& p = j.at("provenance");
      r.provenance = {p.at("program_hash").get<std::string>(), p.at("prompt_template_hash").get<std::string>(),
                      p.at("rules_hash").get<std::string>(), p.at("backend_id").get<std::string>(),
                      p.at("dataset_id").get<std::string>()};
      r.category = j.at("category").get<std::string>();
      auto s = dataset::parse_split(j.at("split").get<std::string>());
      if (!s) throw SchemaError("run record: bad split");
      r.split = *s;
      r.program_source = j.at("program").get<std::string>();
      for (const auto& rep : j.at("reports")) r.reports.push_back(AnalysisReport::from_json(rep));
    } catch (const Json::exception& e) {
      throw SchemaError(std::string("malformed run record: ") + e.what());
    }
    r.check();
    return r;
  }

  void check() const {
    const std::pair<const char*, const std::string*> fields[] = {
        {"program_hash", &provenance.program_hash}, {"prompt_template_hash", &provenance.prompt_template_hash},
        {"rules_hash", &provenance.rules_hash},     {"backend_id", &provenance.backend_id},
        {"dataset_id", &provenance.dataset_id}};
    for (auto [name, v] : fields)
      if (v->empty()) throw InvariantError(std::string("run record lacks provenance field ") + name);
    for (const auto& r : reports) {
      if (r.predicted == Prediction::Normal && !r.reasons.empty())
        throw InvariantError("report '" + r.image_id + "': normal with reasons");
      if (r.predicted == Prediction::Abnormal && r.reasons.empty())
        throw InvariantError("report '" + r.image_id + "': abnormal without reasons");
    }
  }
};

inline void write_run(const RunRecord& r, const std::string& path) { write_file(path, r.to_json().dump(2) + "\n"); }
inline RunRecord read_run(const std::string& path) { return RunRecord::from_json(read_json_file(path)); }

struct ExecOptions {
  std::size_t workers = 1;
  std::optional<std::string> category;  // restrict to one category
  facts::BuildOptions facts;
  checklang::EvalOptions eval;
};

/// Facts plus evaluation for one image. Never throws.
inline AnalysisReport analyze_image(const checklang::CheckProgram& program, const dataset::ImageRecord& record,
                                    const ExecOptions& opts) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  facts::FactStore store;
  try {
    store = facts::build_facts(record, opts.facts);
  } catch (const std::exception& e) {
    AnalysisReport r;
    r.image_id = record.image_id;
    r.predicted = Prediction::EvaluationFailed;
    r.error = std::string("fact build failed: ") + e.what();
    r.fact_ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    return r;
  }
  const auto t1 = clock::now();
  AnalysisReport r = checklang::evaluate(program, store, opts.eval);
  r.fact_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  r.eval_ms = std::chrono::duration<double, std::milli>(clock::now() - t1).count();
  return r;
}

/// Runs the program over every record of the split. Results are ordered by
/// image_id whatever the worker count.
inline RunRecord run_detection(const checklang::CheckProgram& program, const dataset::DatasetManifest& manifest,
                               dataset::Split split, Provenance prov, const ExecOptions& opts = {}) {
  std::vector<const dataset::ImageRecord*> todo;
  for (const auto& r : manifest.records)
    if (r.split == split && (!opts.category || r.category == *opts.category)) todo.push_back(&r);

  RunRecord run;
  prov.program_hash = program_hash(program);
  run.provenance = std::move(prov);
  run.split = split;
  run.program_source = checklang::pretty_print(program);
  if (opts.category) run.category = *opts.category;
  else if (!todo.empty()) run.category = todo.front()->category;
  run.reports.resize(todo.size());

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next++) < todo.size();) run.reports[i] = analyze_image(program, *todo[i], opts);
  };
  const std::size_t n = std::min(std::max<std::size_t>(opts.workers, 1), std::max<std::size_t>(todo.size(), 1));
  if (n == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < n; ++k) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  run.check();
  return run;
}

/// Re-runs a recorded program on the manifest.
inline RunRecord replay_run(const RunRecord& recorded, const dataset::DatasetManifest& manifest,
                            const ExecOptions& opts = {}) {
  ExecOptions o = opts;
  if (!recorded.category.empty()) o.category = recorded.category;
  return run_detection(checklang::parse(recorded.program_source), manifest, recorded.split, recorded.provenance, o);
}

}  // namespace logicode::exec
