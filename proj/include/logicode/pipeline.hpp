#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "logicode/bench.hpp"
#include "logicode/codegen.hpp"
#include "logicode/dataset.hpp"
#include "logicode/exec.hpp"
#include "logicode/llm.hpp"
#include "logicode/prompt.hpp"
#include "logicode/rules.hpp"
#include "logicode/synth.hpp"

// The full offline loop driven by one JSON config:
//   rules -> prompt -> generation campaign -> detection runs -> scoring
//   -> judge -> report bundle.

namespace logicode::pipeline {

/// Dataset could not be loaded or scored.
class DataError : public Error {
 public:
  using Error::Error;
};

enum class RunSource { Regenerate, Reexecute };

struct E2eConfig {
  std::filesystem::path base_dir;  // relative paths resolve against this
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;
  std::optional<synth::SynthConfig> synthetic;
  std::filesystem::path data_root;
  bool strict_geometry = false;
  dataset::Split split = dataset::Split::Test;
  std::vector<std::filesystem::path> rules;
  llm::BackendConfig backend;
  std::optional<llm::BackendConfig> judge_backend;
  std::string prompt_template = "v1";
  std::string judge_template = "judge_v1";
  std::size_t runs = 5;
  std::size_t generation_attempts = 20;
  RunSource run_source = RunSource::Regenerate;
  std::size_t workers = 1;
  bool judge = true;
  std::map<std::string, std::filesystem::path> human_eval;  // category -> csv

  std::filesystem::path resolve(const std::filesystem::path& p) const {
    return p.is_absolute() ? p : base_dir / p;
  }
};

namespace detail {

inline void only_fields(const Json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok |= it.key() == a;
    if (!ok) throw ConfigError(where + "." + it.key() + ": unknown field");
  }
}

inline std::size_t positive(const Json& j, const char* key, std::size_t dflt) {
  if (!j.contains(key)) return dflt;
  const Json& v = j[key];
  if (!v.is_number_integer() || v.get<long long>() < 1)
    throw ConfigError(std::string("config.") + key + ": expected a positive integer");
  return v.get<std::size_t>();
}

inline std::string text(const Json& j, const std::string& where) {
  if (!j.is_string()) throw ConfigError(where + ": expected string");
  return j.get<std::string>();
}

}  // namespace detail

inline E2eConfig config_from_json(const Json& j, const std::filesystem::path& base_dir = ".") {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  detail::only_fields(j, "config",
                      {"output_dir", "seed", "dataset", "split", "rules", "backend", "judge_backend",
                       "prompt_template", "judge_template", "runs", "generation_attempts", "run_source", "workers",
                       "judge", "human_eval"});
  E2eConfig c;
  c.base_dir = base_dir;
  if (!j.contains("output_dir")) throw ConfigError("config.output_dir: required");
  c.output_dir = detail::text(j["output_dir"], "config.output_dir");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer() || j["seed"].get<long long>() < 0) throw ConfigError("config.seed: expected a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }

  if (!j.contains("dataset") || !j["dataset"].is_object()) throw ConfigError("config.dataset: required object");
  const Json& d = j["dataset"];
  detail::only_fields(d, "config.dataset", {"synthetic", "root", "strict_geometry"});
  if (d.contains("synthetic") == d.contains("root"))
    throw ConfigError("config.dataset: give exactly one of 'synthetic' or 'root'");
  if (d.contains("synthetic")) {
    try {
      c.synthetic = synth::config_from_json(d["synthetic"]);
      synth::check_config(*c.synthetic);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("config.dataset.") + e.what());
    }
  } else {
    c.data_root = detail::text(d["root"], "config.dataset.root");
  }
  if (d.contains("strict_geometry")) {
    if (!d["strict_geometry"].is_boolean()) throw ConfigError("config.dataset.strict_geometry: expected boolean");
    c.strict_geometry = d["strict_geometry"].get<bool>();
  }

  if (j.contains("split")) {
    auto s = dataset::parse_split(detail::text(j["split"], "config.split"));
    if (!s) throw ConfigError("config.split: expected \"train\" or \"test\"");
    c.split = *s;
  }
  if (j.contains("rules")) {
    const Json& r = j["rules"];
    if (r.is_string()) c.rules.push_back(r.get<std::string>());
    else if (r.is_array())
      for (std::size_t i = 0; i < r.size(); ++i) c.rules.push_back(detail::text(r[i], "config.rules[" + std::to_string(i) + "]"));
    else throw ConfigError("config.rules: expected a path or a list of paths");
  }
  if (c.rules.empty() && !c.synthetic) throw ConfigError("config.rules: required for a dataset root");

  if (!j.contains("backend")) throw ConfigError("config.backend: required");
  c.backend = llm::BackendConfig::from_json(j["backend"], "config.backend");
  if (j.contains("judge_backend")) c.judge_backend = llm::BackendConfig::from_json(j["judge_backend"], "config.judge_backend");
  if (j.contains("prompt_template")) c.prompt_template = detail::text(j["prompt_template"], "config.prompt_template");
  if (j.contains("judge_template")) c.judge_template = detail::text(j["judge_template"], "config.judge_template");
  c.runs = detail::positive(j, "runs", c.runs);
  c.generation_attempts = detail::positive(j, "generation_attempts", c.generation_attempts);
  c.workers = detail::positive(j, "workers", c.workers);
  if (j.contains("run_source")) {
    const std::string s = detail::text(j["run_source"], "config.run_source");
    if (s == "regenerate") c.run_source = RunSource::Regenerate;
    else if (s == "reexecute") c.run_source = RunSource::Reexecute;
    else throw ConfigError("config.run_source: expected \"regenerate\" or \"reexecute\"");
  }
  if (j.contains("judge")) {
    if (!j["judge"].is_boolean()) throw ConfigError("config.judge: expected boolean");
    c.judge = j["judge"].get<bool>();
  }
  if (j.contains("human_eval")) {
    if (!j["human_eval"].is_object()) throw ConfigError("config.human_eval: expected object of category -> csv path");
    for (auto it = j["human_eval"].begin(); it != j["human_eval"].end(); ++it)
      c.human_eval[it.key()] = detail::text(it.value(), "config.human_eval." + it.key());
  }
  return c;
}

inline E2eConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path.string());
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigError(path.string() + ": not valid JSON");
  return config_from_json(j, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

struct E2eResult {
  bench::BenchReport report;
  std::vector<std::filesystem::path> files;  // written, relative to output_dir
};

namespace detail {

class Bundle {
 public:
  explicit Bundle(std::filesystem::path root) : root_(std::move(root)) {}

  void write(const std::filesystem::path& rel, const std::string& content) {
    const auto p = root_ / rel;
    std::filesystem::create_directories(p.parent_path());
    write_file(p.string(), content);
    files_.push_back(rel);
  }

  std::vector<std::filesystem::path> files() const { return files_; }

 private:
  std::filesystem::path root_;
  std::vector<std::filesystem::path> files_;
};

inline dataset::DatasetManifest load_data(const E2eConfig& c) {
  try {
    if (c.synthetic) return synth::generate_synthetic(*c.synthetic, c.seed);
    dataset::LoadOptions o;
    o.strict_geometry = c.strict_geometry;
    return dataset::load_manifest(c.resolve(c.data_root), o);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw DataError(e.what());
  }
}

inline std::vector<rules::RuleSet> load_rules(const E2eConfig& c) {
  std::vector<rules::RuleSet> out;
  try {
    if (c.rules.empty()) out.push_back(synth::template_rules(c.synthetic->template_name));
    for (const auto& p : c.rules) out.push_back(rules::load_ruleset(c.resolve(p).string()));
    for (const auto& rs : out) rules::require_lint_clean(rs);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("config.rules: ") + e.what());
  }
  std::set<std::string> seen;
  for (const auto& rs : out)
    if (!seen.insert(rs.category).second) throw ConfigError("config.rules: category '" + rs.category + "' given twice");
  return out;
}

}  // namespace detail

/// Runs the whole loop and writes the bundle under output_dir. Errors:
/// ConfigError / PromptError for bad configuration, llm::BackendError for
/// backend failures, DataError for dataset problems.
inline E2eResult run_e2e(const E2eConfig& c) {
  const auto rulesets = detail::load_rules(c);
  prompt::Template gen_tmpl, judge_tmpl;
  try {
    gen_tmpl = prompt::load_template(c.prompt_template);
    judge_tmpl = prompt::load_template(c.judge_template);
  } catch (const prompt::UnknownTemplate& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  const auto manifest = detail::load_data(c);
  const std::string dataset_id = manifest.fingerprint();

  auto resolved = [&c](llm::BackendConfig b) {
    if (!b.cassette.empty()) b.cassette = c.resolve(b.cassette).string();
    if (!b.record.empty()) b.record = c.resolve(b.record).string();
    return b;
  };
  std::unique_ptr<llm::Backend> backend = llm::make_backend(resolved(c.backend), rulesets);
  std::unique_ptr<llm::Backend> judge_owned;
  llm::Backend* judge = backend.get();
  if (c.judge_backend) {
    judge_owned = llm::make_backend(resolved(*c.judge_backend), rulesets);
    judge = judge_owned.get();
  }
  codegen::GenerationSettings gen;
  gen.model = c.backend.model;
  gen.temperature = c.backend.temperature.value_or(0.7);
  bench::JudgeSettings js;
  const llm::BackendConfig& jc = c.judge_backend ? *c.judge_backend : c.backend;
  js.model = jc.model;
  js.temperature = c.judge_backend && jc.temperature ? *jc.temperature : 0.0;

  detail::Bundle bundle(c.resolve(c.output_dir));
  E2eResult result;
  Json prov_categories = Json::object();

  for (const auto& rs : rulesets) {
    const std::string cat = rs.category;
    const auto bundle_prompt = prompt::build_prompt(rs, gen_tmpl);
    const std::string rules_hash = rules::fingerprint(rs);
    Json cat_prov = {{"rules_hash", rules_hash}, {"prompt_template_hash", gen_tmpl.hash}};

    // Generation campaign.
    const auto camp = codegen::run_generation_campaign(rs, *backend, bundle_prompt, c.generation_attempts, gen);
    std::string log;
    for (const auto& o : camp.outcomes) {
      Json line = o.to_json();
      line["provenance"] = {{"prompt_template_hash", gen_tmpl.hash}, {"rules_hash", rules_hash}, {"backend_id", backend->id()}};
      log += line.dump() + "\n";
    }
    bundle.write(std::filesystem::path("outcomes") / (cat + ".jsonl"), log);
    auto& cr = result.report.categories[cat];
    cr.generation = camp.counts;

    // Programs for the detection runs.
    std::vector<const codegen::GenerationOutcome*> programs;
    for (const auto& o : camp.outcomes)
      if (o.outcome == codegen::Outcome::Success) programs.push_back(&o);
    Json run_hashes = Json::array();
    if (!programs.empty()) {
      std::vector<bench::BinaryScore> scores;
      std::vector<double> judged;
      for (std::size_t k = 0; k < c.runs; ++k) {
        const auto* g = c.run_source == RunSource::Reexecute ? programs.front() : programs[k % programs.size()];
        exec::ExecOptions eo;
        eo.workers = c.workers;
        eo.category = cat;
        if (!c.synthetic) eo.facts.image_root = c.resolve(c.data_root);
        const auto run = exec::run_detection(*g->program, manifest, c.split,
                                             {"", gen_tmpl.hash, rules_hash, backend->id(), dataset_id}, eo);
        const std::string stem = cat + "/run_" + std::to_string(k);
        bundle.write(std::filesystem::path("runs") / (stem + ".json"), run.to_json().dump(2) + "\n");
        run_hashes.push_back(run.provenance.to_json());
        try {
          scores.push_back(bench::score_binary(run, manifest));
        } catch (const bench::MissingGroundTruth& e) {
          throw DataError(e.what());
        }
        if (c.judge) {
          const auto jr = bench::judge_reasoning(run, manifest, *judge, judge_tmpl, js);
          Json jj = jr.to_json();
          jj["provenance"] = run.provenance.to_json();
          bundle.write(std::filesystem::path("judge") / (stem + ".json"), jj.dump(2) + "\n");
          if (auto a = jr.accuracy()) judged.push_back(*a);
        }
      }
      cr.detection = bench::average_runs(scores);
      if (!judged.empty()) {
        double s = 0;
        for (double a : judged) s += a;
        cr.llm_reasoning = s / double(judged.size());
      }
    }
    if (auto it = c.human_eval.find(cat); it != c.human_eval.end()) {
      std::set<std::string> ids;
      for (const auto& r : manifest.records)
        if (r.category == cat) ids.insert(r.image_id);
      try {
        cr.human_reasoning = bench::import_human_eval(c.resolve(it->second).string(), ids).accuracy;
      } catch (const Error& e) {
        throw DataError(e.what());
      }
    }
    cat_prov["runs"] = run_hashes;
    prov_categories[cat] = cat_prov;
  }

  result.report.provenance = {{"dataset_id", dataset_id},
                              {"backend_id", backend->id()},
                              {"judge_backend_id", judge->id()},
                              {"judge_template_hash", judge_tmpl.hash},
                              {"categories", prov_categories}};
  bundle.write("report.json", result.report.to_json().dump(2) + "\n");
  bundle.write("report.md", result.report.markdown() + "\n## Provenance\n\n```json\n" +
                                result.report.provenance.dump(2) + "\n```\n");
  result.files = bundle.files();
  return result;
}

inline constexpr int kExitOk = 0, kExitConfig = 2, kExitBackend = 3, kExitData = 4, kExitOther = 1;

/// Maps the current exception to an exit code and prints its message.
inline int exit_code_for_current(std::ostream& err) {
  try {
    throw;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const prompt::PromptError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const llm::BackendError& e) {
    err << "backend error: " << e.what() << "\n";
    return kExitBackend;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitOther;
  }
}

inline int e2e_main(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err) {
  try {
    const auto cfg = load_config(config_path);
    const auto res = run_e2e(cfg);
    out << res.report.markdown();
    out << "wrote " << res.files.size() << " files to " << cfg.resolve(cfg.output_dir).string() << "\n";
    return kExitOk;
  } catch (...) {
    return exit_code_for_current(err);
  }
}

}  // namespace logicode::pipeline
