// logicode: command-line front end for every stage of the pipeline.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "logicode/fact_service.hpp"
#include "logicode/logicode.hpp"

using namespace logicode;
namespace fs = std::filesystem;

namespace {

struct BackendFlags {
  std::string kind = "oracle";
  std::string cassette;
  std::string model = "gpt-4";
  std::string record;
  std::size_t max_in_flight = 4;

  void add(CLI::App* app) {
    app->add_option("--backend", kind, "live, replay or oracle")->check(CLI::IsMember({"live", "replay", "oracle"}));
    app->add_option("--cassette", cassette, "cassette file for the replay backend");
    app->add_option("--model", model, "model name sent with each request");
    app->add_option("--record", record, "append every exchange to this cassette");
    app->add_option("--max-in-flight", max_in_flight, "concurrent requests for the live backend")
        ->check(CLI::PositiveNumber);
  }

  std::unique_ptr<llm::Backend> make(const std::vector<rules::RuleSet>& rulesets) const {
    Json j = {{"kind", kind}, {"model", model}, {"max_in_flight", max_in_flight}};
    if (!cassette.empty()) j["cassette"] = cassette;
    if (!record.empty()) j["record"] = record;
    return llm::make_backend(llm::BackendConfig::from_json(j, "--backend"), rulesets);
  }
};

dataset::Split split_arg(const std::string& s) {
  auto sp = dataset::parse_split(s);
  if (!sp) throw ConfigError("--split: expected train or test, got '" + s + "'");
  return *sp;
}

dataset::DatasetManifest load_data(const std::string& dir, bool lenient) {
  try {
    return dataset::load_manifest(dir, {!lenient});
  } catch (const SchemaError& e) {
    throw pipeline::DataError(e.what());
  } catch (const InvariantError& e) {
    throw pipeline::DataError(e.what());
  } catch (const IoError& e) {
    throw pipeline::DataError(e.what());
  }
}

const dataset::ImageRecord& find_image(const dataset::DatasetManifest& m, const std::string& id) {
  const auto* r = m.find(id);
  if (!r) throw pipeline::DataError("no image '" + id + "' in dataset");
  return *r;
}

rules::RuleSet load_rules(const std::string& path) {
  try {
    return rules::load_ruleset(path);
  } catch (const SchemaError& e) {
    throw ConfigError(e.what());
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") std::cout << text;
  else write_file(path, text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Logic-guided anomaly detection: rules, generated checks, scoring."};
  app.require_subcommand(1);
  int code = pipeline::kExitOk;
  std::function<void()> action;

  // dataset
  auto* ds = app.add_subcommand("dataset", "Inspect or synthesise annotation sets")->require_subcommand(1);
  std::string ds_dir;
  bool ds_lenient = false;
  auto* ds_validate = ds->add_subcommand("validate", "Check every annotation file and list all problems");
  ds_validate->add_option("dir", ds_dir, "dataset directory")->required();
  ds_validate->add_flag("--lenient", ds_lenient, "report degenerate polygons as warnings");
  ds_validate->callback([&] {
    action = [&] {
      const auto scan = dataset::scan_manifest(ds_dir, {!ds_lenient});
      for (const auto& w : scan.warnings) std::cerr << "warning: " << w.to_string() << "\n";
      for (const auto& e : scan.errors) std::cerr << "error: " << e.to_string() << "\n";
      for (const auto& [key, n] : scan.manifest.counts())
        std::cout << key.first << "\t" << key.second << "\t" << n << "\n";
      std::cout << scan.manifest.records.size() << " valid, " << scan.errors.size() << " error(s), "
                << scan.warnings.size() << " warning(s)\n";
      if (!scan.errors.empty()) code = pipeline::kExitData;
    };
  });

  synth::SynthConfig sc;
  std::uint64_t seed = 0;
  std::string synth_out;
  auto* ds_synth = ds->add_subcommand("synth", "Generate a labelled synthetic split");
  ds_synth->add_option("--template", sc.template_name, "scene template")->capture_default_str();
  ds_synth->add_option("--n", sc.n, "number of images")->required();
  ds_synth->add_option("--seed", seed, "generator seed")->capture_default_str();
  ds_synth->add_option("--quantity", sc.rates.quantity, "quantity anomaly rate");
  ds_synth->add_option("--size", sc.rates.size, "size anomaly rate");
  ds_synth->add_option("--position", sc.rates.position, "position anomaly rate");
  ds_synth->add_option("--matching", sc.rates.matching, "matching anomaly rate");
  ds_synth->add_option("--train-fraction", sc.train_fraction, "share of images in the train split");
  ds_synth->add_option("--out", synth_out, "output directory")->required();
  ds_synth->callback([&] {
    action = [&] {
      const auto m = synth::generate_synthetic(sc, seed);
      dataset::write_manifest(m, synth_out);
      std::cout << "wrote " << m.records.size() << " images to " << synth_out << " (dataset " << m.fingerprint()
                << ")\n";
    };
  });

  // facts
  auto* fa = app.add_subcommand("facts", "Per-image fact store")->require_subcommand(1);
  std::string fa_data, fa_image;
  bool fa_lenient = false;
  auto add_fact_opts = [&](CLI::App* c) {
    c->add_option("--data", fa_data, "dataset directory")->required();
    c->add_option("--image", fa_image, "image id")->required();
    c->add_flag("--lenient", fa_lenient, "load degenerate polygons instead of rejecting the dataset");
  };
  auto build_store = [&] {
    const auto m = load_data(fa_data, fa_lenient);
    return facts::build_facts(find_image(m, fa_image), {fs::path(fa_data)});
  };
  auto* fa_dump = fa->add_subcommand("dump", "Print the facts of one image as JSON");
  add_fact_opts(fa_dump);
  fa_dump->callback([&] { action = [&] { std::cout << facts::to_json(build_store()).dump(2) << "\n"; }; });
  auto* fa_serve = fa->add_subcommand("serve", "Answer length-prefixed JSON queries on stdin");
  add_fact_opts(fa_serve);
  fa_serve->callback([&] {
    action = [&] {
      const auto store = build_store();
      const auto n = facts::service::serve(store, std::cin, std::cout);
      std::cerr << "served " << n << " request(s)\n";
    };
  });

  // rules
  auto* ru = app.add_subcommand("rules", "Rule sets")->require_subcommand(1);
  std::vector<std::string> lint_files;
  auto* ru_lint = ru->add_subcommand("lint", "Check rule files for problems");
  ru_lint->add_option("files", lint_files, "rule files")->required();
  ru_lint->callback([&] {
    action = [&] {
      for (const auto& f : lint_files) {
        const auto rs = load_rules(f);
        const auto problems = rules::lint(rs);
        for (const auto& p : problems) std::cerr << f << ": " << p << "\n";
        std::cout << f << ": " << rs.rules.size() << " rule(s), " << problems.size() << " problem(s)\n";
        if (!problems.empty()) code = pipeline::kExitConfig;
      }
    };
  });

  // prompt
  auto* pr = app.add_subcommand("prompt", "Prompt templates")->require_subcommand(1);
  std::string pr_rules, pr_template = "v1", pr_dir = prompt::default_template_dir().string();
  auto* pr_render = pr->add_subcommand("render", "Render the generation prompt for a rule set");
  pr_render->add_option("--rules", pr_rules, "rule file")->required();
  pr_render->add_option("--template", pr_template, "template id")->capture_default_str();
  pr_render->add_option("--template-dir", pr_dir, "template directory");
  pr_render->callback([&] {
    action = [&] {
      const auto b = prompt::build_prompt(load_rules(pr_rules), pr_template, pr_dir);
      std::cerr << "template " << b.template_id << " " << b.template_hash << "\n";
      std::cout << b.rendered;
    };
  });

  // codegen
  auto* cg = app.add_subcommand("codegen", "Program generation")->require_subcommand(1);
  std::string cg_rules, cg_template = "v1", cg_out, cg_program_out;
  std::size_t cg_n = 20;
  double cg_temperature = 0.7;
  BackendFlags cg_backend;
  auto* cg_run = cg->add_subcommand("run", "Run a generation campaign and classify every attempt");
  cg_run->add_option("--rules", cg_rules, "rule file")->required();
  cg_run->add_option("--n", cg_n, "attempts")->check(CLI::PositiveNumber)->capture_default_str();
  cg_run->add_option("--template", cg_template, "prompt template id")->capture_default_str();
  cg_run->add_option("--temperature", cg_temperature, "sampling temperature")->check(CLI::Range(0.0, 2.0));
  cg_run->add_option("--out", cg_out, "outcome log (JSON lines)");
  cg_run->add_option("--program-out", cg_program_out, "write the first successful program here");
  cg_backend.add(cg_run);
  cg_run->callback([&] {
    action = [&] {
      const auto rs = load_rules(cg_rules);
      const auto bundle = prompt::build_prompt(rs, cg_template);
      auto backend = cg_backend.make({rs});
      const auto camp = codegen::run_generation_campaign(rs, *backend, bundle, cg_n,
                                                         {cg_backend.model, cg_temperature, 2048});
      if (!cg_out.empty()) write_file(cg_out, camp.outcome_log());
      if (!cg_program_out.empty()) {
        const auto* g = camp.first_success();
        if (!g) throw pipeline::DataError("no successful attempt to write");
        write_file(cg_program_out, checklang::pretty_print(*g->program));
      }
      Json s = camp.summary();
      s["backend_id"] = backend->id();
      std::cout << s.dump(2) << "\n";
    };
  });

  // exec
  auto* ex = app.add_subcommand("exec", "Run programs over a dataset")->require_subcommand(1);
  std::string ex_program, ex_rules, ex_data, ex_split = "test", ex_out, ex_category;
  std::string ex_template_hash = "none", ex_backend_id = "manual";
  std::size_t ex_workers = 1;
  bool ex_lenient = false;
  auto* ex_run = ex->add_subcommand("run", "Detect anomalies with a checklang program");
  ex_run->add_option("--program", ex_program, "checklang source file")->required();
  ex_run->add_option("--rules", ex_rules, "rule file the program must cover")->required();
  ex_run->add_option("--data", ex_data, "dataset directory")->required();
  ex_run->add_option("--split", ex_split, "train or test")->capture_default_str();
  ex_run->add_option("--out", ex_out, "run record path");
  ex_run->add_option("--workers", ex_workers, "worker threads")->check(CLI::PositiveNumber);
  ex_run->add_option("--prompt-hash", ex_template_hash, "provenance: prompt template hash");
  ex_run->add_option("--backend-id", ex_backend_id, "provenance: backend id");
  ex_run->add_flag("--lenient", ex_lenient, "fail degenerate images individually");
  ex_run->callback([&] {
    action = [&] {
      const auto rs = load_rules(ex_rules);
      const auto cls = codegen::classify(read_file(ex_program), rs);
      if (cls.outcome != codegen::Outcome::Success) {
        for (const auto& d : cls.diagnostics) std::cerr << ex_program << ": " << d << "\n";
        throw ConfigError(ex_program + ": program is not runnable (" +
                          std::string(checklang::to_string(cls.outcome)) + ")");
      }
      const auto m = load_data(ex_data, ex_lenient);
      exec::ExecOptions eo;
      eo.workers = ex_workers;
      eo.category = rs.category;
      eo.facts.image_root = fs::path(ex_data);
      const auto run = exec::run_detection(*cls.program, m, split_arg(ex_split),
                                           {"", ex_template_hash, rules::fingerprint(rs), ex_backend_id,
                                            m.fingerprint()},
                                           eo);
      emit(ex_out, run.to_json().dump(2) + "\n");
      if (!ex_out.empty()) {
        std::size_t abnormal = 0, failed = 0;
        for (const auto& r : run.reports) {
          abnormal += r.predicted == Prediction::Abnormal;
          failed += r.predicted == Prediction::EvaluationFailed;
        }
        std::cout << run.reports.size() << " image(s): " << abnormal << " abnormal, " << failed << " failed\n";
      }
    };
  });

  // bench
  auto* be = app.add_subcommand("bench", "Scoring and reports")->require_subcommand(1);
  std::vector<std::string> be_runs;
  std::string be_data, be_out, be_judge_template = "judge_v1", be_outcomes, be_human;
  bool be_lenient = false;
  BackendFlags be_backend;
  auto add_bench_opts = [&](CLI::App* c) {
    c->add_option("--run", be_runs, "run record(s)")->required();
    c->add_option("--data", be_data, "ground-truth dataset directory")->required();
    c->add_flag("--lenient", be_lenient, "accept degenerate polygons in the dataset");
  };
  auto load_runs = [&] {
    std::vector<exec::RunRecord> runs;
    for (const auto& p : be_runs) runs.push_back(exec::read_run(p));
    return runs;
  };
  auto score_all = [&](const dataset::DatasetManifest& m, const std::vector<exec::RunRecord>& runs) {
    std::vector<bench::BinaryScore> scores;
    try {
      for (const auto& r : runs) scores.push_back(bench::score_binary(r, m));
    } catch (const bench::MissingGroundTruth& e) {
      throw pipeline::DataError(e.what());
    }
    return bench::average_runs(scores);
  };

  auto* be_score = be->add_subcommand("score", "Accuracy, precision, recall and F1 averaged over runs");
  add_bench_opts(be_score);
  be_score->callback([&] {
    action = [&] {
      const auto m = load_data(be_data, be_lenient);
      const auto rep = score_all(m, load_runs());
      for (std::size_t i = 0; i < rep.per_run.size(); ++i)
        std::cout << be_runs[i] << "\t" << rep.per_run[i].rendered() << "\n";
      std::cout << "average\t" << rep.average.rendered() << "\n";
    };
  });

  auto* be_judge = be->add_subcommand("judge", "Grade predicted reasons against ground truth");
  add_bench_opts(be_judge);
  be_judge->add_option("--template", be_judge_template, "judge template id")->capture_default_str();
  be_judge->add_option("--out", be_out, "write verdicts as JSON");
  be_backend.add(be_judge);
  be_judge->callback([&] {
    action = [&] {
      const auto m = load_data(be_data, be_lenient);
      const auto tmpl = prompt::load_template(be_judge_template);
      Json all = Json::array();
      for (const auto& run : load_runs()) {
        auto backend = be_backend.make({});
        bench::JudgeSettings js;
        js.model = be_backend.model;
        const auto jr = bench::judge_reasoning(run, m, *backend, tmpl, js);
        const auto a = jr.accuracy();
        std::cout << run.category << "\t" << jr.match << " match, " << jr.mismatch << " mismatch, "
                  << jr.unparseable << " unparseable, accuracy " << (a ? bench::fmt3(*a) : "-") << "\n";
        all.push_back(jr.to_json());
      }
      if (!be_out.empty()) write_file(be_out, all.dump(2) + "\n");
    };
  });

  auto* be_report = be->add_subcommand("report", "Markdown tables for one category");
  add_bench_opts(be_report);
  be_report->add_option("--outcomes", be_outcomes, "generation outcome log (JSON lines)");
  be_report->add_option("--human", be_human, "human evaluation CSV (image_id,rater_id,verdict)");
  be_report->add_option("--out", be_out, "write the report here instead of stdout");
  be_report->callback([&] {
    action = [&] {
      const auto m = load_data(be_data, be_lenient);
      const auto runs = load_runs();
      bench::BenchReport report;
      const auto det = score_all(m, runs);
      auto& cr = report.categories[det.category];
      cr.detection = det;
      if (!be_outcomes.empty()) {
        codegen::OutcomeCounts counts;
        std::ifstream in(be_outcomes);
        if (!in) throw IoError("cannot open " + be_outcomes);
        for (std::string line; std::getline(in, line);) {
          if (trim(line).empty()) continue;
          const auto o = checklang::parse_outcome(Json::parse(line).at("outcome").get<std::string>());
          if (!o) throw SchemaError(be_outcomes + ": unknown outcome");
          counts.add(*o);
        }
        cr.generation = counts;
      }
      if (!be_human.empty()) {
        std::set<std::string> ids;
        for (const auto& r : m.records)
          if (r.category == det.category) ids.insert(r.image_id);
        cr.human_reasoning = bench::import_human_eval(be_human, ids).accuracy;
      }
      for (const auto& r : runs) report.provenance["runs"].push_back(r.provenance.to_json());
      emit(be_out, report.markdown());
    };
  });

  // e2e
  std::string e2e_config;
  auto* e2e = app.add_subcommand("e2e", "Run the whole loop from one JSON config");
  e2e->add_option("config", e2e_config, "config file")->required();
  e2e->callback([&] { action = [&] { code = pipeline::e2e_main(e2e_config, std::cout, std::cerr); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : pipeline::kExitConfig;
  }
  try {
    if (action) action();
  } catch (const SchemaError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return pipeline::kExitData;
  } catch (const InvariantError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return pipeline::kExitData;
  } catch (const IoError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return pipeline::kExitData;
  } catch (...) {
    return pipeline::exit_code_for_current(std::cerr);
  }
  return code;
}
