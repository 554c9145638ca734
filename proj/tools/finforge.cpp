// finforge: label-guided data curation pipeline CLI.
//
// Exit codes: 0 success, 1 validation failure, 2 input error,
//             3 evaluator error, 4 state error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "finforge/attribution.hpp"
#include "finforge/corpus.hpp"
#include "finforge/governance.hpp"
#include "finforge/labels.hpp"
#include "finforge/sim_model.hpp"
#include "finforge/similarity.hpp"
#include "finforge/synthesis.hpp"
#include "finforge/weights.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace finforge;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitInput = 2;
constexpr int kExitEvaluator = 3;
constexpr int kExitState = 4;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << content;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

struct PipelineConfig {
  std::string catalog_path;
  std::string corpus_path;
  std::string output_dir = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;
  json raw;  // resolved view, written next to outputs for provenance
};

PipelineConfig load_config(const std::string& path, std::optional<std::uint64_t> seed_override) {
  json j = json::parse(read_file(path));
  PipelineConfig cfg;
  cfg.catalog_path = j.value("catalog", std::string{});
  cfg.corpus_path = j.value("corpus", std::string{});
  cfg.output_dir = j.value("output_dir", std::string{"out"});
  if (j.contains("seed")) {
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.seed_set = true;
  }
  if (const char* env = std::getenv("FINFORGE_SEED")) {
    cfg.seed = std::stoull(env);
    cfg.seed_set = true;
  }
  if (seed_override) {
    cfg.seed = *seed_override;
    cfg.seed_set = true;
  }
  if (!cfg.seed_set) throw ConfigError("seed is mandatory (config 'seed', FINFORGE_SEED, or --seed)");
  j["seed"] = cfg.seed;
  cfg.raw = std::move(j);
  return cfg;
}

void snapshot_config(const PipelineConfig& cfg, const std::string& command) {
  fs::create_directories(cfg.output_dir);
  json j = cfg.raw;
  j["resolved_command"] = command;
  write_file((fs::path(cfg.output_dir) / ("resolved_config." + command + ".json")).string(),
             j.dump(2) + "\n");
}

DedupConfig dedup_config_from(const json& g, std::uint64_t seed) {
  DedupConfig d;
  d.shingle_size = g.value("shingle_size", 5);
  d.num_hashes = g.value("num_hashes", 128);
  d.jaccard_threshold = g.value("jaccard_threshold", 0.9);
  d.exact_oracle = g.value("exact_oracle", false);
  d.seed = seed;
  return d;
}

WeightParams weight_params_from(const json& w) {
  WeightParams p;
  p.alpha = w.value("alpha", 1.0);
  p.beta = w.value("beta", 1.0);
  p.gamma = w.value("gamma", 0.1);
  p.rho = w.value("rho", 0.5);
  p.n = w.value("n", 16);
  p.k = w.value("k", 4);
  std::string mode = w.value("mode", std::string{"any-of-k"});
  if (mode == "any-of-k") {
    p.passk_mode = PassKMode::any_of_k;
  } else if (mode == "unbiased") {
    p.passk_mode = PassKMode::unbiased;
    p.n_total = w.value("n_total", p.k);
  } else {
    throw ConfigError("unknown pass@k mode '" + mode + "'");
  }
  return p;
}

AttributionParams attribution_params_from(const json& a) {
  AttributionParams p;
  p.p_target = a.value("p_target", 0.8);
  if (a.contains("p_target_per_label")) {
    for (auto& [label, t] : a.at("p_target_per_label").items())
      p.p_target_per_label[label] = t.get<double>();
  }
  if (a.contains("sota") || a.contains("target_increment_points")) {
    p.p_target = target_from_sota(a.value("sota", p.p_target),
                                  a.value("target_increment_points", 0.0));
  }
  p.lambda = a.value("lambda", 0.0);
  p.b0 = a.value("b0", 1000.0);
  p.beta_budget = a.value("beta_budget", 1.0);
  p.b_max = a.value("b_max", 1e12);
  p.eps = a.value("eps", 1e-8);
  p.eps_eff = a.value("eps_eff", 1e-4);
  p.max_iters = a.value("max_iters", 20);
  p.regression_patience = a.value("regression_patience", 2);
  return p;
}

int cmd_labels_validate(const std::string& catalog_path, const std::string& corpus_path) {
  LabelCatalog catalog;
  try {
    catalog = load_catalog(catalog_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  std::string text;
  try {
    text = read_file(corpus_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  // Validate labels record by record so one offender doesn't hide the rest.
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  int offenders = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      Record r = parse_record(line);
      if (!catalog.validate_key(r.label)) {
        ++offenders;
        std::cout << "invalid label: record '" << r.id << "' line " << lineno << " label '"
                  << r.label << "'\n";
      }
    } catch (const std::exception& e) {
      std::cerr << "error: " << corpus_path << ":" << lineno << ": " << e.what() << "\n";
      return kExitInput;
    }
  }
  if (offenders > 0) {
    std::cout << offenders << " record(s) with invalid labels\n";
    return kExitValidation;
  }
  std::cout << "all labels valid\n";
  return kExitOk;
}

int cmd_synthesize(const PipelineConfig& cfg) {
  snapshot_config(cfg, "synthesize");
  const json& s = cfg.raw.at("synthesis");
  LabelCatalog catalog = load_catalog(cfg.catalog_path);

  std::vector<KnowledgeUnit> knowledge;
  for (const auto& line : read_lines(s.at("knowledge").get<std::string>())) {
    json k = json::parse(line);
    KnowledgeUnit u;
    u.id = k.at("id").get<std::string>();
    u.text = k.at("text").get<std::string>();
    for (const auto& h : k.value("label_hints", json::array()))
      u.label_hints.push_back(h.get<std::string>());
    knowledge.push_back(std::move(u));
  }
  std::vector<Label> labels;
  for (const auto& [scene, attr] : catalog.allowed_pairs()) labels.push_back({scene, attr});

  GenerationAgent agent = templated_generation;
  if (s.contains("agent_command"))
    agent = subprocess_agent(s.at("agent_command").get<std::string>());
  Track1Result t1 = run_track1(knowledge, labels, agent);
  for (const auto& skip : t1.skipped) {
    std::cerr << "skipped " << skip.knowledge_id << "/" << skip.label << ": " << skip.reason
              << "\n";
  }

  Corpus d_evolution;
  if (s.contains("seeds")) {
    std::vector<std::string> seeds;
    for (const auto& seed : s.at("seeds")) seeds.push_back(seed.get<std::string>());
    // Built-in evolution agent: deepens each instruction one step per round.
    EvolutionAgent evo = [](const std::vector<std::string>& in, const EvolutionFeedback&) {
      std::vector<std::string> out = in;
      for (const auto& i : in) out.push_back("Explain step by step, then conclude: " + i);
      return out;
    };
    auto evolved = run_track2(seeds, evo, default_feedback, s.value("k_max", 3),
                              s.value("convergence_eps", 0.01));
    std::string evo_label = s.value("evolution_label", labels.front().key());
    int idx = 0;
    for (const auto& instr : evolved) {
      Record r;
      r.id = "evo:" + std::to_string(idx++);
      r.label = evo_label;
      r.query = instr;
      r.thinking = "Working through the instruction: " + instr + ". The core request is " +
                   instr + ".";
      r.answer = instr;
      r.provenance = Provenance::evolution_track;
      d_evolution.records.push_back(std::move(r));
    }
  }

  Corpus merged = merge_tracks(t1.corpus, d_evolution);
  std::string out_path = (fs::path(cfg.output_dir) / "d_synthesis.jsonl").string();
  save_corpus(merged, out_path);
  std::cout << "track1=" << t1.corpus.size() << " track2=" << d_evolution.size()
            << " merged=" << merged.size() << " -> " << out_path << "\n";
  return kExitOk;
}

int cmd_verify(const PipelineConfig& cfg) {
  snapshot_config(cfg, "verify");
  LabelCatalog catalog = load_catalog(cfg.catalog_path);
  Corpus corpus = load_corpus(cfg.corpus_path, catalog);
  if (!cfg.raw.contains("sim_scenario"))
    throw ConfigError("verify needs 'sim_scenario' (ensemble of >= 2 sim models)");
  SimScenario scenario = load_sim_scenario(cfg.raw.at("sim_scenario").get<std::string>());
  if (scenario.models.size() < 2)
    throw ConfigError("consistency verification needs at least 2 models");

  SimilarityConfig sim_cfg;
  for (auto& r : corpus.records) {
    ResponseSet rs;
    rs.query_id = r.id;
    for (const auto& [model_id, model] : scenario.models) {
      auto responses = model.respond(r, 1, cfg.seed);
      rs.responses.emplace_back(model_id, responses.front().text);
    }
    double c = consistency(rs, sim_cfg);
    bool valid = reasoning_validate(r, substring_entailment_judge);
    r.verify_flag = valid;
    r.quality_score = score_record(r, c, valid);
  }
  fs::create_directories(cfg.output_dir);
  std::string out_path = (fs::path(cfg.output_dir) / "verified.jsonl").string();
  save_corpus(corpus, out_path);
  std::cout << "verified " << corpus.size() << " records -> " << out_path << "\n";
  return kExitOk;
}

int cmd_govern(const PipelineConfig& cfg) {
  snapshot_config(cfg, "govern");
  LabelCatalog catalog = load_catalog(cfg.catalog_path);
  Corpus corpus = load_corpus(cfg.corpus_path, catalog);
  const json g = cfg.raw.value("governance", json::object());

  DedupConfig dcfg = dedup_config_from(g, cfg.seed);
  std::vector<std::string> denylist;
  if (g.contains("denylist")) denylist = read_lines(g.at("denylist").get<std::string>());
  std::vector<std::string> eval_texts;
  if (g.contains("eval_sets")) {
    for (const auto& p : g.at("eval_sets")) eval_texts.push_back(read_file(p.get<std::string>()));
  }
  ContaminationIndex index = build_contamination_index(eval_texts, g.value("ngram_size", 13));
  double tau = g.value("tau", 0.7);
  std::map<std::string, double> tau_per_label;
  if (g.contains("tau_per_label")) {
    for (auto& [label, t] : g.at("tau_per_label").items()) tau_per_label[label] = t.get<double>();
  }

  GovernanceOutcome outcome = run_governance(corpus, dcfg, denylist, index, tau, tau_per_label);
  fs::create_directories(cfg.output_dir);
  std::string out_path = (fs::path(cfg.output_dir) / "d_final.jsonl").string();
  save_corpus(outcome.corpus, out_path);
  write_file((fs::path(cfg.output_dir) / "governance_report.json").string(),
             outcome.report.to_json() + "\n");
  if (!outcome.report.reconciles()) {
    std::cerr << "error: governance report counts do not reconcile\n";
    return kExitState;
  }
  std::cout << "input=" << outcome.report.input_count
            << " dedup=" << outcome.report.dedup_removed
            << " detox=" << outcome.report.detox_removed
            << " decontam=" << outcome.report.decontam_removed
            << " below_tau=" << outcome.report.below_threshold_removed
            << " output=" << outcome.report.output_count << " -> " << out_path << "\n";
  return kExitOk;
}

int cmd_weights(const PipelineConfig& cfg) {
  snapshot_config(cfg, "weights");
  LabelCatalog catalog = load_catalog(cfg.catalog_path);
  Corpus corpus = load_corpus(cfg.corpus_path, catalog);
  WeightParams params = weight_params_from(cfg.raw.value("weights", json::object()));

  if (!cfg.raw.contains("sim_scenario"))
    throw ConfigError("weights needs 'sim_scenario' naming the current + reference models");
  SimScenario scenario;
  try {
    scenario = load_sim_scenario(cfg.raw.at("sim_scenario").get<std::string>());
  } catch (const std::exception& e) {
    std::cerr << "error: evaluator unavailable: " << e.what() << "\n";
    return kExitEvaluator;
  }
  NamedEvaluator current = scenario.current().as_evaluator();
  std::vector<NamedEvaluator> refs;
  for (SimModel* m : scenario.references()) refs.push_back(m->as_evaluator());

  std::optional<WeightTable> prev;
  const json w = cfg.raw.value("weights", json::object());
  if (w.contains("prev_table") && !w.at("prev_table").is_null()) {
    prev = WeightTable::from_json(read_file(w.at("prev_table").get<std::string>()));
  }

  WeightEstimate est = estimate_weights(corpus, catalog, current, refs, params, prev, cfg.seed);
  for (const auto& warn : est.warnings) std::cerr << "warning: " << warn << "\n";
  for (const auto& label : est.shortfall_labels)
    std::cerr << "shortfall: label '" << label << "' has fewer than " << params.n
              << " records; used all\n";

  fs::create_directories(cfg.output_dir);
  std::string table_path = (fs::path(cfg.output_dir) / "weight_table.json").string();
  write_file(table_path, est.table.to_json(params) + "\n");

  // per-sample weight export: (record id, label, normalized weight)
  std::ostringstream per_sample;
  for (const auto& r : corpus.records) {
    json line;
    line["id"] = r.id;
    line["label"] = r.label;
    line["weight"] = est.table.per_label.at(r.label).normalized;
    per_sample << line.dump() << "\n";
  }
  write_file((fs::path(cfg.output_dir) / "per_sample_weights.jsonl").string(), per_sample.str());

  std::cout << "labels=" << est.table.per_label.size()
            << " normalization_checksum=" << est.table.normalized_sum() << " -> " << table_path
            << "\n";
  return kExitOk;
}

int cmd_loop_run(const PipelineConfig& cfg, bool resume, std::optional<int> max_iters_override) {
  snapshot_config(cfg, "loop");
  if (!cfg.raw.contains("sim_scenario"))
    throw ConfigError("loop run needs 'sim_scenario' (external evaluators attach via the "
                      "library API)");
  SimScenario scenario = load_sim_scenario(cfg.raw.at("sim_scenario").get<std::string>());
  SimModel& model = scenario.current();
  AttributionParams params = attribution_params_from(cfg.raw.value("attribution", json::object()));
  if (max_iters_override) params.max_iters = *max_iters_override;

  fs::create_directories(cfg.output_dir);
  fs::path checkpoint_path = fs::path(cfg.output_dir) / "loop_checkpoint.json";

  std::vector<TaskState> states;
  int start_iteration = 1;
  if (resume) {
    Checkpoint cp;
    try {
      cp = parse_checkpoint(read_file(checkpoint_path.string()));
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitState;
    }
    states = std::move(cp.states);
    start_iteration = cp.iteration + 1;
    for (const auto& s : states) model.set_data(s.label, s.d);
  } else {
    for (const auto& [label, _] : model.skills()) {
      TaskState s;
      s.label = label;
      s.p = model.success_probability(label);
      states.push_back(std::move(s));
    }
  }

  TrainerEvaluator trainer = make_sim_trainer(model);
  std::ostringstream iteration_log;
  auto on_iteration = [&](const std::vector<TaskState>& st, int k, const IterationReport& rep) {
    write_file(checkpoint_path.string(), serialize_checkpoint(st, k, cfg.seed) + "\n");
    iteration_log << report_to_json(rep) << "\n";
    std::cout << report_to_table(rep);
  };

  LoopResult result =
      run_loop(std::move(states), params, trainer, exact_synthesizer(), start_iteration,
               on_iteration);
  for (const auto& warn : result.warnings) std::cerr << "warning: " << warn << "\n";

  json final_json;
  final_json["iterations_run"] = result.iterations_run;
  final_json["stop_reason"] = to_string(result.stop_reason);
  final_json["seed"] = cfg.seed;
  json tasks = json::object();
  for (const auto& s : result.final_states) {
    tasks[s.label] = {{"p", s.p},
                      {"d", s.d},
                      {"regenerate_signaled", s.regenerate_signaled}};
  }
  final_json["tasks"] = tasks;
  write_file((fs::path(cfg.output_dir) / "loop_result.json").string(), final_json.dump(2) + "\n");
  write_file((fs::path(cfg.output_dir) / "loop_iterations.jsonl").string(), iteration_log.str());
  std::cout << "stop_reason=" << to_string(result.stop_reason)
            << " iterations=" << result.iterations_run << "\n";
  return kExitOk;
}

int cmd_report(const PipelineConfig& cfg) {
  LabelCatalog catalog = load_catalog(cfg.catalog_path);
  Corpus corpus = load_corpus(cfg.corpus_path, catalog);
  auto hist = label_histogram(corpus);
  std::size_t total = 0;
  std::cout << "label                          count\n";
  for (const auto& [label, count] : hist) {
    std::cout << label;
    for (std::size_t pad = label.size(); pad < 31; ++pad) std::cout << ' ';
    std::cout << count << "\n";
    total += count;
  }
  std::cout << "total                          " << total << "\n";
  json j;
  j["total"] = total;
  j["histogram"] = hist;
  fs::create_directories(cfg.output_dir);
  write_file((fs::path(cfg.output_dir) / "corpus_report.json").string(), j.dump(2) + "\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finforge: label-guided data curation and attribution pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed_override;
  std::string catalog_path, corpus_path;

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "pipeline config file (JSON)")->required();
    sub->add_option("--seed", seed_override, "override the config seed");
  };

  auto* labels = app.add_subcommand("labels", "label catalog operations");
  auto* labels_validate = labels->add_subcommand("validate", "validate corpus labels");
  labels_validate->add_option("--catalog", catalog_path)->required();
  labels_validate->add_option("--corpus", corpus_path)->required();

  auto* synthesize = app.add_subcommand("synthesize", "run the dual-track synthesis pipeline");
  add_config(synthesize);
  auto* verify = app.add_subcommand("verify", "consistency + reasoning verification");
  add_config(verify);
  auto* govern = app.add_subcommand("govern", "dedup, detox, decontaminate, final filter");
  add_config(govern);
  auto* weights = app.add_subcommand("weights", "difficulty-aware weight estimation");
  add_config(weights);

  auto* loop = app.add_subcommand("loop", "attribution loop");
  auto* loop_run = loop->add_subcommand("run", "run the dynamic attribution loop");
  add_config(loop_run);
  bool resume = false;
  std::optional<int> max_iters_override;
  loop_run->add_flag("--resume", resume, "resume from the checkpoint in output_dir");
  loop_run->add_option("--max-iters", max_iters_override, "override max iterations");

  auto* report = app.add_subcommand("report", "corpus statistics report");
  add_config(report);

  CLI11_PARSE(app, argc, argv);

  try {
    if (labels_validate->parsed()) return cmd_labels_validate(catalog_path, corpus_path);
    PipelineConfig cfg = load_config(config_path, seed_override);
    if (synthesize->parsed()) return cmd_synthesize(cfg);
    if (verify->parsed()) return cmd_verify(cfg);
    if (govern->parsed()) return cmd_govern(cfg);
    if (weights->parsed()) return cmd_weights(cfg);
    if (loop_run->parsed()) return cmd_loop_run(cfg, resume, max_iters_override);
    if (report->parsed()) return cmd_report(cfg);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitState;
  }
  return kExitOk;
}
