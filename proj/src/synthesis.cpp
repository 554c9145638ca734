#include "finforge/synthesis.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "json.hpp"

namespace finforge {

using nlohmann::json;

Track1Result run_track1(const std::vector<KnowledgeUnit>& knowledge,
                        const std::vector<Label>& labels, const GenerationAgent& agent) {
  if (knowledge.empty()) throw ConfigError("track 1 needs a non-empty knowledge list");
  for (const auto& unit : knowledge) {
    if (unit.text.empty()) throw ConfigError("knowledge unit '" + unit.id + "' has empty text");
  }
  Track1Result result;
  std::size_t attempted = 0;
  for (const auto& unit : knowledge) {
    for (const auto& label : labels) {
      if (std::find(unit.label_hints.begin(), unit.label_hints.end(), label.key()) ==
          unit.label_hints.end())
        continue;
      ++attempted;
      try {
        Record r = agent(unit, label);
        r.label = label.key();
        r.provenance = Provenance::task_track;
        result.corpus.records.push_back(std::move(r));
      } catch (const std::exception& e) {
        result.skipped.push_back({unit.id, label.key(), e.what()});
      }
    }
  }
  if (attempted > 0 && result.corpus.records.empty()) {
    throw ConfigError("track 1: all " + std::to_string(attempted) + " generation attempts failed");
  }
  return result;
}

double instruction_novelty(const std::string& instruction, const std::vector<std::string>& prior,
                           const SimilarityConfig& cfg) {
  double max_sim = 0.0;
  for (const auto& p : prior) max_sim = std::max(max_sim, sim(instruction, p, cfg));
  return 1.0 - max_sim;
}

EvolutionFeedback default_feedback(const std::vector<std::string>& instructions,
                                   const std::vector<std::string>& prior) {
  SimilarityConfig cfg;
  EvolutionFeedback fb;
  std::set<std::string> prior_set(prior.begin(), prior.end());
  std::set<std::string> distinct(instructions.begin(), instructions.end());
  fb.diversity = instructions.empty()
                     ? 0.0
                     : static_cast<double>(distinct.size()) / instructions.size();
  double total = 0.0;
  std::size_t new_count = 0;
  for (const auto& ins : instructions) {
    fb.answerable.push_back(!ins.empty());
    if (!prior_set.count(ins)) {
      total += instruction_novelty(ins, prior, cfg);
      ++new_count;
    }
  }
  fb.novelty = new_count > 0 ? total / new_count : 0.0;
  return fb;
}

std::vector<std::string> run_track2(const std::vector<std::string>& seeds,
                                    const EvolutionAgent& agent, const FeedbackFn& feedback_fn,
                                    int k_max, double convergence_eps) {
  if (seeds.empty()) throw ConfigError("track 2 needs a non-empty seed set");
  if (k_max < 1) throw ConfigError("k_max must be >= 1");

  std::vector<std::string> current = seeds;
  std::vector<std::string> prior = seeds;  // everything seen so far, in first-seen order
  std::set<std::string> seen(seeds.begin(), seeds.end());

  for (int k = 1; k <= k_max; ++k) {
    EvolutionFeedback fb = feedback_fn(current, prior);
    std::vector<std::string> next = agent(current, fb);
    if (next.empty()) throw ConfigError("evolution agent returned an empty instruction set");
    for (const auto& ins : next) {
      if (ins.empty()) throw ConfigError("evolution agent produced an empty instruction");
    }
    // Order-normalize before novelty so intra-iteration scheduling can't
    // change the outcome.
    std::vector<std::string> sorted_next = next;
    std::sort(sorted_next.begin(), sorted_next.end());
    SimilarityConfig cfg;
    double total_novelty = 0.0;
    std::size_t new_count = 0;
    for (const auto& ins : sorted_next) {
      if (seen.count(ins)) continue;
      total_novelty += instruction_novelty(ins, prior, cfg);
      ++new_count;
    }
    double mean_novelty = new_count > 0 ? total_novelty / new_count : 0.0;
    for (const auto& ins : sorted_next) {
      if (seen.insert(ins).second) prior.push_back(ins);
    }
    current = std::move(next);
    if (mean_novelty < convergence_eps) break;  // novelty saturated
  }

  // Fitness-based filtering: drop instructions the feedback marks unanswerable.
  EvolutionFeedback final_fb = feedback_fn(current, prior);
  std::vector<std::string> kept;
  for (std::size_t i = 0; i < current.size(); ++i) {
    bool ok = i < final_fb.answerable.size() ? final_fb.answerable[i] : true;
    if (ok) kept.push_back(current[i]);
  }
  return kept;
}

Corpus merge_tracks(const Corpus& d_task, const Corpus& d_evolution) {
  Corpus merged;
  merged.records.reserve(d_task.size() + d_evolution.size());
  std::set<std::string> ids;
  for (const auto& src : {&d_task, &d_evolution}) {
    for (const auto& r : src->records) {
      if (!ids.insert(r.id).second)
        throw ConfigError("id collision '" + r.id + "' while merging tracks");
      merged.records.push_back(r);
    }
  }
  return merged;
}

Record templated_generation(const KnowledgeUnit& unit, const Label& label) {
  Record r;
  r.id = "task:" + unit.id + ":" + label.key();
  r.label = label.key();
  r.query = "In the " + label.scene + " scene, apply " + label.attribute +
            " to the following material: " + unit.text;
  r.answer = unit.text;
  r.thinking = "The material states: " + unit.text + ". For " + label.attribute +
               " the extracted result is " + unit.text + ".";
  r.provenance = Provenance::task_track;
  return r;
}

namespace {

// Spawn `command` through /bin/sh, feed it `input` on stdin, return stdout.
std::string run_subprocess(const std::string& command, const std::string& input) {
  int in_pipe[2], out_pipe[2];
  if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0)
    throw ConfigError("subprocess agent: pipe() failed");
  pid_t pid = fork();
  if (pid < 0) throw ConfigError("subprocess agent: fork() failed");
  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  ssize_t w = write(in_pipe[1], input.data(), input.size());
  close(in_pipe[1]);
  std::string output;
  char buf[4096];
  ssize_t n;
  while ((n = read(out_pipe[0], buf, sizeof(buf))) > 0) output.append(buf, n);
  close(out_pipe[0]);
  int status = 0;
  waitpid(pid, &status, 0);
  if (w < 0 || !WIFEXITED(status) || WEXITSTATUS(status) != 0)
    throw ConfigError("subprocess agent '" + command + "' failed");
  return output;
}

}  // namespace

GenerationAgent subprocess_agent(const std::string& command) {
  return [command](const KnowledgeUnit& unit, const Label& label) -> Record {
    json req;
    req["knowledge_id"] = unit.id;
    req["knowledge"] = unit.text;
    req["label"] = label.key();
    std::string out = run_subprocess(command, req.dump() + "\n");
    auto nl = out.find('\n');
    json resp = json::parse(nl == std::string::npos ? out : out.substr(0, nl));
    Record r;
    r.id = "task:" + unit.id + ":" + label.key();
    r.label = label.key();
    r.query = resp.at("query").get<std::string>();
    r.thinking = resp.value("thinking", std::string{});
    r.answer = resp.at("answer").get<std::string>();
    r.provenance = Provenance::task_track;
    if (r.query.empty() || r.answer.empty())
      throw ConfigError("subprocess agent returned an empty query or answer");
    return r;
  };
}

}  // namespace finforge
