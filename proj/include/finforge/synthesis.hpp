#pragma once

#include <functional>
#include <string>
#include <vector>

#include "finforge/corpus.hpp"
#include "finforge/similarity.hpp"

namespace finforge {

struct KnowledgeUnit {
  std::string id;
  std::string text;
  std::vector<std::string> label_hints;  // label keys
};

// Agent interfaces are injected; the repo ships deterministic scripted
// agents plus a subprocess stub for remote LLM-backed agents.
using GenerationAgent = std::function<Record(const KnowledgeUnit&, const Label&)>;

struct EvolutionFeedback {
  double diversity = 0.0;                // [0,1]
  double novelty = 0.0;                  // [0,1] mean novelty of new instructions
  std::vector<bool> answerable;          // per instruction
};

using EvolutionAgent =
    std::function<std::vector<std::string>(const std::vector<std::string>&, const EvolutionFeedback&)>;
using FeedbackFn =
    std::function<EvolutionFeedback(const std::vector<std::string>& instructions,
                                    const std::vector<std::string>& prior)>;

struct SkippedItem {
  std::string knowledge_id;
  std::string label;
  std::string reason;
};

struct Track1Result {
  Corpus corpus;
  std::vector<SkippedItem> skipped;
};

// One candidate record per (knowledge unit, label) pairing where the unit
// hints that label. Agent failures skip the item; all failing is an error.
Track1Result run_track1(const std::vector<KnowledgeUnit>& knowledge,
                        const std::vector<Label>& labels, const GenerationAgent& agent);

// Instruction novelty: 1 - max sim against every prior instruction.
double instruction_novelty(const std::string& instruction, const std::vector<std::string>& prior,
                           const SimilarityConfig& cfg);

// Default feedback: mean novelty of instructions not in the prior set,
// diversity = fraction of distinct instructions, everything answerable.
EvolutionFeedback default_feedback(const std::vector<std::string>& instructions,
                                   const std::vector<std::string>& prior);

// Iterates the evolution agent until mean-novelty improvement drops below
// convergence_eps or k_max rounds ran; unanswerable instructions dropped.
std::vector<std::string> run_track2(const std::vector<std::string>& seeds,
                                    const EvolutionAgent& agent, const FeedbackFn& feedback_fn,
                                    int k_max, double convergence_eps);

// Union of the two tracks; id spaces must be disjoint.
Corpus merge_tracks(const Corpus& d_task, const Corpus& d_evolution);

// Built-in deterministic generation agent used by the CLI: renders the
// knowledge text into a templated triplet whose answer is quoted in thinking.
Record templated_generation(const KnowledgeUnit& unit, const Label& label);

// Remote-agent stub: spawns `command`, writes one JSON request line per call
// ({"knowledge_id","knowledge","label"}) to its stdin and reads one JSON
// response line ({"query","thinking","answer"}) from its stdout.
GenerationAgent subprocess_agent(const std::string& command);

}  // namespace finforge
