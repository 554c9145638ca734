#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "finforge/labels.hpp"

namespace finforge {

struct AttributionParams {
  double p_target = 0.8;  // fraction in [0,1]
  std::map<std::string, double> p_target_per_label;
  double lambda = 0.0;         // allocation decay on cumulative data
  double b0 = 1000.0;          // initial iteration budget
  double beta_budget = 1.0;    // budget decay per iteration, (0,1]
  double b_max = 1e12;         // total allocation ceiling
  double eps = 1e-8;           // efficiency denominator guard
  double eps_eff = 1e-4;       // marginal-improvement floor
  int max_iters = 20;
  int regression_patience = 2;
  double e_init = 1.0;  // first-iteration efficiency bootstrap

  void check() const;
  double target_for(const std::string& label_key) const;
};

// P_target helper: SOTA level plus a fixed increment in percentage points.
double target_from_sota(double sota, double increment_points);

struct Prediction {
  std::string label;
  std::string predicted;
  std::string gold;
};

struct PassAt1Result {
  std::map<std::string, double> per_label;
  std::vector<std::string> skipped_labels;  // zero predictions
};

PassAt1Result pass_at_1(const std::vector<Prediction>& predictions);

struct PriorityTerms {
  double gap = 0.0;         // max(0, P_target - p_t)
  double efficiency = 0.0;  // max(0, delta_p) / (delta_d + eps)
  double priority = 0.0;    // gap * efficiency * exp(-lambda * d_t)
};

PriorityTerms priority(double p_t, double d_t, double target, double delta_p_k, double delta_d_k,
                       const AttributionParams& params);

double iteration_budget(double b0, double beta_budget, int k);

struct Allocation {
  std::map<std::string, double> per_label;
  bool stalled = false;  // all priorities zero
};

// Proportional split of b_k; allocations sum to b_k exactly unless stalled.
Allocation allocate(const std::map<std::string, double>& priorities, double b_k);

// Real-valued allocations to whole items: floor each, then hand the
// remaining units to the largest fractional parts (ties by label key).
std::map<std::string, long long> apportion_items(const std::map<std::string, double>& alloc);

struct HistoryEntry {
  int iteration = 0;
  double p = 0.0;
  double delta_d = 0.0;
  bool reverted = false;
};

struct TaskState {
  std::string label;
  double p = 0.0;  // latest measured pass@1
  double d = 0.0;  // cumulative allocated data
  std::vector<HistoryEntry> history;
  std::map<int, double> snapshots;  // iteration -> d before that iteration's allocation
  int consecutive_drops = 0;
  bool regenerate_signaled = false;
};

enum class StopReason { all_targets_met, budget_exhausted, efficiency_floor, max_iters };
std::string to_string(StopReason r);

struct IterationRow {
  std::string label;
  double p = 0.0, gap = 0.0, efficiency = 0.0, priority = 0.0;
  double delta_d = 0.0, d = 0.0;
  bool reverted = false;
  bool regenerate = false;
};

struct IterationReport {
  int iteration = 0;
  double budget = 0.0;
  bool stalled = false;
  std::vector<IterationRow> rows;
};

// The "train then evaluate" cycle, abstracted. `measure` returns the task's
// pass@1 after this iteration's training; `revert` restores a data version.
struct TrainerEvaluator {
  std::function<void(const std::string& label, double amount)> train;
  std::function<void(const std::string& label, double d_value)> revert;
  std::function<double(const std::string& label, int iteration)> measure;
};

// Returns the amount actually produced for a request (may fall short).
using Synthesizer = std::function<double(const std::string& label, double requested)>;

Synthesizer exact_synthesizer();

struct StepResult {
  IterationReport report;
  std::vector<std::string> deficits;  // synthesizer shortfalls
};

StepResult step(std::vector<TaskState>& states, const AttributionParams& params,
                const TrainerEvaluator& trainer, const Synthesizer& synthesizer, int k);

struct RevertOutcome {
  bool reverted = false;
  bool regenerate = false;
};

// Restores the latest pre-iteration snapshot when p dropped; signals
// regeneration after regression_patience consecutive drops.
RevertOutcome maybe_revert(TaskState& state, const AttributionParams& params,
                           const TrainerEvaluator& trainer, int k);

struct LoopResult {
  int iterations_run = 0;
  std::vector<TaskState> final_states;
  StopReason stop_reason = StopReason::max_iters;
  std::vector<IterationReport> reports;
  std::vector<std::string> warnings;
};

using IterationCallback =
    std::function<void(const std::vector<TaskState>&, int iteration, const IterationReport&)>;

LoopResult run_loop(std::vector<TaskState> states, const AttributionParams& params,
                    const TrainerEvaluator& trainer, const Synthesizer& synthesizer,
                    int start_iteration = 1, const IterationCallback& on_iteration = nullptr);

// Checkpoint: full task-state set + iteration counter + seed, JSON.
std::string serialize_checkpoint(const std::vector<TaskState>& states, int iteration,
                                 std::uint64_t seed);
struct Checkpoint {
  std::vector<TaskState> states;
  int iteration = 0;
  std::uint64_t seed = 0;
};
Checkpoint parse_checkpoint(const std::string& text);

std::string report_to_json(const IterationReport& report);
std::string report_to_table(const IterationReport& report);

}  // namespace finforge
