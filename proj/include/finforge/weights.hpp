#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "finforge/corpus.hpp"

namespace finforge {

struct ResponseJudgment {
  std::string text;
  bool correct = false;
};

struct EvalOutcome {
  std::string label;
  std::string instance_id;
  std::string model_id;
  std::vector<ResponseJudgment> responses;
};

enum class PassKMode { any_of_k, unbiased };

struct WeightParams {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 0.1;   // additive base weight and clipping floor (same constant)
  double rho = 0.5;
  int n = 16;           // sampled instances per label
  int k = 4;            // responses per instance
  PassKMode passk_mode = PassKMode::any_of_k;
  int n_total = 0;      // responses generated per instance in unbiased mode (0 = k)

  void check() const;
};

struct LabelWeights {
  double raw = 0.0;
  double smoothed = 0.0;
  std::optional<double> previous;
  double normalized = 0.0;
  bool stale = false;  // evaluator failed this epoch, previous weight carried
};

struct WeightTable {
  std::map<std::string, LabelWeights> per_label;
  int epoch = 0;

  double normalized_sum() const;
  std::string to_json(const WeightParams& params) const;
  static WeightTable from_json(const std::string& text);
};

// Per-label pass@k over one model's outcomes.
//   any-of-k: mean over instances of [>= 1 correct response]
//   unbiased: mean over instances of 1 - C(n-c, k)/C(n, k)
double pass_at_k(const std::vector<EvalOutcome>& outcomes, PassKMode mode, int k);

// w_raw = alpha * (1 - pass_cur) + beta * max(0, mean(pass_refs) - pass_cur) + gamma.
// An empty reference list drops the comparison term (with a caller-side warning).
double raw_weight(double pass_current, const std::vector<double>& pass_refs,
                  const WeightParams& params);

// rho * prev + (1 - rho) * raw; first epoch (no prev) returns raw.
double smooth(std::optional<double> prev, double raw, double rho);

// Clip every weight up to gamma, then scale so the values sum to |T| (mean 1).
std::map<std::string, double> clip_and_normalize(const std::map<std::string, double>& smoothed,
                                                 double gamma);

// k seeded responses (with correctness bits) for one record from one model.
using Evaluator = std::function<std::vector<ResponseJudgment>(const Record&, int k,
                                                              std::uint64_t seed)>;

struct NamedEvaluator {
  std::string model_id;
  Evaluator eval;
};

struct WeightEstimate {
  WeightTable table;
  std::vector<std::string> warnings;
  std::vector<std::string> shortfall_labels;  // fewer than n members available
};

// Algorithm: per label, stratified-sample n instances, collect pass@k for the
// current model and each reference on the identical sample, then
// raw -> smooth -> clip -> normalize. Deterministic for a fixed seed and
// deterministic evaluators.
WeightEstimate estimate_weights(const Corpus& corpus, const LabelCatalog& catalog,
                                const NamedEvaluator& current,
                                const std::vector<NamedEvaluator>& references,
                                const WeightParams& params,
                                const std::optional<WeightTable>& prev_table, std::uint64_t seed);

// (1/N) sum w~_label * nll over samples of (label key, nonnegative NLL).
double weighted_sft_loss(const std::vector<std::pair<std::string, double>>& samples,
                         const WeightTable& table);

}  // namespace finforge
