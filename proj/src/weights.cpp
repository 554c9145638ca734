#include "finforge/weights.hpp"

#include <algorithm>
#include <cmath>

#include "finforge/rng.hpp"
#include "json.hpp"

namespace finforge {

using nlohmann::json;

void WeightParams::check() const {
  if (alpha < 0 || beta < 0) throw ConfigError("alpha and beta must be nonnegative");
  if (gamma <= 0) throw ConfigError("gamma must be positive");
  if (alpha + beta <= 0) throw ConfigError("alpha + beta must be positive");
  if (rho < 0 || rho > 1) throw ConfigError("rho must be in [0,1]");
  if (n < 1 || k < 1) throw ConfigError("n and k must be >= 1");
}

double WeightTable::normalized_sum() const {
  double s = 0;
  for (const auto& [_, w] : per_label) s += w.normalized;
  return s;
}

std::string WeightTable::to_json(const WeightParams& params) const {
  json j;
  j["epoch"] = epoch;
  json labels = json::object();
  for (const auto& [key, w] : per_label) {
    json e;
    e["raw"] = w.raw;
    e["smoothed"] = w.smoothed;
    e["normalized"] = w.normalized;
    if (w.previous) e["previous"] = *w.previous;
    if (w.stale) e["stale"] = true;
    labels[key] = e;
  }
  j["labels"] = labels;
  // params hash lets external trainers detect configuration drift
  std::string psig = std::to_string(params.alpha) + "," + std::to_string(params.beta) + "," +
                     std::to_string(params.gamma) + "," + std::to_string(params.rho) + "," +
                     std::to_string(params.n) + "," + std::to_string(params.k);
  j["params_hash"] = fnv1a(psig);
  return j.dump(2);
}

WeightTable WeightTable::from_json(const std::string& text) {
  json j = json::parse(text);
  WeightTable t;
  t.epoch = j.value("epoch", 0);
  for (auto& [key, e] : j.at("labels").items()) {
    LabelWeights w;
    w.raw = e.value("raw", 0.0);
    w.smoothed = e.value("smoothed", 0.0);
    w.normalized = e.value("normalized", 0.0);
    if (e.contains("previous")) w.previous = e.at("previous").get<double>();
    w.stale = e.value("stale", false);
    t.per_label[key] = w;
  }
  return t;
}

namespace {

// C(n-c, k) / C(n, k) as a stable product of ratios.
double miss_probability(int n, int c, int k) {
  if (c == 0) return 1.0;
  if (n - c < k) return 0.0;
  double p = 1.0;
  for (int i = 0; i < k; ++i) {
    p *= static_cast<double>(n - c - i) / static_cast<double>(n - i);
  }
  return p;
}

}  // namespace

double pass_at_k(const std::vector<EvalOutcome>& outcomes, PassKMode mode, int k) {
  if (outcomes.empty()) throw ConfigError("pass_at_k requires at least one outcome");
  if (k < 1) throw ConfigError("k must be >= 1");
  double total = 0.0;
  for (const auto& o : outcomes) {
    if (o.responses.empty())
      throw ConfigError("instance '" + o.instance_id + "' has no responses");
    int correct = 0;
    for (const auto& r : o.responses) correct += r.correct ? 1 : 0;
    if (mode == PassKMode::any_of_k) {
      total += correct > 0 ? 1.0 : 0.0;
    } else {
      int n = static_cast<int>(o.responses.size());
      if (k > n)
        throw ConfigError("unbiased pass@k needs k <= generated responses (" +
                          std::to_string(n) + " available)");
      total += 1.0 - miss_probability(n, correct, k);
    }
  }
  return total / static_cast<double>(outcomes.size());
}

double raw_weight(double pass_current, const std::vector<double>& pass_refs,
                  const WeightParams& params) {
  for (double p : pass_refs) {
    if (p < 0 || p > 1) throw ConfigError("reference pass@k out of [0,1]");
  }
  if (pass_current < 0 || pass_current > 1) throw ConfigError("pass@k out of [0,1]");
  double ref_term = 0.0;
  if (!pass_refs.empty()) {
    double mean = 0.0;
    for (double p : pass_refs) mean += p;
    mean /= static_cast<double>(pass_refs.size());
    ref_term = std::max(0.0, mean - pass_current);
  }
  return params.alpha * (1.0 - pass_current) + params.beta * ref_term + params.gamma;
}

double smooth(std::optional<double> prev, double raw, double rho) {
  if (rho < 0 || rho > 1) throw ConfigError("rho must be in [0,1]");
  if (!prev) return raw;
  // algebraically rho*prev + (1-rho)*raw, but this form makes the fixed
  // point smooth(w, w) == w exact in floating point
  return raw + rho * (*prev - raw);
}

std::map<std::string, double> clip_and_normalize(const std::map<std::string, double>& smoothed,
                                                 double gamma) {
  if (smoothed.empty()) throw ConfigError("cannot normalize an empty weight map");
  if (gamma <= 0) throw ConfigError("gamma must be positive");
  std::map<std::string, double> clipped;
  double sum = 0.0;
  for (const auto& [key, w] : smoothed) {
    double c = std::max(w, gamma);
    clipped[key] = c;
    sum += c;
  }
  const double scale = static_cast<double>(smoothed.size()) / sum;
  for (auto& [_, w] : clipped) w *= scale;
  return clipped;
}

WeightEstimate estimate_weights(const Corpus& corpus, const LabelCatalog& catalog,
                                const NamedEvaluator& current,
                                const std::vector<NamedEvaluator>& references,
                                const WeightParams& params,
                                const std::optional<WeightTable>& prev_table,
                                std::uint64_t seed) {
  params.check();
  WeightEstimate est;
  if (references.empty()) {
    est.warnings.push_back("no reference models configured; reference term is 0");
  }

  auto hist = label_histogram(corpus);
  for (const auto& [key, count] : hist) {
    if (!catalog.validate_key(key))
      throw ConfigError("corpus label '" + key + "' not in catalog");
  }
  if (hist.empty()) throw ConfigError("corpus is empty");

  struct LabelOutcome {
    double raw;
    std::optional<double> prev;
    bool stale;
  };
  std::map<std::string, LabelOutcome> outcomes;

  for (const auto& [label_key, count] : hist) {
    std::optional<double> prev;
    if (prev_table) {
      auto it = prev_table->per_label.find(label_key);
      if (it != prev_table->per_label.end()) prev = it->second.smoothed;
    }
    if (count < static_cast<std::size_t>(params.n)) {
      est.shortfall_labels.push_back(label_key);
    }
    auto sample = stratified_sample(corpus, label_key, params.n, seed);
    const int gen = params.passk_mode == PassKMode::unbiased && params.n_total > params.k
                        ? params.n_total
                        : params.k;

    auto collect = [&](const NamedEvaluator& model) {
      std::vector<EvalOutcome> outs;
      for (const auto& rec : sample) {
        EvalOutcome o;
        o.label = label_key;
        o.instance_id = rec.id;
        o.model_id = model.model_id;
        o.responses = model.eval(rec, gen, seed);
        outs.push_back(std::move(o));
      }
      return pass_at_k(outs, params.passk_mode, params.k);
    };

    try {
      double pass_cur = collect(current);
      std::vector<double> pass_refs;
      for (const auto& ref : references) pass_refs.push_back(collect(ref));
      double raw = raw_weight(pass_cur, pass_refs, params);
      outcomes[label_key] = {raw, prev, false};
    } catch (const std::exception& e) {
      est.warnings.push_back("label '" + label_key + "' stale: " + e.what());
      // carry the previous weight forward; gamma floor if no history exists
      double carried = prev ? *prev : params.gamma;
      outcomes[label_key] = {carried, prev, true};
    }
  }

  std::map<std::string, double> smoothed;
  for (const auto& [key, o] : outcomes) {
    smoothed[key] = o.stale ? o.raw : smooth(o.prev, o.raw, params.rho);
  }
  auto normalized = clip_and_normalize(smoothed, params.gamma);

  WeightTable table;
  table.epoch = prev_table ? prev_table->epoch + 1 : 0;
  for (const auto& [key, o] : outcomes) {
    LabelWeights w;
    w.raw = o.raw;
    w.smoothed = std::max(smoothed[key], params.gamma);
    w.previous = o.prev;
    w.normalized = normalized[key];
    w.stale = o.stale;
    table.per_label[key] = w;
  }
  est.table = std::move(table);
  return est;
}

double weighted_sft_loss(const std::vector<std::pair<std::string, double>>& samples,
                         const WeightTable& table) {
  if (samples.empty()) throw ConfigError("weighted loss over an empty sample list");
  double total = 0.0;
  for (const auto& [label, nll] : samples) {
    if (nll < 0) throw ConfigError("negative NLL for label '" + label + "'");
    auto it = table.per_label.find(label);
    if (it == table.per_label.end())
      throw ConfigError("label '" + label + "' missing from weight table");
    total += it->second.normalized * nll;
  }
  return total / static_cast<double>(samples.size());
}

}  // namespace finforge
