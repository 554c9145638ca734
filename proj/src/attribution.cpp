#include "finforge/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "json.hpp"

namespace finforge {

using nlohmann::json;

void AttributionParams::check() const {
  if (p_target < 0 || p_target > 1) throw ConfigError("p_target must be in [0,1]");
  for (const auto& [label, t] : p_target_per_label) {
    if (t < 0 || t > 1) throw ConfigError("p_target for '" + label + "' out of [0,1]");
  }
  if (lambda < 0) throw ConfigError("lambda must be >= 0");
  if (b0 <= 0) throw ConfigError("b0 must be positive");
  if (beta_budget <= 0 || beta_budget > 1) throw ConfigError("beta_budget must be in (0,1]");
  if (b_max <= 0) throw ConfigError("b_max must be positive");
  if (eps <= 0 || eps_eff <= 0) throw ConfigError("eps and eps_eff must be positive");
  if (max_iters < 0) throw ConfigError("max_iters must be >= 0");
  if (regression_patience < 1) throw ConfigError("regression_patience must be >= 1");
}

double AttributionParams::target_for(const std::string& label_key) const {
  auto it = p_target_per_label.find(label_key);
  return it != p_target_per_label.end() ? it->second : p_target;
}

double target_from_sota(double sota, double increment_points) {
  return std::min(1.0, sota + increment_points / 100.0);
}

PassAt1Result pass_at_1(const std::vector<Prediction>& predictions) {
  std::map<std::string, std::pair<std::size_t, std::size_t>> tally;  // label -> (correct, total)
  for (const auto& pred : predictions) {
    auto& [correct, total] = tally[pred.label];
    ++total;
    if (pred.predicted == pred.gold) ++correct;
  }
  PassAt1Result result;
  for (const auto& [label, ct] : tally) {
    if (ct.second == 0) {
      result.skipped_labels.push_back(label);
      continue;
    }
    result.per_label[label] = static_cast<double>(ct.first) / static_cast<double>(ct.second);
  }
  return result;
}

PriorityTerms priority(double p_t, double d_t, double target, double delta_p_k, double delta_d_k,
                       const AttributionParams& params) {
  if (delta_d_k < 0) throw ConfigError("delta_d must be >= 0");
  PriorityTerms terms;
  terms.gap = std::max(0.0, target - p_t);
  terms.efficiency = std::max(0.0, delta_p_k) / (delta_d_k + params.eps);
  terms.priority = terms.gap * terms.efficiency * std::exp(-params.lambda * d_t);
  return terms;
}

double iteration_budget(double b0, double beta_budget, int k) {
  if (k < 1) throw ConfigError("iteration index k must be >= 1");
  return b0 * std::pow(beta_budget, k - 1);
}

Allocation allocate(const std::map<std::string, double>& priorities, double b_k) {
  if (b_k < 0) throw ConfigError("budget must be >= 0");
  double total = 0.0;
  for (const auto& [label, pi] : priorities) {
    if (pi < 0) throw ConfigError("negative priority for '" + label + "'");
    total += pi;
  }
  Allocation alloc;
  if (total <= 0.0) {
    alloc.stalled = true;
    for (const auto& [label, _] : priorities) alloc.per_label[label] = 0.0;
    return alloc;
  }
  for (const auto& [label, pi] : priorities) alloc.per_label[label] = pi / total * b_k;
  return alloc;
}

std::map<std::string, long long> apportion_items(const std::map<std::string, double>& alloc) {
  double sum = 0.0;
  for (const auto& [_, a] : alloc) sum += a;
  long long total_items = std::llround(sum);
  std::map<std::string, long long> items;
  std::vector<std::pair<double, std::string>> fractions;
  long long assigned = 0;
  for (const auto& [label, a] : alloc) {
    long long base = static_cast<long long>(std::floor(a));
    items[label] = base;
    assigned += base;
    fractions.emplace_back(a - static_cast<double>(base), label);
  }
  // label key is the tiebreak so apportionment is order-independent
  std::sort(fractions.begin(), fractions.end(), [](const auto& x, const auto& y) {
    if (x.first != y.first) return x.first > y.first;
    return x.second < y.second;
  });
  for (std::size_t i = 0; i < fractions.size() && assigned < total_items; ++i, ++assigned) {
    ++items[fractions[i].second];
  }
  return items;
}

Synthesizer exact_synthesizer() {
  return [](const std::string&, double requested) { return requested; };
}

RevertOutcome maybe_revert(TaskState& state, const AttributionParams& params,
                           const TrainerEvaluator& trainer, int k) {
  RevertOutcome outcome;
  if (state.history.size() < 2) return outcome;
  const auto& cur = state.history.back();
  const auto& prev = state.history[state.history.size() - 2];
  if (cur.p >= prev.p) {
    state.consecutive_drops = 0;
    return outcome;
  }
  auto snap = state.snapshots.find(k);
  if (snap == state.snapshots.end()) return outcome;  // no snapshot: warn upstream
  state.d = snap->second;
  if (trainer.revert) trainer.revert(state.label, state.d);
  state.history.back().reverted = true;
  ++state.consecutive_drops;
  outcome.reverted = true;
  if (state.consecutive_drops >= params.regression_patience) {
    state.regenerate_signaled = true;
    outcome.regenerate = true;
  }
  return outcome;
}

StepResult step(std::vector<TaskState>& states, const AttributionParams& params,
                const TrainerEvaluator& trainer, const Synthesizer& synthesizer, int k) {
  if (k < 1) throw ConfigError("iteration index k must be >= 1");
  params.check();

  // Priorities come from the previous iteration's (delta_p, delta_d); the
  // first iteration bootstraps efficiency so allocation is gap-driven.
  std::map<std::string, double> priorities;
  std::map<std::string, PriorityTerms> terms;
  for (const auto& s : states) {
    double delta_p, delta_d;
    if (s.history.size() >= 2) {
      const auto& last = s.history.back();
      const auto& before = s.history[s.history.size() - 2];
      delta_p = last.p - before.p;
      delta_d = last.delta_d;
    } else if (s.history.size() == 1) {
      delta_p = params.e_init;  // placeholder; overridden below
      delta_d = 0.0;
    } else {
      delta_p = 0.0;
      delta_d = 0.0;
    }
    PriorityTerms t;
    if (s.history.size() >= 2) {
      t = priority(s.p, s.d, params.target_for(s.label), delta_p, delta_d, params);
    } else {
      t.gap = std::max(0.0, params.target_for(s.label) - s.p);
      t.efficiency = params.e_init;
      t.priority = t.gap * t.efficiency * std::exp(-params.lambda * s.d);
    }
    terms[s.label] = t;
    priorities[s.label] = t.priority;
  }

  const double b_k = iteration_budget(params.b0, params.beta_budget, k);
  Allocation alloc = allocate(priorities, b_k);

  StepResult result;
  result.report.iteration = k;
  result.report.budget = b_k;
  result.report.stalled = alloc.stalled;

  for (auto& s : states) {
    s.snapshots[k] = s.d;  // data version before this iteration
    double requested = alloc.per_label.at(s.label);
    double produced = requested;
    if (requested > 0.0) {
      produced = synthesizer(s.label, requested);
      if (produced < requested) {
        result.deficits.push_back(s.label + ": requested " + std::to_string(requested) +
                                  ", produced " + std::to_string(produced));
      }
      if (produced > 0.0 && trainer.train) trainer.train(s.label, produced);
    }
    s.d += produced;
    double p_new = trainer.measure(s.label, k);
    if (p_new < 0 || p_new > 1) throw ConfigError("measured pass@1 out of [0,1]");
    s.p = p_new;
    s.history.push_back({k, p_new, produced, false});
  }

  for (auto& s : states) {
    RevertOutcome rev = maybe_revert(s, params, trainer, k);
    const auto& t = terms.at(s.label);
    IterationRow row;
    row.label = s.label;
    row.p = s.p;
    row.gap = t.gap;
    row.efficiency = t.efficiency;
    row.priority = t.priority;
    row.delta_d = s.history.back().delta_d;
    row.d = s.d;
    row.reverted = rev.reverted;
    row.regenerate = rev.regenerate;
    result.report.rows.push_back(std::move(row));
  }
  return result;
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::all_targets_met: return "all-targets-met";
    case StopReason::budget_exhausted: return "budget-exhausted";
    case StopReason::efficiency_floor: return "efficiency-floor";
    case StopReason::max_iters: return "max-iters";
  }
  return "max-iters";
}

namespace {

bool all_targets_met(const std::vector<TaskState>& states, const AttributionParams& params) {
  for (const auto& s : states) {
    if (s.p < params.target_for(s.label)) return false;
  }
  return true;
}

double total_allocation(const std::vector<TaskState>& states) {
  double total = 0.0;
  for (const auto& s : states) total += s.d;
  return total;
}

// Max per-task improvement recorded at iteration k, from histories. Lets a
// resumed loop rebuild the saturation streak without extra checkpoint state.
std::optional<double> max_improvement_at(const std::vector<TaskState>& states, int k) {
  std::optional<double> best;
  for (const auto& s : states) {
    double prev_p = 0.0, cur_p = 0.0;
    bool have_cur = false, have_prev = false;
    for (const auto& h : s.history) {
      if (h.iteration == k) {
        cur_p = h.p;
        have_cur = true;
      } else if (h.iteration == k - 1) {
        prev_p = h.p;
        have_prev = true;
      }
    }
    if (!have_cur || !have_prev) continue;
    double dp = cur_p - prev_p;
    if (!best || dp > *best) best = dp;
  }
  return best;
}

}  // namespace

LoopResult run_loop(std::vector<TaskState> states, const AttributionParams& params,
                    const TrainerEvaluator& trainer, const Synthesizer& synthesizer,
                    int start_iteration, const IterationCallback& on_iteration) {
  params.check();
  LoopResult result;
  result.iterations_run = start_iteration - 1;

  if (all_targets_met(states, params)) {
    result.stop_reason = StopReason::all_targets_met;
    result.final_states = std::move(states);
    return result;
  }

  int saturation_streak = 0;
  for (int j = 2; j < start_iteration; ++j) {
    auto dp = max_improvement_at(states, j);
    if (dp && *dp < params.eps_eff)
      ++saturation_streak;
    else
      saturation_streak = 0;
  }

  result.stop_reason = StopReason::max_iters;
  for (int k = start_iteration; k <= params.max_iters; ++k) {
    StepResult sr = step(states, params, trainer, synthesizer, k);
    for (const auto& d : sr.deficits) result.warnings.push_back("iteration " +
                                                                std::to_string(k) + ": " + d);
    result.reports.push_back(sr.report);
    result.iterations_run = k;
    if (on_iteration) on_iteration(states, k, sr.report);

    if (all_targets_met(states, params)) {
      result.stop_reason = StopReason::all_targets_met;
      break;
    }
    if (total_allocation(states) > params.b_max) {
      result.stop_reason = StopReason::budget_exhausted;
      break;
    }
    auto dp = k >= 2 ? max_improvement_at(states, k) : std::nullopt;
    bool saturated = (dp && *dp < params.eps_eff) || sr.report.stalled;
    saturation_streak = saturated ? saturation_streak + 1 : 0;
    if (saturation_streak >= 2) {
      result.stop_reason = StopReason::efficiency_floor;
      break;
    }
  }
  result.final_states = std::move(states);
  return result;
}

std::string serialize_checkpoint(const std::vector<TaskState>& states, int iteration,
                                 std::uint64_t seed) {
  json j;
  j["iteration"] = iteration;
  j["seed"] = seed;
  json tasks = json::array();
  for (const auto& s : states) {
    json t;
    t["label"] = s.label;
    t["p"] = s.p;
    t["d"] = s.d;
    t["consecutive_drops"] = s.consecutive_drops;
    t["regenerate_signaled"] = s.regenerate_signaled;
    json hist = json::array();
    for (const auto& h : s.history) {
      hist.push_back({{"iteration", h.iteration},
                      {"p", h.p},
                      {"delta_d", h.delta_d},
                      {"reverted", h.reverted}});
    }
    t["history"] = hist;
    json snaps = json::object();
    for (const auto& [it, d] : s.snapshots) snaps[std::to_string(it)] = d;
    t["snapshots"] = snaps;
    tasks.push_back(t);
  }
  j["tasks"] = tasks;
  return j.dump(2);
}

Checkpoint parse_checkpoint(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("corrupt checkpoint: ") + e.what());
  }
  Checkpoint cp;
  try {
    cp.iteration = j.at("iteration").get<int>();
    cp.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& t : j.at("tasks")) {
      TaskState s;
      s.label = t.at("label").get<std::string>();
      s.p = t.at("p").get<double>();
      s.d = t.at("d").get<double>();
      s.consecutive_drops = t.value("consecutive_drops", 0);
      s.regenerate_signaled = t.value("regenerate_signaled", false);
      for (const auto& h : t.at("history")) {
        s.history.push_back({h.at("iteration").get<int>(), h.at("p").get<double>(),
                             h.at("delta_d").get<double>(), h.value("reverted", false)});
      }
      for (const auto& [key, d] : t.at("snapshots").items()) {
        s.snapshots[std::stoi(key)] = d.get<double>();
      }
      cp.states.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("corrupt checkpoint: ") + e.what());
  }
  return cp;
}

std::string report_to_json(const IterationReport& report) {
  json j;
  j["iteration"] = report.iteration;
  j["budget"] = report.budget;
  j["stalled"] = report.stalled;
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"label", r.label},
                    {"p", r.p},
                    {"gap", r.gap},
                    {"efficiency", r.efficiency},
                    {"priority", r.priority},
                    {"delta_d", r.delta_d},
                    {"d", r.d},
                    {"reverted", r.reverted},
                    {"regenerate", r.regenerate}});
  }
  j["rows"] = rows;
  return j.dump(2);
}

std::string report_to_table(const IterationReport& report) {
  std::ostringstream out;
  out << "iteration " << report.iteration << "  budget " << report.budget
      << (report.stalled ? "  [stalled]" : "") << "\n";
  out << std::left << std::setw(28) << "label" << std::right << std::setw(8) << "p"
      << std::setw(8) << "gap" << std::setw(12) << "eff" << std::setw(12) << "pri"
      << std::setw(12) << "delta_d" << std::setw(12) << "d" << "  flags\n";
  for (const auto& r : report.rows) {
    out << std::left << std::setw(28) << r.label << std::right << std::fixed
        << std::setprecision(4) << std::setw(8) << r.p << std::setw(8) << r.gap
        << std::setw(12) << r.efficiency << std::setw(12) << r.priority << std::setw(12)
        << r.delta_d << std::setw(12) << r.d << "  "
        << (r.reverted ? "reverted " : "") << (r.regenerate ? "regenerate" : "") << "\n";
    out.unsetf(std::ios::fixed);
  }
  return out.str();
}

}  // namespace finforge
