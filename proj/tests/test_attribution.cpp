#include <cmath>

#include "doctest.h"
#include "finforge/attribution.hpp"
#include "finforge/sim_model.hpp"

using namespace finforge;

namespace {

AttributionParams default_params() {
  AttributionParams p;
  p.p_target = 0.8;
  p.b0 = 100.0;
  p.beta_budget = 1.0;
  p.max_iters = 20;
  return p;
}

std::vector<TaskState> states_for(const SimModel& model) {
  std::vector<TaskState> states;
  for (const auto& [label, _] : model.skills()) {
    TaskState s;
    s.label = label;
    s.p = model.success_probability(label);
    states.push_back(std::move(s));
  }
  return states;
}

}  // namespace

TEST_CASE("pass@1 per-label exact-match accuracy") {
  std::vector<Prediction> preds = {{"a/x", "1", "1"}, {"a/x", "2", "3"}, {"a/x", "4", "4"},
                                   {"a/x", "5", "5"}, {"b/y", "ok", "ok"}};
  auto res = pass_at_1(preds);
  CHECK(res.per_label.at("a/x") == doctest::Approx(0.75));
  CHECK(res.per_label.at("b/y") == doctest::Approx(1.0));
  CHECK(res.per_label.size() == 2);
}

TEST_CASE("priority terms") {
  auto params = default_params();
  SUBCASE("at or above target: zero priority") {
    auto t = priority(0.85, 50.0, 0.8, 0.1, 10.0, params);
    CHECK(t.gap == 0.0);
    CHECK(t.priority == 0.0);
  }
  SUBCASE("direct substitution, lambda = 0") {
    params.lambda = 0.0;
    params.eps = 1e-8;
    auto t = priority(0.70, 0.0, 0.80, 0.05, 100.0, params);
    CHECK(t.gap == doctest::Approx(0.10));
    CHECK(t.efficiency == doctest::Approx(0.05 / (100.0 + 1e-8)));
    CHECK(t.priority == doctest::Approx(0.10 * 0.05 / (100.0 + 1e-8)).epsilon(1e-9));
  }
  SUBCASE("decay factor against a high-precision exp oracle") {
    // percentage-point convention: gap 10, e 0.2, lambda*d = 1
    params.lambda = 0.01;
    double pi = 10.0 * 0.2 * std::exp(-params.lambda * 100.0);
    CHECK(pi == doctest::Approx(0.7357588823428847).epsilon(1e-12));
  }
  SUBCASE("negative improvement clamps to zero efficiency") {
    auto t = priority(0.5, 0.0, 0.8, -0.2, 10.0, params);
    CHECK(t.efficiency == 0.0);
  }
  SUBCASE("monotone in gap for equal efficiency and data") {
    auto lo = priority(0.75, 10.0, 0.8, 0.1, 5.0, params);
    auto hi = priority(0.60, 10.0, 0.8, 0.1, 5.0, params);
    CHECK(hi.priority > lo.priority);
  }
}

TEST_CASE("iteration budget") {
  CHECK(iteration_budget(1000, 0.5, 1) == doctest::Approx(1000.0));
  CHECK(iteration_budget(1000, 0.5, 3) == doctest::Approx(250.0));
  for (int k = 1; k < 10; ++k) CHECK(iteration_budget(777, 1.0, k) == doctest::Approx(777.0));
  CHECK_THROWS_AS(iteration_budget(1000, 0.5, 0), ConfigError);
}

TEST_CASE("allocation is proportional and conserves the budget") {
  auto alloc = allocate({{"A", 2.0}, {"B", 3.0}}, 100.0);
  CHECK(alloc.per_label.at("A") == doctest::Approx(40.0));
  CHECK(alloc.per_label.at("B") == doctest::Approx(60.0));
  CHECK_FALSE(alloc.stalled);

  auto single = allocate({{"only", 0.7}}, 55.0);
  CHECK(single.per_label.at("only") == doctest::Approx(55.0));

  auto stalled = allocate({{"A", 0.0}, {"B", 0.0}}, 100.0);
  CHECK(stalled.stalled);
  CHECK(stalled.per_label.at("A") == 0.0);

  CHECK_THROWS_AS(allocate({{"A", -1.0}}, 10.0), ConfigError);
}

TEST_CASE("integer apportionment conserves whole items") {
  auto items = apportion_items({{"A", 33.4}, {"B", 33.3}, {"C", 33.3}});
  CHECK(items.at("A") + items.at("B") + items.at("C") == 100);
  CHECK(items.at("A") == 34);  // largest fraction gets the remainder
}

TEST_CASE("first iteration allocation follows gaps (efficiency bootstrap)") {
  SimModel model("current", {{"a/x", {std::log(0.5 / 0.5), 1.0}},     // p = 0.50
                             {"b/y", {std::log(0.7 / 0.3), 1.0}}});   // p = 0.70
  auto states = states_for(model);
  auto trainer = make_sim_trainer(model);
  auto params = default_params();
  auto sr = step(states, params, trainer, exact_synthesizer(), 1);
  double alloc_a = 0, alloc_b = 0;
  for (const auto& row : sr.report.rows) {
    if (row.label == "a/x") alloc_a = row.delta_d;
    if (row.label == "b/y") alloc_b = row.delta_d;
  }
  // gaps 0.30 vs 0.10 -> 75/25 split of the 100 budget
  CHECK(alloc_a == doctest::Approx(75.0));
  CHECK(alloc_b == doctest::Approx(25.0));
}

TEST_CASE("task already at target receives zero allocation") {
  SimModel model("current", {{"met/x", {3.0, 1.0}},     // p ~ 0.95
                             {"low/y", {-1.0, 1.0}}});  // p ~ 0.27
  auto states = states_for(model);
  auto trainer = make_sim_trainer(model);
  auto params = default_params();
  auto sr = step(states, params, trainer, exact_synthesizer(), 1);
  for (const auto& row : sr.report.rows) {
    if (row.label == "met/x") CHECK(row.delta_d == 0.0);
    if (row.label == "low/y") CHECK(row.delta_d == doctest::Approx(100.0));
  }
}

TEST_CASE("funded labels strictly improve under a learnable sim") {
  SimModel model("current", {{"a/x", {-0.5, 0.8}}, {"b/y", {0.0, 0.8}}});
  auto states = states_for(model);
  auto trainer = make_sim_trainer(model);
  auto params = default_params();
  std::map<std::string, double> prev_p;
  for (const auto& s : states) prev_p[s.label] = s.p;
  for (int k = 1; k <= 3; ++k) {
    auto sr = step(states, params, trainer, exact_synthesizer(), k);
    for (const auto& row : sr.report.rows) {
      if (row.delta_d > 0.0) CHECK(row.p > prev_p[row.label]);
      prev_p[row.label] = row.p;
    }
  }
}

TEST_CASE("synthesizer shortfall is allocated as produced and logged") {
  SimModel model("current", {{"a/x", {-0.5, 0.8}}});
  auto states = states_for(model);
  auto trainer = make_sim_trainer(model);
  auto params = default_params();
  Synthesizer half = [](const std::string&, double requested) { return requested / 2.0; };
  auto sr = step(states, params, trainer, half, 1);
  CHECK(sr.deficits.size() == 1);
  CHECK(states[0].d == doctest::Approx(50.0));
}

TEST_CASE("reversion restores the exact snapshot and signals regeneration") {
  // scripted trainer: label degrades from iteration 3 onward
  std::map<std::string, double> d_seen = {{"a/x", 0.0}};
  TrainerEvaluator trainer;
  trainer.train = [&](const std::string& label, double amount) { d_seen[label] += amount; };
  trainer.revert = [&](const std::string& label, double d) { d_seen[label] = d; };
  trainer.measure = [&](const std::string&, int k) {
    if (k < 3) return 0.5 + 0.1 * k;  // improving
    return 0.75 - 0.05 * k;           // degrading
  };

  std::vector<TaskState> states(1);
  states[0].label = "a/x";
  states[0].p = 0.5;
  auto params = default_params();
  params.regression_patience = 2;

  step(states, params, trainer, exact_synthesizer(), 1);  // p = 0.6
  step(states, params, trainer, exact_synthesizer(), 2);  // p = 0.7
  double d_before = states[0].d;
  CHECK(d_before == doctest::Approx(200.0));

  auto sr3 = step(states, params, trainer, exact_synthesizer(), 3);  // p = 0.6 < 0.7
  CHECK(sr3.report.rows[0].reverted);
  CHECK(states[0].d == doctest::Approx(d_before));  // snapshot restored exactly
  CHECK(d_seen["a/x"] == doctest::Approx(d_before));
  CHECK(states[0].consecutive_drops == 1);
  CHECK_FALSE(states[0].regenerate_signaled);

  auto sr4 = step(states, params, trainer, exact_synthesizer(), 4);  // p = 0.55 < 0.6
  CHECK(sr4.report.rows[0].reverted);
  CHECK(states[0].regenerate_signaled);  // two consecutive drops
  CHECK(sr4.report.rows[0].regenerate);
}

TEST_CASE("no reversion while p is nondecreasing") {
  SimModel model("current", {{"a/x", {-0.5, 0.8}}});
  auto states = states_for(model);
  auto trainer = make_sim_trainer(model);
  auto params = default_params();
  for (int k = 1; k <= 4; ++k) {
    auto sr = step(states, params, trainer, exact_synthesizer(), k);
    CHECK_FALSE(sr.report.rows[0].reverted);
  }
  CHECK(states[0].consecutive_drops == 0);
}

TEST_CASE("run_loop: all tasks already at target stops immediately") {
  SimModel model("current", {{"a/x", {3.0, 0.0}}});
  auto states = states_for(model);
  auto trainer = make_sim_trainer(model);
  auto result = run_loop(states, default_params(), trainer, exact_synthesizer());
  CHECK(result.iterations_run == 0);
  CHECK(result.stop_reason == StopReason::all_targets_met);
}

TEST_CASE("run_loop: hard-to-learn tasks exhaust a small b_max") {
  SimModel model("current", {{"a/x", {-1.0, 1e-6}}});
  auto states = states_for(model);
  auto trainer = make_sim_trainer(model);
  auto params = default_params();
  params.b0 = 500.0;
  params.b_max = 400.0;  // below the first iteration's demand
  auto result = run_loop(states, params, trainer, exact_synthesizer());
  CHECK(result.stop_reason == StopReason::budget_exhausted);
  CHECK(result.iterations_run == 1);
}

TEST_CASE("run_loop: learnable tasks reach all-targets-met") {
  SimModel model("current", {{"a/x", {-0.5, 1.0}}, {"b/y", {0.2, 1.0}}});
  auto states = states_for(model);
  auto trainer = make_sim_trainer(model);
  auto params = default_params();
  params.b0 = 200.0;
  auto result = run_loop(states, params, trainer, exact_synthesizer());
  CHECK(result.stop_reason == StopReason::all_targets_met);
  for (const auto& s : result.final_states) CHECK(s.p >= 0.8);
}

TEST_CASE("run_loop: saturation fires the efficiency floor") {
  SimModel model("current", {{"a/x", {-0.5, 0.0}}});  // eta 0: no improvement ever
  auto states = states_for(model);
  auto trainer = make_sim_trainer(model);
  auto params = default_params();
  params.max_iters = 15;
  auto result = run_loop(states, params, trainer, exact_synthesizer());
  CHECK(result.stop_reason == StopReason::efficiency_floor);
  CHECK(result.iterations_run < 15);
}

TEST_CASE("run_loop: max_iters is a hard bound") {
  SimModel model("current", {{"a/x", {-2.0, 0.05}}});
  auto states = states_for(model);
  auto trainer = make_sim_trainer(model);
  auto params = default_params();
  params.max_iters = 3;
  auto result = run_loop(states, params, trainer, exact_synthesizer());
  CHECK(result.iterations_run <= 3);
}

TEST_CASE("budget sequence is nonincreasing and geometric-bounded") {
  double b0 = 1000.0, beta = 0.6, total = 0.0, prev = 1e18;
  for (int k = 1; k <= 50; ++k) {
    double b = iteration_budget(b0, beta, k);
    CHECK(b <= prev);
    prev = b;
    total += b;
  }
  CHECK(total <= b0 / (1.0 - beta) + 1e-9);
}

TEST_CASE("checkpoint serialization round-trip") {
  std::vector<TaskState> states(2);
  states[0].label = "a/x";
  states[0].p = 0.6;
  states[0].d = 120.0;
  states[0].history = {{1, 0.55, 60.0, false}, {2, 0.6, 60.0, true}};
  states[0].snapshots = {{1, 0.0}, {2, 60.0}};
  states[0].consecutive_drops = 1;
  states[1].label = "b/y";
  states[1].p = 0.9;

  auto text = serialize_checkpoint(states, 2, 42);
  auto cp = parse_checkpoint(text);
  CHECK(cp.iteration == 2);
  CHECK(cp.seed == 42);
  REQUIRE(cp.states.size() == 2);
  CHECK(cp.states[0].d == doctest::Approx(120.0));
  CHECK(cp.states[0].history.size() == 2);
  CHECK(cp.states[0].history[1].reverted);
  CHECK(cp.states[0].snapshots.at(2) == doctest::Approx(60.0));
  CHECK(serialize_checkpoint(cp.states, cp.iteration, cp.seed) == text);

  CHECK_THROWS_AS(parse_checkpoint("{not json"), ParseError);
  CHECK_THROWS_AS(parse_checkpoint("{\"iteration\": 1}"), ParseError);
}

TEST_CASE("target_from_sota converts percentage points") {
  CHECK(target_from_sota(0.72, 5.0) == doctest::Approx(0.77));
  CHECK(target_from_sota(0.98, 10.0) == doctest::Approx(1.0));
}
