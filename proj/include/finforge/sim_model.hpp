#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "finforge/corpus.hpp"
#include "finforge/weights.hpp"

namespace finforge {

// Per-label learning curve: p = logistic(s0 + eta * ln(1 + data seen)).
struct SimSkill {
  double s0 = 0.0;
  double eta = 0.0;
};

// Seeded stochastic stand-in for a model under training. Value-semantic:
// copy freely for what-if evaluation.
class SimModel {
 public:
  SimModel() = default;
  SimModel(std::string model_id, std::map<std::string, SimSkill> skills)
      : model_id_(std::move(model_id)), skills_(std::move(skills)) {}

  const std::string& model_id() const { return model_id_; }
  const std::map<std::string, SimSkill>& skills() const { return skills_; }
  const std::map<std::string, double>& data_seen() const { return d_seen_; }

  double success_probability(const std::string& label_key) const;

  // k responses, each correct independently with p(label). Draws depend on
  // (seed, record id, response index) only — not on the model — so two
  // models compared on the same instances share random numbers.
  std::vector<ResponseJudgment> respond(const Record& record, int k, std::uint64_t seed) const;

  void feed_data(const std::string& label_key, double amount);
  void set_data(const std::string& label_key, double amount);

  // Adapter for the weight-estimation evaluator interface.
  NamedEvaluator as_evaluator() const;

 private:
  std::string model_id_;
  std::map<std::string, SimSkill> skills_;
  std::map<std::string, double> d_seen_;
};

// Scenario file: JSON {"models": {"<model_id>": {"<label>": {"s0":..,"eta":..}, ...}, ...}}.
// The model id "current" names the model under training; the rest are references.
struct SimScenario {
  std::map<std::string, SimModel> models;

  SimModel& current();
  std::vector<SimModel*> references();
};

SimScenario load_sim_scenario(const std::string& path);
SimScenario parse_sim_scenario(const std::string& text);

struct TrainerEvaluator;

// Binds a sim model to the attribution loop's train/revert/measure cycle.
// Measurement is the closed-form success probability (noise-free), so loop
// runs are exactly reproducible and testable against the logistic curve.
TrainerEvaluator make_sim_trainer(SimModel& model);

}  // namespace finforge
