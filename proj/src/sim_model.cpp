#include "finforge/sim_model.hpp"

#include "finforge/attribution.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "finforge/rng.hpp"
#include "json.hpp"

namespace finforge {

using nlohmann::json;

double SimModel::success_probability(const std::string& label_key) const {
  auto it = skills_.find(label_key);
  if (it == skills_.end())
    throw ConfigError("sim model '" + model_id_ + "' has no skill for label '" + label_key + "'");
  double d = 0.0;
  auto dit = d_seen_.find(label_key);
  if (dit != d_seen_.end()) d = dit->second;
  double logit = it->second.s0 + it->second.eta * std::log1p(d);
  return 1.0 / (1.0 + std::exp(-logit));
}

std::vector<ResponseJudgment> SimModel::respond(const Record& record, int k,
                                                std::uint64_t seed) const {
  if (k < 1) throw ConfigError("k must be >= 1");
  const double p = success_probability(record.label);
  std::vector<ResponseJudgment> out;
  out.reserve(k);
  const std::uint64_t base = hash_combine(seed, fnv1a(record.id));
  for (int i = 0; i < k; ++i) {
    // common random numbers across models: no model id in the draw
    SplitMix64 rng(hash_combine(base, static_cast<std::uint64_t>(i)));
    bool correct = rng.next_double() < p;
    ResponseJudgment r;
    r.correct = correct;
    r.text = correct ? record.answer : "incorrect-" + std::to_string(i);
    out.push_back(std::move(r));
  }
  return out;
}

void SimModel::feed_data(const std::string& label_key, double amount) {
  if (amount < 0) throw ConfigError("feed_data amount must be >= 0");
  if (!skills_.count(label_key))
    throw ConfigError("sim model '" + model_id_ + "' has no skill for label '" + label_key + "'");
  d_seen_[label_key] += amount;
}

void SimModel::set_data(const std::string& label_key, double amount) {
  d_seen_[label_key] = amount;
}

NamedEvaluator SimModel::as_evaluator() const {
  SimModel copy = *this;
  return NamedEvaluator{model_id_, [copy](const Record& r, int k, std::uint64_t seed) {
                          return copy.respond(r, k, seed);
                        }};
}

SimModel& SimScenario::current() {
  auto it = models.find("current");
  if (it == models.end()) throw ConfigError("sim scenario has no 'current' model");
  return it->second;
}

std::vector<SimModel*> SimScenario::references() {
  std::vector<SimModel*> refs;
  for (auto& [id, m] : models) {
    if (id != "current") refs.push_back(&m);
  }
  return refs;
}

SimScenario parse_sim_scenario(const std::string& text) {
  json j = json::parse(text);
  SimScenario scenario;
  for (auto& [model_id, skills_json] : j.at("models").items()) {
    std::map<std::string, SimSkill> skills;
    for (auto& [label, sj] : skills_json.items()) {
      SimSkill s;
      s.s0 = sj.at("s0").get<double>();
      s.eta = sj.at("eta").get<double>();
      if (s.eta < 0) throw ConfigError("eta must be >= 0 for label '" + label + "'");
      skills[label] = s;
    }
    scenario.models.emplace(model_id, SimModel(model_id, std::move(skills)));
  }
  if (scenario.models.empty()) throw ConfigError("sim scenario declares no models");
  return scenario;
}

TrainerEvaluator make_sim_trainer(SimModel& model) {
  TrainerEvaluator t;
  t.train = [&model](const std::string& label, double amount) { model.feed_data(label, amount); };
  t.revert = [&model](const std::string& label, double d) { model.set_data(label, d); };
  t.measure = [&model](const std::string& label, int) {
    return model.success_probability(label);
  };
  return t;
}

SimScenario load_sim_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open sim scenario '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_sim_scenario(buf.str());
  } catch (const json::exception& e) {
    throw ParseError("sim scenario '" + path + "': " + e.what());
  }
}

}  // namespace finforge
