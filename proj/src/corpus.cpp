#include "finforge/corpus.hpp"

#include <fstream>
#include <sstream>
#include <unordered_map>

#include "finforge/rng.hpp"
#include "json.hpp"

namespace finforge {

using nlohmann::json;

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::task_track: return "task-track";
    case Provenance::evolution_track: return "evolution-track";
    case Provenance::external: return "external";
  }
  return "external";
}

Provenance provenance_from_string(const std::string& s) {
  if (s == "task-track") return Provenance::task_track;
  if (s == "evolution-track") return Provenance::evolution_track;
  if (s == "external") return Provenance::external;
  throw ParseError("unknown provenance '" + s + "'");
}

std::string serialize_record(const Record& r) {
  json j;
  j["id"] = r.id;
  j["label"] = r.label;
  j["query"] = r.query;
  j["thinking"] = r.thinking;
  j["answer"] = r.answer;
  j["provenance"] = to_string(r.provenance);
  if (r.verify_flag) j["verify_flag"] = *r.verify_flag;
  if (r.clean_flag) j["clean_flag"] = *r.clean_flag;
  if (r.quality_score) j["quality_score"] = *r.quality_score;
  return j.dump();
}

Record parse_record(const std::string& line) {
  json j = json::parse(line);
  Record r;
  for (const char* field : {"id", "label", "query", "answer"}) {
    if (!j.contains(field)) throw ParseError(std::string("missing field '") + field + "'");
  }
  r.id = j.at("id").get<std::string>();
  r.label = j.at("label").get<std::string>();
  r.query = j.at("query").get<std::string>();
  r.thinking = j.value("thinking", std::string{});
  r.answer = j.at("answer").get<std::string>();
  r.provenance = provenance_from_string(j.value("provenance", std::string{"external"}));
  if (j.contains("verify_flag")) r.verify_flag = j.at("verify_flag").get<bool>();
  if (j.contains("clean_flag")) r.clean_flag = j.at("clean_flag").get<bool>();
  if (j.contains("quality_score")) {
    double q = j.at("quality_score").get<double>();
    if (q < 0.0 || q > 1.0) throw ParseError("quality_score out of [0,1]");
    r.quality_score = q;
  }
  if (r.id.empty()) throw ParseError("empty id");
  if (r.query.empty()) throw ParseError("empty query");
  if (r.answer.empty()) throw ParseError("empty answer");
  return r;
}

Corpus parse_corpus(const std::string& text, const LabelCatalog& catalog,
                    const std::string& origin) {
  Corpus corpus;
  std::unordered_map<std::string, int> seen_ids;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    Record r;
    try {
      r = parse_record(line);
    } catch (const json::exception& e) {
      throw ParseError(origin + ":" + std::to_string(lineno) + ": malformed record: " + e.what());
    } catch (const std::runtime_error& e) {
      throw ParseError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (!catalog.validate_key(r.label)) {
      throw ParseError(origin + ":" + std::to_string(lineno) + ": record '" + r.id +
                       "' has label '" + r.label + "' not in catalog");
    }
    auto [it, inserted] = seen_ids.emplace(r.id, lineno);
    if (!inserted) {
      throw ParseError(origin + ": duplicate id '" + r.id + "' on lines " +
                       std::to_string(it->second) + " and " + std::to_string(lineno));
    }
    corpus.records.push_back(std::move(r));
  }
  return corpus;
}

Corpus load_corpus(const std::string& path, const LabelCatalog& catalog) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open corpus file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  Corpus c = parse_corpus(buf.str(), catalog, path);
  c.source_path = path;
  return c;
}

void save_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write corpus file '" + path + "'");
  for (const auto& r : corpus.records) out << serialize_record(r) << "\n";
}

std::vector<Record> stratified_sample(const Corpus& corpus, const std::string& label_key,
                                      std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ConfigError("sample size must be >= 1");
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < corpus.records.size(); ++i) {
    if (corpus.records[i].label == label_key) members.push_back(i);
  }
  if (members.empty()) throw ConfigError("label '" + label_key + "' absent from corpus");
  // Permutation keyed by (seed, label) so per-label draws are independent.
  auto perm = seeded_permutation(members.size(), hash_combine(seed, fnv1a(label_key)));
  std::size_t take = std::min(n, members.size());
  std::vector<Record> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back(corpus.records[members[perm[i]]]);
  return out;
}

std::map<std::string, std::size_t> label_histogram(const Corpus& corpus) {
  std::map<std::string, std::size_t> hist;
  for (const auto& r : corpus.records) ++hist[r.label];
  return hist;
}

}  // namespace finforge
