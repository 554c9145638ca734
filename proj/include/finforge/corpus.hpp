#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "finforge/labels.hpp"

namespace finforge {

enum class Provenance { task_track, evolution_track, external };

std::string to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);

// One (query, thinking, answer) reasoning triplet plus pipeline flags.
struct Record {
  std::string id;
  std::string label;  // canonical "scene/attribute" key
  std::string query;
  std::string thinking;
  std::string answer;
  Provenance provenance = Provenance::external;
  std::optional<bool> verify_flag;
  std::optional<bool> clean_flag;
  std::optional<double> quality_score;

  bool operator==(const Record&) const = default;
};

struct Corpus {
  std::vector<Record> records;
  std::optional<std::string> source_path;

  std::size_t size() const { return records.size(); }
};

// JSON-lines record file, one record per line, optional fields omitted.
Corpus load_corpus(const std::string& path, const LabelCatalog& catalog);
Corpus parse_corpus(const std::string& text, const LabelCatalog& catalog,
                    const std::string& origin = "<string>");
std::string serialize_record(const Record& r);
Record parse_record(const std::string& line);
void save_corpus(const Corpus& corpus, const std::string& path);

// Seeded permutation stratified to one label, first n taken, no replacement.
// Returns min(n, count(label)) records; a shortfall is the caller's signal to
// report, not an error.
std::vector<Record> stratified_sample(const Corpus& corpus, const std::string& label_key,
                                      std::size_t n, std::uint64_t seed);

std::map<std::string, std::size_t> label_histogram(const Corpus& corpus);

}  // namespace finforge
