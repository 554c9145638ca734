#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "finforge/corpus.hpp"

namespace finforge {

struct DedupConfig {
  int shingle_size = 5;        // characters
  int num_hashes = 128;
  double jaccard_threshold = 0.9;
  std::uint64_t seed = 1;
  bool exact_oracle = false;   // all-pairs exact Jaccard instead of the sketch
  int band_rows = 4;           // LSH banding rows per band (sketch mode)

  void check() const;
};

// Character shingle set of a record's concatenated text fields.
std::unordered_set<std::uint64_t> char_shingles(const std::string& text, int shingle_size);
std::string record_dedup_text(const Record& r);
double exact_jaccard(const std::unordered_set<std::uint64_t>& a,
                     const std::unordered_set<std::uint64_t>& b);

struct DedupResult {
  Corpus corpus;
  std::vector<std::string> removed_ids;
};

// Earliest record (corpus order) survives; later records whose exact
// shingle-Jaccard against a surviving record reaches the threshold are
// dropped. Sketch mode uses minhash LSH bands only to propose candidate
// pairs; each candidate is confirmed with the exact Jaccard, so false
// positives are impossible and false negatives are bounded by the banding
// miss probability (1 - s^r)^b, negligible at the default 32 bands x 4 rows
// for s >= 0.9.
DedupResult dedup(const Corpus& corpus, const DedupConfig& cfg);

struct DetoxResult {
  Corpus corpus;
  std::vector<std::string> removed_ids;
};

// Case-insensitive regex denylist over every text field; survivors get
// clean_flag = true.
DetoxResult detox(const Corpus& corpus, const std::vector<std::string>& denylist);

struct ContaminationIndex {
  int ngram_size = 13;  // words
  std::unordered_set<std::uint64_t> ngrams;

  void add_text(const std::string& text);
  bool contains_ngram_of(const std::string& text) const;
};

ContaminationIndex build_contamination_index(const std::vector<std::string>& eval_texts,
                                             int ngram_size = 13);

struct DecontaminateResult {
  Corpus corpus;
  std::vector<std::string> removed_ids;
};

// Removes records whose query or answer shares any word n-gram with the index.
DecontaminateResult decontaminate(const Corpus& corpus, const ContaminationIndex& index);

// D_final: verify && clean && score strictly above tau. A per-label tau
// override takes precedence over the global one.
Corpus final_filter(const Corpus& corpus, double tau,
                    const std::map<std::string, double>& tau_per_label = {});

struct GovernanceReport {
  std::size_t input_count = 0;
  std::size_t dedup_removed = 0;
  std::size_t detox_removed = 0;
  std::size_t decontam_removed = 0;
  std::size_t below_threshold_removed = 0;
  std::size_t output_count = 0;

  bool reconciles() const {
    return input_count == output_count + dedup_removed + detox_removed + decontam_removed +
                              below_threshold_removed;
  }
  std::string to_json() const;
};

struct GovernanceOutcome {
  Corpus corpus;
  GovernanceReport report;
};

// Fixed order: dedup -> detox -> decontaminate -> final_filter.
GovernanceOutcome run_governance(const Corpus& corpus, const DedupConfig& dedup_cfg,
                                 const std::vector<std::string>& denylist,
                                 const ContaminationIndex& index, double tau,
                                 const std::map<std::string, double>& tau_per_label = {});

}  // namespace finforge
