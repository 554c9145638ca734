#include "finforge/governance.hpp"

#include <algorithm>
#include <limits>
#include <regex>
#include <sstream>
#include <unordered_map>

#include "finforge/rng.hpp"
#include "finforge/similarity.hpp"
#include "json.hpp"

namespace finforge {

void DedupConfig::check() const {
  if (shingle_size < 2) throw ConfigError("shingle_size must be >= 2");
  if (num_hashes < 16) throw ConfigError("num_hashes must be >= 16");
  if (jaccard_threshold <= 0.0 || jaccard_threshold > 1.0)
    throw ConfigError("jaccard_threshold must be in (0,1]");
  if (band_rows < 1 || num_hashes % band_rows != 0)
    throw ConfigError("band_rows must divide num_hashes");
}

std::unordered_set<std::uint64_t> char_shingles(const std::string& text, int shingle_size) {
  std::unordered_set<std::uint64_t> shingles;
  const std::size_t n = static_cast<std::size_t>(shingle_size);
  if (text.size() < n) {
    if (!text.empty()) shingles.insert(fnv1a(text));
    return shingles;
  }
  for (std::size_t i = 0; i + n <= text.size(); ++i) {
    shingles.insert(fnv1a(std::string_view(text).substr(i, n)));
  }
  return shingles;
}

std::string record_dedup_text(const Record& r) {
  return r.query + "\x1e" + r.thinking + "\x1e" + r.answer;
}

double exact_jaccard(const std::unordered_set<std::uint64_t>& a,
                     const std::unordered_set<std::uint64_t>& b) {
  if (a.empty() && b.empty()) return 1.0;
  if (a.empty() || b.empty()) return 0.0;
  std::size_t inter = 0;
  const auto& small = a.size() <= b.size() ? a : b;
  const auto& big = a.size() <= b.size() ? b : a;
  for (auto h : small) inter += big.count(h);
  return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

namespace {

// Merge-based "Jaccard >= threshold?" over sorted shingle vectors. Bails out
// as soon as the remaining elements cannot reach the required intersection,
// which makes clearly-distinct pairs cheap in the all-pairs oracle mode.
bool jaccard_at_least(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b,
                      double threshold) {
  if (a.empty() && b.empty()) return true;
  if (a.empty() || b.empty()) return false;
  const double need =
      threshold * static_cast<double>(a.size() + b.size()) / (1.0 + threshold);
  std::size_t i = 0, j = 0, inter = 0;
  while (i < a.size() && j < b.size()) {
    std::size_t possible = inter + std::min(a.size() - i, b.size() - j);
    if (static_cast<double>(possible) < need) return false;
    if (a[i] == b[j]) {
      ++inter;
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return static_cast<double>(inter) /
             static_cast<double>(a.size() + b.size() - inter) >=
         threshold;
}

// Minhash signature: per hash slot, min over shingles of a seeded remix.
std::vector<std::uint64_t> minhash_signature(const std::vector<std::uint64_t>& shingles,
                                             int num_hashes, std::uint64_t seed) {
  std::vector<std::uint64_t> salts(num_hashes);
  SplitMix64 rng(seed);
  for (auto& s : salts) s = rng.next();
  std::vector<std::uint64_t> sig(num_hashes, std::numeric_limits<std::uint64_t>::max());
  for (auto sh : shingles) {
    for (int i = 0; i < num_hashes; ++i) {
      std::uint64_t h = hash_combine(sh, salts[i]);
      if (h < sig[i]) sig[i] = h;
    }
  }
  return sig;
}

std::uint64_t band_key(const std::vector<std::uint64_t>& sig, int band, int rows) {
  std::uint64_t h = 0xCBF29CE484222325ULL ^ static_cast<std::uint64_t>(band);
  for (int r = 0; r < rows; ++r) h = hash_combine(h, sig[band * rows + r]);
  return h;
}

}  // namespace

DedupResult dedup(const Corpus& corpus, const DedupConfig& cfg) {
  cfg.check();
  const std::size_t n = corpus.size();
  std::vector<std::vector<std::uint64_t>> shingles(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto set = char_shingles(record_dedup_text(corpus.records[i]), cfg.shingle_size);
    shingles[i].assign(set.begin(), set.end());
    std::sort(shingles[i].begin(), shingles[i].end());
  }

  DedupResult result;
  std::vector<bool> removed(n, false);

  if (cfg.exact_oracle) {
    std::vector<std::size_t> survivors;
    for (std::size_t i = 0; i < n; ++i) {
      bool dup = false;
      for (std::size_t s : survivors) {
        if (jaccard_at_least(shingles[i], shingles[s], cfg.jaccard_threshold)) {
          dup = true;
          break;
        }
      }
      if (dup)
        removed[i] = true;
      else
        survivors.push_back(i);
    }
  } else {
    // Signatures are data-parallel; the survivor pass below is sequential
    // to keep earliest-survivor semantics deterministic.
    const int bands = cfg.num_hashes / cfg.band_rows;
    std::vector<std::vector<std::uint64_t>> sigs(n);
    for (std::size_t i = 0; i < n; ++i) {
      sigs[i] = minhash_signature(shingles[i], cfg.num_hashes, cfg.seed);
    }
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::uint64_t> keys(bands);
      for (int b = 0; b < bands; ++b) keys[b] = band_key(sigs[i], b, cfg.band_rows);
      bool dup = false;
      for (int b = 0; b < bands && !dup; ++b) {
        auto it = buckets.find(keys[b]);
        if (it == buckets.end()) continue;
        for (std::size_t cand : it->second) {
          if (removed[cand]) continue;
          if (jaccard_at_least(shingles[i], shingles[cand], cfg.jaccard_threshold)) {
            dup = true;
            break;
          }
        }
      }
      if (dup) {
        removed[i] = true;
      } else {
        for (int b = 0; b < bands; ++b) buckets[keys[b]].push_back(i);
      }
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (removed[i])
      result.removed_ids.push_back(corpus.records[i].id);
    else
      result.corpus.records.push_back(corpus.records[i]);
  }
  return result;
}

DetoxResult detox(const Corpus& corpus, const std::vector<std::string>& denylist) {
  std::vector<std::regex> patterns;
  for (const auto& p : denylist) {
    try {
      patterns.emplace_back(p, std::regex::icase);
    } catch (const std::regex_error& e) {
      throw ConfigError("invalid denylist pattern '" + p + "': " + e.what());
    }
  }
  DetoxResult result;
  for (const auto& r : corpus.records) {
    bool hit = false;
    for (const auto& re : patterns) {
      if (std::regex_search(r.query, re) || std::regex_search(r.thinking, re) ||
          std::regex_search(r.answer, re)) {
        hit = true;
        break;
      }
    }
    if (hit) {
      result.removed_ids.push_back(r.id);
    } else {
      Record kept = r;
      kept.clean_flag = true;
      result.corpus.records.push_back(std::move(kept));
    }
  }
  return result;
}

namespace {

std::vector<std::uint64_t> word_ngram_hashes(const std::string& text, int n) {
  auto words = tokenize_words(text);
  std::vector<std::uint64_t> out;
  if (n <= 0 || words.size() < static_cast<std::size_t>(n)) return out;
  for (std::size_t i = 0; i + n <= words.size(); ++i) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (int j = 0; j < n; ++j) {
      h = fnv1a(words[i + j], h);
      h = fnv1a("\x1f", h);
    }
    out.push_back(h);
  }
  return out;
}

}  // namespace

void ContaminationIndex::add_text(const std::string& text) {
  for (auto h : word_ngram_hashes(text, ngram_size)) ngrams.insert(h);
}

bool ContaminationIndex::contains_ngram_of(const std::string& text) const {
  for (auto h : word_ngram_hashes(text, ngram_size)) {
    if (ngrams.count(h)) return true;
  }
  return false;
}

ContaminationIndex build_contamination_index(const std::vector<std::string>& eval_texts,
                                             int ngram_size) {
  if (ngram_size < 8) throw ConfigError("contamination ngram_size must be >= 8");
  ContaminationIndex index;
  index.ngram_size = ngram_size;
  for (const auto& t : eval_texts) index.add_text(t);
  return index;
}

DecontaminateResult decontaminate(const Corpus& corpus, const ContaminationIndex& index) {
  DecontaminateResult result;
  for (const auto& r : corpus.records) {
    if (index.contains_ngram_of(r.query) || index.contains_ngram_of(r.answer)) {
      result.removed_ids.push_back(r.id);
    } else {
      result.corpus.records.push_back(r);
    }
  }
  return result;
}

Corpus final_filter(const Corpus& corpus, double tau,
                    const std::map<std::string, double>& tau_per_label) {
  Corpus out;
  for (const auto& r : corpus.records) {
    if (!r.verify_flag) throw ConfigError("record '" + r.id + "' missing verify_flag");
    if (!r.clean_flag) throw ConfigError("record '" + r.id + "' missing clean_flag");
    if (!r.quality_score) throw ConfigError("record '" + r.id + "' missing quality_score");
    auto it = tau_per_label.find(r.label);
    double threshold = it != tau_per_label.end() ? it->second : tau;
    if (*r.verify_flag && *r.clean_flag && *r.quality_score > threshold) {
      out.records.push_back(r);
    }
  }
  return out;
}

std::string GovernanceReport::to_json() const {
  nlohmann::json j;
  j["input_count"] = input_count;
  j["dedup_removed"] = dedup_removed;
  j["detox_removed"] = detox_removed;
  j["decontam_removed"] = decontam_removed;
  j["below_threshold_removed"] = below_threshold_removed;
  j["output_count"] = output_count;
  return j.dump(2);
}

GovernanceOutcome run_governance(const Corpus& corpus, const DedupConfig& dedup_cfg,
                                 const std::vector<std::string>& denylist,
                                 const ContaminationIndex& index, double tau,
                                 const std::map<std::string, double>& tau_per_label) {
  GovernanceOutcome outcome;
  outcome.report.input_count = corpus.size();
  auto d = dedup(corpus, dedup_cfg);
  outcome.report.dedup_removed = d.removed_ids.size();
  auto t = detox(d.corpus, denylist);
  outcome.report.detox_removed = t.removed_ids.size();
  auto c = decontaminate(t.corpus, index);
  outcome.report.decontam_removed = c.removed_ids.size();
  outcome.corpus = final_filter(c.corpus, tau, tau_per_label);
  outcome.report.below_threshold_removed = c.corpus.size() - outcome.corpus.size();
  outcome.report.output_count = outcome.corpus.size();
  return outcome;
}

}  // namespace finforge
