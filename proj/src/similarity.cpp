#include "finforge/similarity.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>
#include <unordered_set>

#include "finforge/rng.hpp"

namespace finforge {

std::vector<std::string> tokenize_words(const std::string& text) {
  std::vector<std::string> words;
  std::string cur;
  auto flush = [&] {
    // strip surrounding punctuation, keep interior (e.g. "3.5" stays intact)
    std::size_t b = 0, e = cur.size();
    while (b < e && std::ispunct(static_cast<unsigned char>(cur[b]))) ++b;
    while (e > b && std::ispunct(static_cast<unsigned char>(cur[e - 1]))) --e;
    if (e > b) words.push_back(cur.substr(b, e - b));
    cur.clear();
  };
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      flush();
    } else {
      cur.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  flush();
  return words;
}

namespace {

std::unordered_set<std::uint64_t> word_ngrams(const std::vector<std::string>& words, int n) {
  std::unordered_set<std::uint64_t> grams;
  if (n <= 0 || words.size() < static_cast<std::size_t>(n)) return grams;
  for (std::size_t i = 0; i + n <= words.size(); ++i) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (int j = 0; j < n; ++j) {
      h = fnv1a(words[i + j], h);
      h = fnv1a("\x1f", h);  // word separator
    }
    grams.insert(h);
  }
  return grams;
}

double jaccard(const std::unordered_set<std::uint64_t>& a,
               const std::unordered_set<std::uint64_t>& b) {
  if (a.empty() && b.empty()) return 1.0;
  if (a.empty() || b.empty()) return 0.0;
  std::size_t inter = 0;
  const auto& small = a.size() <= b.size() ? a : b;
  const auto& big = a.size() <= b.size() ? b : a;
  for (auto h : small) inter += big.count(h);
  return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

double cosine01(const std::vector<double>& u, const std::vector<double>& v) {
  double dot = 0, nu = 0, nv = 0;
  std::size_t n = std::min(u.size(), v.size());
  for (std::size_t i = 0; i < n; ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) return 0.5;  // cos 0 mapped into [0,1]
  double c = dot / (std::sqrt(nu) * std::sqrt(nv));
  c = std::clamp(c, -1.0, 1.0);
  return (c + 1.0) / 2.0;
}

}  // namespace

double sim(const std::string& a, const std::string& b, const SimilarityConfig& cfg) {
  auto wa = tokenize_words(a);
  auto wb = tokenize_words(b);
  if (wa.empty() && wb.empty()) return 1.0;
  if (wa.empty() || wb.empty()) return 0.0;

  // Only n-gram orders both strings can populate; a bigram order on
  // single-word strings would otherwise vacuously score 1.
  double lex = 0.0;
  int used = 0;
  for (int n : cfg.ngram_orders) {
    if (n <= 0) continue;
    std::size_t un = static_cast<std::size_t>(n);
    if (wa.size() < un && wb.size() < un) continue;
    lex += jaccard(word_ngrams(wa, n), word_ngrams(wb, n));
    ++used;
  }
  lex = used > 0 ? lex / used : 0.0;

  double w = cfg.embedder ? std::clamp(cfg.lexical_weight, 0.0, 1.0) : 1.0;
  double emb = 0.0;
  if (cfg.embedder && w < 1.0) emb = cosine01((*cfg.embedder)(a), (*cfg.embedder)(b));
  return w * lex + (1.0 - w) * emb;
}

double consistency(const ResponseSet& rs, const SimilarityConfig& cfg) {
  const std::size_t p = rs.responses.size();
  if (p < 2) throw ConfigError("consistency requires at least 2 responses");
  std::set<std::string> ids;
  for (const auto& [model_id, _] : rs.responses) {
    if (!ids.insert(model_id).second)
      throw ConfigError("duplicate model_id '" + model_id + "' in response set");
  }
  double total = 0.0;
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t k = 0; k < p; ++k) {
      if (j == k) continue;
      total += sim(rs.responses[j].second, rs.responses[k].second, cfg);
    }
  }
  return total / static_cast<double>(p * (p - 1));
}

namespace {

std::string normalize_for_entailment(const std::string& s) {
  std::ostringstream out;
  bool pending_space = false;
  for (unsigned char c : s) {
    if (std::isspace(c) || std::ispunct(c)) {
      pending_space = true;
    } else {
      if (pending_space && out.tellp() > 0) out << ' ';
      pending_space = false;
      out << static_cast<char>(std::tolower(c));
    }
  }
  return out.str();
}

}  // namespace

bool substring_entailment_judge(const Record& record) {
  if (record.thinking.empty()) return false;
  std::string needle = normalize_for_entailment(record.answer);
  if (needle.empty()) return false;
  return normalize_for_entailment(record.thinking).find(needle) != std::string::npos;
}

bool reasoning_validate(const Record& record, const ReasoningJudge& judge) {
  if (record.answer.empty()) throw ConfigError("record '" + record.id + "' has empty answer");
  return judge(record);
}

double default_rating_scorer(const Record&, double consistency, bool valid) {
  return 0.6 * consistency + 0.4 * (valid ? 1.0 : 0.0);
}

double score_record(const Record& record, double consistency, bool reasoning_valid,
                    const RatingScorer& rm) {
  if (consistency < 0.0 || consistency > 1.0)
    throw ConfigError("consistency out of [0,1]");
  return std::clamp(rm(record, consistency, reasoning_valid), 0.0, 1.0);
}

}  // namespace finforge
