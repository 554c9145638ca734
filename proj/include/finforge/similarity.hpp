#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "finforge/corpus.hpp"

namespace finforge {

using Embedder = std::function<std::vector<double>(const std::string&)>;

// Blend of word n-gram Jaccard and (optional) embedding cosine.
// Without an embedder the lexical weight is forced to 1.
struct SimilarityConfig {
  double lexical_weight = 1.0;
  std::vector<int> ngram_orders = {1, 2};
  std::optional<Embedder> embedder;
};

// Lowercased words, Unicode-whitespace split, surrounding punctuation stripped.
std::vector<std::string> tokenize_words(const std::string& text);

// Symmetric similarity in [0,1]; sim(x,x)=1 for non-empty x,
// empty vs empty = 1, empty vs non-empty = 0.
double sim(const std::string& a, const std::string& b, const SimilarityConfig& cfg);

struct ResponseSet {
  std::string query_id;
  std::vector<std::pair<std::string, std::string>> responses;  // (model_id, text)
};

// Mean pairwise sim over all ordered pairs j != k.
double consistency(const ResponseSet& rs, const SimilarityConfig& cfg);

using ReasoningJudge = std::function<bool(const Record&)>;

// Shipped deterministic judge: answer entailed by thinking when the
// normalized answer appears as a substring of the normalized thinking.
bool substring_entailment_judge(const Record& record);

bool reasoning_validate(const Record& record, const ReasoningJudge& judge);

struct QualityVerdict {
  double consistency = 0.0;
  bool reasoning_valid = false;
  double score = 0.0;
};

using RatingScorer = std::function<double(const Record&, double consistency, bool valid)>;

// Default rating blend: 0.6 * consistency + 0.4 * [reasoning valid].
double default_rating_scorer(const Record& record, double consistency, bool valid);

double score_record(const Record& record, double consistency, bool reasoning_valid,
                    const RatingScorer& rm = default_rating_scorer);

}  // namespace finforge
