#include <algorithm>

#include "doctest.h"
#include "finforge/governance.hpp"
#include "finforge/rng.hpp"

using namespace finforge;

namespace {

Record make_record(const std::string& id, const std::string& query, const std::string& answer,
                   const std::string& thinking = "") {
  Record r;
  r.id = id;
  r.label = "banking/ner";
  r.query = query;
  r.thinking = thinking;
  r.answer = answer;
  return r;
}

std::string random_sentence(SplitMix64& rng, int words) {
  static const char* vocab[] = {"rate",    "bond",   "loan",   "yield",  "asset", "audit",
                                "margin",  "equity", "credit", "basel",  "swap",  "hedge",
                                "futures", "branch", "ledger", "payout", "tenor", "issuer"};
  std::string s;
  for (int i = 0; i < words; ++i) {
    if (i) s += ' ';
    s += vocab[rng.next_below(std::size(vocab))];
    s += std::to_string(rng.next_below(1000));
  }
  return s;
}

}  // namespace

TEST_CASE("byte-identical duplicate: the later record is removed") {
  Corpus c;
  c.records.push_back(make_record("first", "the quick brown fox assesses credit risk", "ok"));
  c.records.push_back(make_record("second", "the quick brown fox assesses credit risk", "ok"));
  DedupConfig cfg;
  auto res = dedup(c, cfg);
  REQUIRE(res.removed_ids.size() == 1);
  CHECK(res.removed_ids[0] == "second");
  CHECK(res.corpus.records[0].id == "first");
}

TEST_CASE("near-duplicate above threshold removed, sketch agrees with exact oracle") {
  SplitMix64 rng(11);
  Corpus c;
  for (int i = 0; i < 200; ++i) {
    c.records.push_back(make_record("r" + std::to_string(i), random_sentence(rng, 18), "answer"));
  }
  // plant near-duplicates: copy with a short suffix tweak keeps shingle-Jaccard high
  for (int i = 0; i < 20; ++i) {
    auto base = c.records[i];
    base.id = "near" + std::to_string(i);
    base.query += " zz";
    c.records.push_back(base);
  }
  DedupConfig sketch_cfg;
  sketch_cfg.jaccard_threshold = 0.9;
  DedupConfig oracle_cfg = sketch_cfg;
  oracle_cfg.exact_oracle = true;

  auto sketch = dedup(c, sketch_cfg);
  auto oracle = dedup(c, oracle_cfg);
  // exact-confirmed candidates: sketch may only miss pairs LSH never buckets
  CHECK(sketch.removed_ids == oracle.removed_ids);
  for (const auto& id : oracle.removed_ids) CHECK(id.substr(0, 4) == "near");
}

TEST_CASE("all-distinct corpus removes nothing and dedup is idempotent") {
  SplitMix64 rng(23);
  Corpus c;
  for (int i = 0; i < 100; ++i) {
    c.records.push_back(make_record("r" + std::to_string(i), random_sentence(rng, 15), "answer"));
  }
  DedupConfig cfg;
  auto once = dedup(c, cfg);
  CHECK(once.removed_ids.empty());
  auto twice = dedup(once.corpus, cfg);
  CHECK(twice.removed_ids.empty());
  CHECK(twice.corpus.records.size() == once.corpus.records.size());
}

TEST_CASE("dedup config validation") {
  DedupConfig bad;
  bad.shingle_size = 1;
  Corpus c;
  CHECK_THROWS_AS(dedup(c, bad), ConfigError);
  bad.shingle_size = 5;
  bad.num_hashes = 8;
  CHECK_THROWS_AS(dedup(c, bad), ConfigError);
}

TEST_CASE("detox removes matches in any field and flags survivors clean") {
  Corpus c;
  c.records.push_back(make_record("bad-query", "this fund has guaranteed returns", "a"));
  c.records.push_back(make_record("bad-thinking", "q", "a", "use this insider tip quietly"));
  c.records.push_back(make_record("clean", "diversify across sectors", "a"));
  auto res = detox(c, {"guaranteed (returns|profit)", "insider tip"});
  REQUIRE(res.removed_ids.size() == 2);
  CHECK(std::find(res.removed_ids.begin(), res.removed_ids.end(), "bad-thinking") !=
        res.removed_ids.end());
  REQUIRE(res.corpus.size() == 1);
  CHECK(res.corpus.records[0].clean_flag == true);
}

TEST_CASE("empty denylist removes nothing, flags everything clean") {
  Corpus c;
  c.records.push_back(make_record("a", "q", "a"));
  auto res = detox(c, {});
  CHECK(res.removed_ids.empty());
  CHECK(res.corpus.records[0].clean_flag == true);
}

TEST_CASE("invalid denylist pattern is a config error") {
  Corpus c;
  CHECK_THROWS_AS(detox(c, {"(unclosed"}), ConfigError);
}

TEST_CASE("decontamination catches a planted 13-gram, not a 12-gram") {
  std::string eval_text =
      "what is the regulatory capital requirement for a systemically important bank "
      "under the revised basel framework rules";
  auto index = build_contamination_index({eval_text}, 13);

  // 13 consecutive eval words inside the query -> removed
  Corpus c;
  c.records.push_back(make_record(
      "contaminated",
      "prefix words what is the regulatory capital requirement for a systemically "
      "important bank under the revised suffix",
      "a"));
  // only 12 consecutive eval words -> kept
  c.records.push_back(make_record(
      "near-miss",
      "what is the regulatory capital requirement for a systemically important bank XX",
      "a"));
  auto res = decontaminate(c, index);
  REQUIRE(res.removed_ids.size() == 1);
  CHECK(res.removed_ids[0] == "contaminated");
}

TEST_CASE("decontamination: 100 planted among 1000, exactly 100 removed") {
  SplitMix64 rng(31);
  std::string eval_text = random_sentence(rng, 60);
  auto index = build_contamination_index({eval_text}, 13);

  auto eval_words = [&] {
    std::vector<std::string> w;
    std::string cur;
    for (char ch : eval_text + " ") {
      if (ch == ' ') {
        w.push_back(cur);
        cur.clear();
      } else
        cur += ch;
    }
    return w;
  }();

  Corpus c;
  for (int i = 0; i < 1000; ++i) {
    std::string q = random_sentence(rng, 20);
    if (i % 10 == 0) {
      // splice a verbatim 13-word span from the eval set
      std::size_t start = rng.next_below(eval_words.size() - 13);
      std::string span;
      for (std::size_t j = start; j < start + 13; ++j) span += eval_words[j] + " ";
      q += " " + span;
    }
    c.records.push_back(make_record("r" + std::to_string(i), q, "answer " + std::to_string(i)));
  }
  auto res = decontaminate(c, index);
  CHECK(res.removed_ids.size() == 100);
}

TEST_CASE("ngram_size below 8 rejected") {
  CHECK_THROWS_AS(build_contamination_index({}, 7), ConfigError);
}

TEST_CASE("final filter: strict threshold and conjunction") {
  auto rec = [](const std::string& id, bool verify, bool clean, double score) {
    Record r = make_record(id, "q", "a");
    r.verify_flag = verify;
    r.clean_flag = clean;
    r.quality_score = score;
    return r;
  };
  Corpus c;
  c.records.push_back(rec("kept", true, true, 0.8));
  c.records.push_back(rec("at-tau", true, true, 0.7));
  c.records.push_back(rec("unverified", false, true, 0.99));
  c.records.push_back(rec("dirty", true, false, 0.99));
  auto out = final_filter(c, 0.7);
  REQUIRE(out.size() == 1);
  CHECK(out.records[0].id == "kept");

  // per-label override takes precedence
  auto loose = final_filter(c, 0.7, {{"banking/ner", 0.5}});
  CHECK(loose.size() == 2);
}

TEST_CASE("final filter errors on missing flags, naming the record") {
  Corpus c;
  c.records.push_back(make_record("no-flags", "q", "a"));
  CHECK_THROWS_WITH_AS(final_filter(c, 0.5), doctest::Contains("no-flags"), ConfigError);
}

TEST_CASE("governance report reconciles through the full pipeline") {
  Corpus c;
  for (int i = 0; i < 6; ++i) {
    auto r = make_record("r" + std::to_string(i),
                         "unique query number " + std::to_string(i) + " about fixed income",
                         "answer " + std::to_string(i));
    r.verify_flag = true;
    r.quality_score = i % 2 == 0 ? 0.9 : 0.3;
    c.records.push_back(r);
  }
  c.records.push_back(c.records[0]);           // duplicate (same id is fine pre-load here)
  c.records.back().id = "dup";
  auto toxic = make_record("toxic", "a clearly guaranteed returns pitch", "a");
  toxic.verify_flag = true;
  toxic.quality_score = 0.9;
  c.records.push_back(toxic);

  auto index = build_contamination_index({}, 13);
  auto outcome =
      run_governance(c, DedupConfig{}, {"guaranteed returns"}, index, 0.5);
  CHECK(outcome.report.input_count == 8);
  CHECK(outcome.report.dedup_removed == 1);
  CHECK(outcome.report.detox_removed == 1);
  CHECK(outcome.report.below_threshold_removed == 3);
  CHECK(outcome.report.output_count == 3);
  CHECK(outcome.report.reconciles());
}
