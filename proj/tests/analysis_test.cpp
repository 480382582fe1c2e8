#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "sumlens/analysis.hpp"
#include "sumlens/error.hpp"
#include "sumlens/scripted_oracle.hpp"
#include "test_support.hpp"

namespace sumlens {
namespace {

const Vocab& vocab() {
  static const Vocab v = testing::word_vocab(8);
  return v;
}

Prefix sos() { return Prefix({vocab().specials().sos}, vocab()); }

// Six sentences "w0 w1 ." ... so that sentences 2 and 5 can be planted.
Document six_sentences() { return tokenize("w0 w1. w2 w3. w4 w5. w6 w7. w1 w2. w3 w4.", vocab(), "six"); }

constexpr TokenId kTarget = 7;

// Target at `pair_p` when sentences 2 and 5 are both visible, 0.1 otherwise.
ScriptedOracle planted(double pair_p) {
  OracleRule rule;
  rule.when.sentences = {2, 5};
  rule.probs[kTarget] = pair_p;
  return ScriptedOracle(vocab(), {rule}, peaked_distribution(vocab().size(), kTarget, 0.1));
}

TEST(FindFusion, RecoversThePlantedPair) {
  const auto oracle = planted(0.9);
  const Document doc = six_sentences();
  const auto p_sent = probe_sentences(oracle, doc, sos(), kTarget);
  ASSERT_EQ(p_sent.size(), 6u);
  for (double p : p_sent) EXPECT_NEAR(p, 0.1, 1e-12);
  const FusionRecord r = find_fusion(oracle, doc, sos(), kTarget, p_sent);
  EXPECT_EQ(r.pair_i, 2u);
  EXPECT_EQ(r.pair_j, 5u);
  EXPECT_NEAR(r.best_pair_p, 0.9, 1e-12);
  EXPECT_TRUE(r.is_fusion);
}

TEST(FindFusion, GainThresholdIsInclusive) {
  const Document doc = six_sentences();
  const auto below = planted(0.59);
  const auto r1 = find_fusion(below, doc, sos(), kTarget, probe_sentences(below, doc, sos(), kTarget));
  EXPECT_FALSE(r1.is_fusion);
  const auto exact = planted(0.6);
  const auto r2 = find_fusion(exact, doc, sos(), kTarget, probe_sentences(exact, doc, sos(), kTarget));
  EXPECT_TRUE(r2.is_fusion);
}

TEST(FindFusion, NotApplicableCases) {
  const auto oracle = planted(0.9);
  const Document doc = six_sentences();
  std::vector<double> confident(6, 0.1);
  confident[3] = 0.5;
  EXPECT_THROW(find_fusion(oracle, doc, sos(), kTarget, confident), NotApplicable);
  const Document one = tokenize("w0 w1.", vocab(), "one");
  const std::vector<double> single = {0.1};
  EXPECT_THROW(find_fusion(oracle, one, sos(), kTarget, single), NotApplicable);
  const std::vector<double> short_p = {0.1, 0.1};
  EXPECT_THROW(find_fusion(oracle, doc, sos(), kTarget, short_p), ShapeError);
}

TEST(FindFusion, ParallelPairsMatchSerial) {
  const auto oracle = planted(0.7);
  const Document doc = six_sentences();
  const auto p = probe_sentences(oracle, doc, sos(), kTarget);
  const auto a = find_fusion(oracle, doc, sos(), kTarget, p, 0.5, 1);
  const auto b = find_fusion(oracle, doc, sos(), kTarget, p, 0.5, 4);
  EXPECT_EQ(a.pair_i, b.pair_i);
  EXPECT_EQ(a.pair_j, b.pair_j);
  EXPECT_EQ(a.best_pair_p, b.best_pair_p);
}

TEST(FusionRate, CountsOnlyHardContextDecisions) {
  const auto oracle = planted(0.9);
  const std::vector<SummaryItem> corpus = {{six_sentences(), {kTarget}}};
  DecisionRecord hard;
  hard.doc_id = "six";
  hard.step = 0;
  hard.target = kTarget;
  hard.region = Region::CTX;
  hard.p_sent = probe_sentences(oracle, corpus[0].doc, sos(), kTarget);
  hard.max_psent = 0.1;
  DecisionRecord easy = hard;
  easy.max_psent = 0.8;
  DecisionRecord lm = hard;
  lm.region = Region::LM;
  const std::vector<DecisionRecord> records = {hard, easy, lm};
  const auto report = fusion_rate(oracle, corpus, records);
  EXPECT_EQ(report.eligible, 1u);
  EXPECT_EQ(report.fused, 1u);
  EXPECT_DOUBLE_EQ(report.rate, 1.0);

  DecisionRecord orphan = hard;
  orphan.doc_id = "missing";
  const std::vector<DecisionRecord> bad = {orphan};
  EXPECT_THROW(fusion_rate(oracle, corpus, bad), DataError);
}

TEST(OverlapTokens, LowercasesAndStripsPunctuation) {
  EXPECT_EQ(overlap_tokens("The Cat, sat -- on \"the\" mat."),
            (std::vector<std::string>{"the", "cat", "sat", "on", "the", "mat"}));
}

std::string words(int from, int to) {
  std::string s;
  for (int i = from; i < to; ++i) s += "t" + std::to_string(i) + " ";
  return s;
}

// 10 tokens share exactly 4 distinct 7-grams; 9 tokens share 3.
TEST(OverlapScan, ThresholdIsStrictlyAboveMinMatches) {
  const std::vector<TextRecord> summaries = {{"four", words(0, 10)}, {"three", words(100, 109)}};
  const std::vector<TextRecord> corpus = {{"doc", "intro. " + words(0, 10) + " middle " + words(100, 109) + " end"}};
  const auto report = overlap_scan(corpus, summaries);
  ASSERT_EQ(report.hits.size(), 1u);
  EXPECT_EQ(report.hits[0].example_id, "four");
  EXPECT_EQ(report.hits[0].count, 4u);
  EXPECT_EQ(report.hits[0].samples.size(), 3u);
  EXPECT_EQ(report.examples_flagged, 1u);
  EXPECT_DOUBLE_EQ(report.fraction, 0.5);
}

TEST(OverlapScan, RepeatedNgramsCountOnce) {
  const std::vector<TextRecord> summaries = {{"s", words(0, 8)}};
  const std::vector<TextRecord> corpus = {{"d", words(0, 8) + words(0, 8) + words(0, 8)}};
  const auto hits = overlap_scan(corpus, summaries, 7, 1).hits;
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0].count, 2u);
}

TEST(OverlapScan, RejectsZeroOrder) {
  const std::vector<TextRecord> none;
  EXPECT_THROW(overlap_scan(none, none, 0), ConfigError);
  EXPECT_THROW(overlap_scan_naive(none, none, 0), ConfigError);
}

// The hashed index reports exactly what the quadratic reference reports.
TEST(OverlapScan, IndexAgreesWithNaiveScan) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> tok(0, 11), len(5, 40);
  auto text = [&] {
    std::string s;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) s += "x" + std::to_string(tok(rng)) + (i % 5 == 4 ? ". " : " ");
    return s;
  };
  for (std::size_t n : {1u, 2u, 3u, 7u}) {
    std::vector<TextRecord> summaries, corpus;
    for (int i = 0; i < 30; ++i) summaries.push_back({"s" + std::to_string(i), text()});
    for (int i = 0; i < 60; ++i) corpus.push_back({"d" + std::to_string(i), text()});
    const auto fast = overlap_scan(corpus, summaries, n, 1, 3);
    const auto slow = overlap_scan_naive(corpus, summaries, n, 1);
    EXPECT_EQ(fast.hits, slow.hits) << "n=" << n;
    EXPECT_EQ(fast.examples_flagged, slow.examples_flagged);
  }
}

TEST(BigramStats, ConditionalFrequency) {
  const std::vector<TokenCorpus> corpora = {{"ab", {"a", "b", "a", "b"}}, {"mixed", {"a", "c", "a", "b", "z"}}};
  const std::vector<std::pair<std::string, std::string>> ft = {{"a", "b"}, {"q", "b"}, {"a", "b"}};
  const auto r = bigram_stats(ft, corpora);
  ASSERT_EQ(r.bigrams.size(), 2u);
  EXPECT_DOUBLE_EQ(r.bigrams[0].frequency[0], 1.0);
  EXPECT_DOUBLE_EQ(r.bigrams[0].frequency[1], 0.5);
  EXPECT_EQ(r.bigrams[0].cases, 2u);
  EXPECT_TRUE(r.bigrams[1].zero_denominator[0]);
  EXPECT_DOUBLE_EQ(r.bigrams[1].frequency[0], 0.0);
  EXPECT_DOUBLE_EQ(r.aggregate[0], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.aggregate[1], 1.0 / 3.0);
}

// Frequencies of all successors of a token sum to one.
TEST(BigramStats, SuccessorFrequenciesSumToOne) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> tok(0, 5);
  TokenCorpus c{"r", {}};
  for (int i = 0; i < 500; ++i) c.tokens.push_back("v" + std::to_string(tok(rng)));
  std::vector<std::pair<std::string, std::string>> ft;
  for (int b = 0; b < 6; ++b) ft.emplace_back("v2", "v" + std::to_string(b));
  const std::vector<TokenCorpus> corpora = {c};
  const auto r = bigram_stats(ft, corpora);
  double total = 0;
  for (const auto& s : r.bigrams) total += s.frequency[0];
  EXPECT_NEAR(total, 1.0, 1e-12);
}

}  // namespace
}  // namespace sumlens
