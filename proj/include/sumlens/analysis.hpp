#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sumlens/ablation_map.hpp"

namespace sumlens {

// ---- sentence fusion ----

struct FusionRecord {
  std::string doc_id;
  std::size_t step = 0;
  TokenId target = 0;
  std::size_t best_single = 0;
  double best_single_p = 0;
  std::size_t pair_i = 0, pair_j = 0;  // i < j
  double best_pair_p = 0;
  bool is_fusion = false;
};

// Searches every sentence pair (shown together in document order). Requires
// max(p_sent) < 0.5 and at least two sentences, else NotApplicable. Fusion iff
// best pair − best single ≥ gain.
FusionRecord find_fusion(const Backend& backend, const Document& doc, const Prefix& prefix, TokenId target,
                         std::span<const double> p_sent, double gain = 0.5, std::size_t jobs = 1);

struct FusionReport {
  std::vector<FusionRecord> records;  // one per eligible decision
  std::size_t eligible = 0;
  std::size_t fused = 0;
  double rate = 0.0;  // fused / eligible, 0 when nothing is eligible
};

// Eligible: CTX decisions with max_psent < 0.5 over documents of ≥ 2 sentences.
FusionReport fusion_rate(const Backend& backend, std::span<const SummaryItem> corpus,
                         std::span<const DecisionRecord> records, double gain = 0.5, std::size_t jobs = 1);

// ---- training-data overlap ----

struct TextRecord {
  std::string id;
  std::string text;
};

struct OverlapHit {
  std::string example_id;  // dataset summary
  std::string doc_id;      // corpus document
  std::size_t count = 0;   // distinct shared n-grams
  std::vector<std::string> samples;
  friend bool operator==(const OverlapHit&, const OverlapHit&) = default;
};

// Lowercases, splits on whitespace, strips punctuation from token edges and
// drops tokens that were only punctuation.
std::vector<std::string> overlap_tokens(std::string_view text);

// Inverted index from 64-bit n-gram hashes to summary n-grams; candidate
// matches are verified on the raw strings.
class OverlapIndex {
 public:
  OverlapIndex(std::span<const TextRecord> summaries, std::size_t n = 7, std::size_t min_matches = 3);

  // Hits for one corpus document, ordered by summary index.
  std::vector<OverlapHit> scan(const TextRecord& doc) const;
  std::size_t num_summaries() const { return ids_.size(); }

 private:
  struct Entry {
    std::uint32_t summary;
    std::uint32_t position;
  };
  std::size_t n_;
  std::size_t min_matches_;
  std::vector<std::string> ids_;
  std::vector<std::vector<std::string>> tokens_;
  std::unordered_map<std::uint64_t, std::vector<Entry>> index_;
};

struct OverlapReport {
  std::vector<OverlapHit> hits;  // ordered by corpus document, then summary
  std::size_t examples_flagged = 0;
  double fraction = 0.0;
};

OverlapReport overlap_scan(std::span<const TextRecord> corpus, std::span<const TextRecord> summaries,
                           std::size_t n = 7, std::size_t min_matches = 3, std::size_t jobs = 1);
// O(docs × summaries) reference.
OverlapReport overlap_scan_naive(std::span<const TextRecord> corpus, std::span<const TextRecord> summaries,
                                 std::size_t n = 7, std::size_t min_matches = 3);

// ---- FT bigram frequency ----

struct TokenCorpus {
  std::string name;
  std::vector<std::string> tokens;
};

struct BigramStat {
  std::string prev, next;
  std::size_t cases = 0;                  // FT decisions with this bigram
  std::vector<double> frequency;          // per corpus: #(prev,next) / #prev
  std::vector<bool> zero_denominator;     // prev never seen (as a predecessor)
};

struct BigramReport {
  std::vector<std::string> corpora;
  std::vector<BigramStat> bigrams;  // first-seen order
  std::vector<double> aggregate;    // per corpus, mean over FT cases
};

BigramReport bigram_stats(std::span<const std::pair<std::string, std::string>> ft_bigrams,
                          std::span<const TokenCorpus> corpora);

}  // namespace sumlens
