#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sumlens/backend.hpp"

namespace sumlens {

enum class Region { LM, CTX, PT, FT, OTHER };

std::string_view to_string(Region region);
Region parse_region(std::string_view name);

struct RegionBox {
  Region label = Region::OTHER;
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  bool contains(double x, double y) const;
};

// FT, PT, LM, CTX — the classification priority order.
std::vector<RegionBox> default_region_boxes();
void validate_boxes(std::span<const RegionBox> boxes);

// Σ|p_i − q_i| ∈ [0, 2].
double l1_distance(const TokenDistribution& p, const TokenDistribution& q);

// First containing box in order, else OTHER. Lower edges are inclusive and
// upper edges exclusive, except an upper edge at 2 which is inclusive.
Region classify_region(double x, double y, std::span<const RegionBox> boxes);

// Entry i: P(target) with only sentence i's pieces visible.
std::vector<double> probe_sentences(const Backend& backend, const Document& doc, const Prefix& prefix,
                                    TokenId target);

struct DecisionRecord {
  std::string doc_id;
  std::size_t step = 0;
  TokenId target = 0;
  double x = 0;  // L1(P_LM∅, P_full)
  double y = 0;  // L1(P_S∅, P_full)
  std::vector<double> p_sent;
  double max_psent = 0;
  Region region = Region::OTHER;
  bool ctx_hard = false;
  bool target_mismatch = false;  // target is not the S_full argmax
  bool argmax_tied = false;
  int truncated_top_k = 0;  // nonzero when any distribution came from a truncated payload
};

// lm is queried as LM_EMPTY, s_empty as S_EMPTY, s_full as S_FULL and for the
// per-sentence S_PART probes.
struct MapBackends {
  const Backend* lm = nullptr;
  const Backend* s_empty = nullptr;
  const Backend* s_full = nullptr;
  void validate() const;
};

struct MapOptions {
  std::vector<RegionBox> boxes = default_region_boxes();
  double ctx_hd_threshold = 0.5;
  std::size_t jobs = 1;
};

DecisionRecord map_decision(const MapBackends& backends, const Document& doc, const Prefix& prefix, TokenId target,
                            const MapOptions& opts = {});

// A document with the summary whose tokens are the analysed decisions.
struct SummaryItem {
  Document doc;
  std::vector<TokenId> summary;
};

struct MapSummary {
  std::size_t decisions = 0;
  std::map<Region, std::size_t> counts;
  std::map<Region, double> percent;  // sums to 100 when decisions > 0
  std::array<double, 3> max_psent_quartiles{};
  std::size_t target_mismatches = 0;
};

struct MapResult {
  std::vector<DecisionRecord> records;  // ordered by (document, step)
  MapSummary summary;
};

MapSummary summarize(std::span<const DecisionRecord> records);

MapResult corpus_map(const MapBackends& backends, std::span<const SummaryItem> corpus, const MapOptions& opts = {});

// Fraction of decisions where both backends' argmax coincide under `config`.
double top1_agreement(const Backend& a, const Backend& b, std::span<const SummaryItem> corpus,
                      const AblationConfig& config, std::size_t jobs = 1);

}  // namespace sumlens
