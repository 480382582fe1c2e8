#include "sumlens/ablation_map.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sumlens/error.hpp"
#include "sumlens/parallel.hpp"
#include "sumlens/stats.hpp"

namespace sumlens {

namespace {

constexpr double kMaxL1 = 2.0;

bool within(double v, double lo, double hi) { return v >= lo && (v < hi || (hi == kMaxL1 && v == hi)); }

// Every (document, step) pair of a corpus, flattened.
struct DecisionRef {
  std::size_t item;
  std::size_t step;
};

std::vector<DecisionRef> flatten(std::span<const SummaryItem> corpus) {
  std::vector<DecisionRef> refs;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    for (std::size_t t = 0; t < corpus[i].summary.size(); ++t) refs.push_back({i, t});
  }
  return refs;
}

Prefix prefix_at(const SummaryItem& item, std::size_t step, const Vocab& vocab) {
  std::vector<TokenId> ids = {vocab.specials().sos};
  ids.insert(ids.end(), item.summary.begin(), item.summary.begin() + static_cast<std::ptrdiff_t>(step));
  return Prefix(std::move(ids), vocab);
}

}  // namespace

std::string_view to_string(Region region) {
  switch (region) {
    case Region::LM: return "LM";
    case Region::CTX: return "CTX";
    case Region::PT: return "PT";
    case Region::FT: return "FT";
    case Region::OTHER: return "OTHER";
  }
  return "OTHER";
}

Region parse_region(std::string_view name) {
  for (Region r : {Region::LM, Region::CTX, Region::PT, Region::FT, Region::OTHER}) {
    if (to_string(r) == name) return r;
  }
  throw ConfigError("unknown region '" + std::string(name) + "'");
}

bool RegionBox::contains(double x, double y) const { return within(x, x0, x1) && within(y, y0, y1); }

std::vector<RegionBox> default_region_boxes() {
  return {
      {Region::FT, 1.5, 0.0, 2.0, 0.5},
      {Region::PT, 0.0, 1.5, 0.5, 2.0},
      {Region::LM, 0.0, 0.0, 0.5, 0.5},
      {Region::CTX, 0.5, 0.5, 2.0, 2.0},
  };
}

void validate_boxes(std::span<const RegionBox> boxes) {
  for (const auto& b : boxes) {
    const bool ok = b.x0 <= b.x1 && b.y0 <= b.y1 && b.x0 >= 0 && b.y0 >= 0 && b.x1 <= kMaxL1 && b.y1 <= kMaxL1;
    if (!ok) throw ConfigError("region box for " + std::string(to_string(b.label)) + " is not inside [0,2]^2");
    if (b.label == Region::OTHER) throw ConfigError("OTHER is the fallback label, not a box");
  }
}

double l1_distance(const TokenDistribution& p, const TokenDistribution& q) {
  if (p.size() != q.size()) throw VocabError("L1 distance between distributions of different sizes");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) d += std::abs(p.probs()[i] - q.probs()[i]);
  return std::min(d, kMaxL1);
}

Region classify_region(double x, double y, std::span<const RegionBox> boxes) {
  if (!(x >= 0.0 && x <= kMaxL1 && y >= 0.0 && y <= kMaxL1)) throw RangeError("map coordinates outside [0,2]");
  for (const auto& b : boxes) {
    if (b.contains(x, y)) return b.label;
  }
  return Region::OTHER;
}

std::vector<double> probe_sentences(const Backend& backend, const Document& doc, const Prefix& prefix,
                                    TokenId target) {
  if (doc.num_sentences() == 0) throw EmptyDocument("cannot probe a document without sentences");
  std::vector<double> out(doc.num_sentences());
  for (std::size_t s = 0; s < out.size(); ++s) {
    const Span span = doc.sentence_pieces(s);
    std::vector<std::size_t> visible(span.size());
    std::iota(visible.begin(), visible.end(), span.begin);
    out[s] = backend.predict_next(AblationConfig::s_part(std::move(visible)), doc, prefix)[target];
  }
  return out;
}

void MapBackends::validate() const {
  if (!lm || !s_empty || !s_full) throw ConfigError("map needs LM, S_EMPTY and S_FULL backends");
  if (!(lm->vocab() == s_full->vocab()) || !(s_empty->vocab() == s_full->vocab())) {
    throw VocabError("map backends do not share a vocabulary");
  }
}

DecisionRecord map_decision(const MapBackends& backends, const Document& doc, const Prefix& prefix, TokenId target,
                            const MapOptions& opts) {
  backends.validate();
  const auto full = backends.s_full->predict_next(AblationConfig::s_full(), doc, prefix);
  const auto lm = backends.lm->predict_next(AblationConfig::lm_empty(), doc, prefix);
  const auto empty = backends.s_empty->predict_next(AblationConfig::s_empty(), doc, prefix);

  DecisionRecord r;
  r.doc_id = doc.id();
  r.step = prefix.size() - 1;
  r.target = target;
  r.target_mismatch = full.argmax() != target;
  r.argmax_tied = full.argmax_tied();
  r.truncated_top_k = std::max({full.truncated_top_k(), lm.truncated_top_k(), empty.truncated_top_k()});
  r.x = l1_distance(lm, full);
  r.y = l1_distance(empty, full);
  r.p_sent = probe_sentences(*backends.s_full, doc, prefix, target);
  r.max_psent = *std::max_element(r.p_sent.begin(), r.p_sent.end());
  r.region = classify_region(r.x, r.y, opts.boxes);
  r.ctx_hard = r.region == Region::CTX && r.max_psent < opts.ctx_hd_threshold;
  return r;
}

MapSummary summarize(std::span<const DecisionRecord> records) {
  MapSummary s;
  s.decisions = records.size();
  for (Region r : {Region::LM, Region::CTX, Region::PT, Region::FT, Region::OTHER}) s.counts[r] = 0;
  std::vector<double> maxes;
  for (const auto& rec : records) {
    ++s.counts[rec.region];
    maxes.push_back(rec.max_psent);
    s.target_mismatches += rec.target_mismatch;
  }
  for (const auto& [region, count] : s.counts) {
    s.percent[region] = records.empty() ? 0.0 : 100.0 * static_cast<double>(count) / static_cast<double>(records.size());
  }
  if (!maxes.empty()) s.max_psent_quartiles = quartiles(maxes);
  return s;
}

MapResult corpus_map(const MapBackends& backends, std::span<const SummaryItem> corpus, const MapOptions& opts) {
  backends.validate();
  validate_boxes(opts.boxes);
  if (corpus.empty()) throw DataError("empty corpus");
  const auto refs = flatten(corpus);
  MapResult out;
  out.records.resize(refs.size());
  const Vocab& vocab = backends.s_full->vocab();
  parallel_for(refs.size(), opts.jobs, [&](std::size_t k) {
    const auto& item = corpus[refs[k].item];
    out.records[k] =
        map_decision(backends, item.doc, prefix_at(item, refs[k].step, vocab), item.summary[refs[k].step], opts);
  });
  out.summary = summarize(out.records);
  return out;
}

double top1_agreement(const Backend& a, const Backend& b, std::span<const SummaryItem> corpus,
                      const AblationConfig& config, std::size_t jobs) {
  if (!(a.vocab() == b.vocab())) throw VocabError("agreement between backends with different vocabularies");
  const auto refs = flatten(corpus);
  if (refs.empty()) return 0.0;
  std::vector<char> same(refs.size(), 0);
  parallel_for(refs.size(), jobs, [&](std::size_t k) {
    const auto& item = corpus[refs[k].item];
    const Prefix prefix = prefix_at(item, refs[k].step, a.vocab());
    same[k] = a.predict_next(config, item.doc, prefix).argmax() == b.predict_next(config, item.doc, prefix).argmax();
  });
  return static_cast<double>(std::count(same.begin(), same.end(), 1)) / static_cast<double>(refs.size());
}

}  // namespace sumlens
