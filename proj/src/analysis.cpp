#include "sumlens/analysis.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

#include "sumlens/error.hpp"
#include "sumlens/parallel.hpp"

namespace sumlens {

namespace {

constexpr double kGainSlack = 1e-9;

std::vector<std::size_t> pieces_of(const Document& doc, std::size_t i, std::size_t j) {
  std::vector<std::size_t> out;
  for (std::size_t s : {i, j}) {
    const Span span = doc.sentence_pieces(s);
    for (std::size_t p = span.begin; p < span.end; ++p) out.push_back(p);
  }
  return out;
}

bool is_edge_punct(unsigned char c) { return std::ispunct(c) != 0; }

std::string join(const std::vector<std::string>& tokens, std::size_t at, std::size_t n) {
  std::string out;
  for (std::size_t k = 0; k < n; ++k) {
    if (k) out += ' ';
    out += tokens[at + k];
  }
  return out;
}

std::uint64_t ngram_hash(const std::vector<std::string>& tokens, std::size_t at, std::size_t n) {
  std::uint64_t h = 1469598103934665603ULL;
  for (std::size_t k = 0; k < n; ++k) {
    h = fnv1a64(tokens[at + k], h);
    h = fnv1a64(std::string_view("\x1f", 1), h);
  }
  return h;
}

bool same_ngram(const std::vector<std::string>& a, std::size_t ai, const std::vector<std::string>& b, std::size_t bi,
                std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) {
    if (a[ai + k] != b[bi + k]) return false;
  }
  return true;
}

OverlapReport finish(std::vector<OverlapHit> hits, std::size_t summaries) {
  OverlapReport r;
  std::set<std::string> flagged;
  for (const auto& h : hits) flagged.insert(h.example_id);
  r.hits = std::move(hits);
  r.examples_flagged = flagged.size();
  r.fraction = summaries ? static_cast<double>(flagged.size()) / static_cast<double>(summaries) : 0.0;
  return r;
}

void check_ngram_args(std::size_t n) {
  if (n < 1) throw ConfigError("n-gram order must be at least 1");
}

constexpr std::size_t kSamples = 3;

}  // namespace

FusionRecord find_fusion(const Backend& backend, const Document& doc, const Prefix& prefix, TokenId target,
                         std::span<const double> p_sent, double gain, std::size_t jobs) {
  const std::size_t m = doc.num_sentences();
  if (m < 2) throw NotApplicable("fusion needs at least two sentences");
  if (p_sent.size() != m) throw ShapeError("p_sent length does not match the sentence count");
  FusionRecord r;
  r.doc_id = doc.id();
  r.step = prefix.size() - 1;
  r.target = target;
  r.best_single = static_cast<std::size_t>(std::max_element(p_sent.begin(), p_sent.end()) - p_sent.begin());
  r.best_single_p = p_sent[r.best_single];
  if (!(r.best_single_p < 0.5)) throw NotApplicable("a single sentence already reaches 0.5");

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) pairs.emplace_back(i, j);
  }
  std::vector<double> probs(pairs.size());
  parallel_for(pairs.size(), jobs, [&](std::size_t k) {
    probs[k] = backend.predict_next(AblationConfig::s_part(pieces_of(doc, pairs[k].first, pairs[k].second)), doc,
                                    prefix)[target];
  });
  const std::size_t best = static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
  r.pair_i = pairs[best].first;
  r.pair_j = pairs[best].second;
  r.best_pair_p = probs[best];
  r.is_fusion = r.best_pair_p - r.best_single_p >= gain - kGainSlack;
  return r;
}

FusionReport fusion_rate(const Backend& backend, std::span<const SummaryItem> corpus,
                         std::span<const DecisionRecord> records, double gain, std::size_t jobs) {
  std::map<std::string, const SummaryItem*> by_id;
  for (const auto& item : corpus) {
    if (!by_id.emplace(item.doc.id(), &item).second) throw DataError("duplicate document id " + item.doc.id());
  }
  std::vector<const DecisionRecord*> eligible;
  for (const auto& r : records) {
    if (r.region != Region::CTX || !(r.max_psent < 0.5) || r.p_sent.size() < 2) continue;
    if (!by_id.contains(r.doc_id)) throw DataError("decision for unknown document " + r.doc_id);
    eligible.push_back(&r);
  }
  FusionReport report;
  report.eligible = eligible.size();
  report.records.resize(eligible.size());
  const Vocab& vocab = backend.vocab();
  parallel_for(eligible.size(), jobs, [&](std::size_t k) {
    const DecisionRecord& r = *eligible[k];
    const SummaryItem& item = *by_id.at(r.doc_id);
    if (r.step > item.summary.size()) throw DataError("decision step beyond its summary");
    std::vector<TokenId> ids = {vocab.specials().sos};
    ids.insert(ids.end(), item.summary.begin(), item.summary.begin() + static_cast<std::ptrdiff_t>(r.step));
    report.records[k] = find_fusion(backend, item.doc, Prefix(ids, vocab), r.target, r.p_sent, gain);
  });
  for (const auto& f : report.records) report.fused += f.is_fusion;
  report.rate = report.eligible ? static_cast<double>(report.fused) / static_cast<double>(report.eligible) : 0.0;
  return report;
}

std::vector<std::string> overlap_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string w;
  while (in >> w) {
    std::size_t b = 0, e = w.size();
    while (b < e && is_edge_punct(static_cast<unsigned char>(w[b]))) ++b;
    while (e > b && is_edge_punct(static_cast<unsigned char>(w[e - 1]))) --e;
    if (b == e) continue;
    std::string t = w.substr(b, e - b);
    for (char& c : t) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    out.push_back(std::move(t));
  }
  return out;
}

OverlapIndex::OverlapIndex(std::span<const TextRecord> summaries, std::size_t n, std::size_t min_matches)
    : n_(n), min_matches_(min_matches) {
  check_ngram_args(n);
  for (std::size_t s = 0; s < summaries.size(); ++s) {
    ids_.push_back(summaries[s].id);
    tokens_.push_back(overlap_tokens(summaries[s].text));
    const auto& t = tokens_.back();
    for (std::size_t i = 0; i + n_ <= t.size(); ++i) {
      index_[ngram_hash(t, i, n_)].push_back({static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(i)});
    }
  }
}

std::vector<OverlapHit> OverlapIndex::scan(const TextRecord& doc) const {
  const auto tokens = overlap_tokens(doc.text);
  // summary -> distinct shared n-grams (as strings)
  std::map<std::uint32_t, std::set<std::string>> shared;
  for (std::size_t i = 0; i + n_ <= tokens.size(); ++i) {
    const auto it = index_.find(ngram_hash(tokens, i, n_));
    if (it == index_.end()) continue;
    for (const Entry& e : it->second) {
      if (same_ngram(tokens, i, tokens_[e.summary], e.position, n_)) shared[e.summary].insert(join(tokens, i, n_));
    }
  }
  std::vector<OverlapHit> hits;
  for (const auto& [s, grams] : shared) {
    if (grams.size() <= min_matches_) continue;
    OverlapHit h{ids_[s], doc.id, grams.size(), {}};
    for (const auto& g : grams) {
      if (h.samples.size() == kSamples) break;
      h.samples.push_back(g);
    }
    hits.push_back(std::move(h));
  }
  return hits;
}

OverlapReport overlap_scan(std::span<const TextRecord> corpus, std::span<const TextRecord> summaries, std::size_t n,
                           std::size_t min_matches, std::size_t jobs) {
  const OverlapIndex index(summaries, n, min_matches);
  std::vector<std::vector<OverlapHit>> per_doc(corpus.size());
  parallel_for(corpus.size(), jobs, [&](std::size_t d) { per_doc[d] = index.scan(corpus[d]); });
  std::vector<OverlapHit> hits;
  for (auto& h : per_doc) std::move(h.begin(), h.end(), std::back_inserter(hits));
  return finish(std::move(hits), summaries.size());
}

OverlapReport overlap_scan_naive(std::span<const TextRecord> corpus, std::span<const TextRecord> summaries,
                                 std::size_t n, std::size_t min_matches) {
  check_ngram_args(n);
  auto grams = [n](const std::string& text) {
    const auto t = overlap_tokens(text);
    std::set<std::string> out;
    for (std::size_t i = 0; i + n <= t.size(); ++i) out.insert(join(t, i, n));
    return out;
  };
  std::vector<std::set<std::string>> summary_grams;
  for (const auto& s : summaries) summary_grams.push_back(grams(s.text));
  std::vector<OverlapHit> hits;
  for (const auto& doc : corpus) {
    const auto dg = grams(doc.text);
    for (std::size_t s = 0; s < summaries.size(); ++s) {
      std::vector<std::string> common;
      std::set_intersection(dg.begin(), dg.end(), summary_grams[s].begin(), summary_grams[s].end(),
                            std::back_inserter(common));
      if (common.size() <= min_matches) continue;
      OverlapHit h{summaries[s].id, doc.id, common.size(), {}};
      for (std::size_t k = 0; k < std::min(kSamples, common.size()); ++k) h.samples.push_back(common[k]);
      hits.push_back(std::move(h));
    }
  }
  return finish(std::move(hits), summaries.size());
}

BigramReport bigram_stats(std::span<const std::pair<std::string, std::string>> ft_bigrams,
                          std::span<const TokenCorpus> corpora) {
  BigramReport report;
  std::vector<std::unordered_map<std::string, std::size_t>> unigram(corpora.size());
  std::vector<std::map<std::pair<std::string, std::string>, std::size_t>> pair_counts(corpora.size());
  std::set<std::pair<std::string, std::string>> wanted(ft_bigrams.begin(), ft_bigrams.end());
  for (std::size_t c = 0; c < corpora.size(); ++c) {
    report.corpora.push_back(corpora[c].name);
    const auto& t = corpora[c].tokens;
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
      ++unigram[c][t[i]];
      std::pair<std::string, std::string> key{t[i], t[i + 1]};
      if (wanted.contains(key)) ++pair_counts[c][key];
    }
  }
  std::map<std::pair<std::string, std::string>, std::size_t> slot;
  for (const auto& bg : ft_bigrams) {
    auto [it, fresh] = slot.emplace(bg, report.bigrams.size());
    if (fresh) {
      BigramStat s;
      s.prev = bg.first;
      s.next = bg.second;
      for (std::size_t c = 0; c < corpora.size(); ++c) {
        const auto u = unigram[c].find(bg.first);
        const std::size_t denom = u == unigram[c].end() ? 0 : u->second;
        const auto p = pair_counts[c].find(bg);
        const std::size_t num = p == pair_counts[c].end() ? 0 : p->second;
        s.zero_denominator.push_back(denom == 0);
        s.frequency.push_back(denom ? static_cast<double>(num) / static_cast<double>(denom) : 0.0);
      }
      report.bigrams.push_back(std::move(s));
    }
    ++report.bigrams[it->second].cases;
  }
  report.aggregate.assign(corpora.size(), 0.0);
  if (!ft_bigrams.empty()) {
    for (const auto& s : report.bigrams) {
      for (std::size_t c = 0; c < corpora.size(); ++c) report.aggregate[c] += s.frequency[c] * static_cast<double>(s.cases);
    }
    for (double& a : report.aggregate) a /= static_cast<double>(ft_bigrams.size());
  }
  return report;
}

}  // namespace sumlens
