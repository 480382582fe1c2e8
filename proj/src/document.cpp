#include "sumlens/document.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <sstream>

#include "sumlens/error.hpp"

namespace sumlens {

namespace {

constexpr std::string_view kTrailingPunct = ".,?!;:";
constexpr std::string_view kTerminalPunct = ".?!";

bool is_trailing_punct(char c) { return kTrailingPunct.find(c) != std::string_view::npos; }

bool all_punct(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), is_trailing_punct);
}

std::vector<std::string> split_word_with(std::string_view word, const std::function<bool(std::string_view)>& known,
                                         const TokenizerOptions& opts) {
  std::size_t stem_end = word.size();
  while (stem_end > 0 && is_trailing_punct(word[stem_end - 1])) --stem_end;
  if (stem_end == 0) return {std::string(word)};
  std::string_view stem = word.substr(0, stem_end);
  std::vector<std::string> out;
  if (stem.size() > opts.max_whole_length && !known(stem)) {
    std::size_t cut = std::min(opts.head_length, stem.size() - 1);
    // never cut inside a UTF-8 sequence
    while (cut < stem.size() && (static_cast<unsigned char>(stem[cut]) & 0xC0) == 0x80) ++cut;
    if (cut == 0 || cut >= stem.size()) {
      out.emplace_back(stem);
    } else {
      out.emplace_back(stem.substr(0, cut));
      out.push_back("#" + std::string(stem.substr(cut)));
    }
  } else {
    out.emplace_back(stem);
  }
  if (stem_end < word.size()) out.emplace_back(word.substr(stem_end));
  return out;
}

std::vector<std::string_view> split_spaces(std::string_view normalized) {
  std::vector<std::string_view> words;
  std::size_t start = 0;
  while (start < normalized.size()) {
    std::size_t end = normalized.find(' ', start);
    if (end == std::string_view::npos) end = normalized.size();
    words.push_back(normalized.substr(start, end - start));
    start = end + 1;
  }
  return words;
}

}  // namespace

Document::Document(DocumentParts parts) : parts_(std::move(parts)) {
  const std::size_t n = parts_.pieces.size();
  if (parts_.piece_text.size() != n) throw ShapeError("piece_text length differs from pieces");
  std::size_t expect = 0;
  piece_word_.assign(n, 0);
  for (std::size_t w = 0; w < parts_.word_spans.size(); ++w) {
    const Span& s = parts_.word_spans[w];
    if (s.begin != expect || s.end <= s.begin) throw ShapeError("word spans must be contiguous and non-empty");
    for (std::size_t p = s.begin; p < s.end && p < n; ++p) piece_word_[p] = w;
    expect = s.end;
  }
  if (expect != n) throw ShapeError("word spans do not cover all pieces");
  expect = 0;
  word_sentence_.assign(parts_.word_spans.size(), 0);
  for (std::size_t si = 0; si < parts_.sentence_spans.size(); ++si) {
    const Span& s = parts_.sentence_spans[si];
    if (s.begin != expect || s.end <= s.begin) throw ShapeError("sentence spans must be contiguous and non-empty");
    for (std::size_t w = s.begin; w < s.end && w < word_sentence_.size(); ++w) word_sentence_[w] = si;
    expect = s.end;
  }
  if (expect != parts_.word_spans.size()) throw ShapeError("sentence spans do not cover all words");
  if (parts_.origin_piece.empty()) {
    parts_.origin_piece.resize(n);
    for (std::size_t i = 0; i < n; ++i) parts_.origin_piece[i] = i;
  }
  if (parts_.origin_sentence.empty()) {
    parts_.origin_sentence.resize(n);
    for (std::size_t i = 0; i < n; ++i) parts_.origin_sentence[i] = word_sentence_[piece_word_[i]];
  }
  if (parts_.origin_piece.size() != n || parts_.origin_sentence.size() != n) {
    throw ShapeError("origin vectors must match the piece count");
  }
}

std::size_t Document::word_of_piece(std::size_t piece) const {
  if (piece >= num_pieces()) throw IndexError("piece " + std::to_string(piece) + " out of range");
  return piece_word_[piece];
}

std::size_t Document::sentence_of_piece(std::size_t piece) const { return word_sentence_[word_of_piece(piece)]; }

Span Document::sentence_pieces(std::size_t sentence) const {
  if (sentence >= num_sentences()) throw IndexError("sentence " + std::to_string(sentence) + " out of range");
  const Span& words = parts_.sentence_spans[sentence];
  return {parts_.word_spans[words.begin].begin, parts_.word_spans[words.end - 1].end};
}

std::string Document::text() const {
  std::string out;
  for (std::size_t w = 0; w < num_words(); ++w) {
    if (w > 0) out.push_back(' ');
    const Span& s = parts_.word_spans[w];
    for (std::size_t p = s.begin; p < s.end; ++p) {
      std::string_view t = parts_.piece_text[p];
      if (p > s.begin && t.size() > 1 && t.front() == '#') t.remove_prefix(1);
      out.append(t);
    }
  }
  return out;
}

Document Document::keep_pieces(std::span<const std::size_t> pieces) const {
  std::vector<char> keep(num_pieces(), 0);
  for (std::size_t p : pieces) {
    if (p >= num_pieces()) throw IndexError("piece " + std::to_string(p) + " out of range");
    keep[p] = 1;
  }
  DocumentParts out;
  out.id = parts_.id;
  std::size_t word_count = 0;
  for (std::size_t si = 0; si < num_sentences(); ++si) {
    const std::size_t sentence_first_word = word_count;
    for (std::size_t w = parts_.sentence_spans[si].begin; w < parts_.sentence_spans[si].end; ++w) {
      const std::size_t word_first_piece = out.pieces.size();
      for (std::size_t p = parts_.word_spans[w].begin; p < parts_.word_spans[w].end; ++p) {
        if (!keep[p]) continue;
        out.pieces.push_back(parts_.pieces[p]);
        out.piece_text.push_back(parts_.piece_text[p]);
        out.origin_piece.push_back(parts_.origin_piece[p]);
        out.origin_sentence.push_back(parts_.origin_sentence[p]);
      }
      if (out.pieces.size() > word_first_piece) {
        out.word_spans.push_back({word_first_piece, out.pieces.size()});
        ++word_count;
      }
    }
    if (word_count > sentence_first_word) out.sentence_spans.push_back({sentence_first_word, word_count});
  }
  Document doc(std::move(out));
  doc.parts_.source_text = doc.text();
  return doc;
}

Document Document::keep_sentences(std::span<const std::size_t> sentences) const {
  std::vector<std::size_t> pieces;
  for (std::size_t s : sentences) {
    Span r = sentence_pieces(s);
    for (std::size_t p = r.begin; p < r.end; ++p) pieces.push_back(p);
  }
  return keep_pieces(pieces);
}

Document Document::drop_sentences(std::span<const std::size_t> sentences) const {
  std::vector<char> drop(num_sentences(), 0);
  for (std::size_t s : sentences) {
    if (s >= num_sentences()) throw IndexError("sentence " + std::to_string(s) + " out of range");
    drop[s] = 1;
  }
  std::vector<std::size_t> keep;
  for (std::size_t s = 0; s < num_sentences(); ++s) {
    if (!drop[s]) keep.push_back(s);
  }
  return keep_sentences(keep);
}

Document Document::with_masked(std::span<const std::size_t> pieces, TokenId mask_id,
                               std::string_view mask_text) const {
  DocumentParts out = parts_;
  for (std::size_t p : pieces) {
    if (p >= num_pieces()) throw IndexError("piece " + std::to_string(p) + " out of range");
    out.pieces[p] = mask_id;
    out.piece_text[p] = std::string(mask_text);
  }
  Document doc(std::move(out));
  doc.parts_.source_text = doc.text();
  return doc;
}

Document Document::with_id(std::string id) const {
  Document doc = *this;
  doc.parts_.id = std::move(id);
  return doc;
}

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
      pending_space = !out.empty();
    } else {
      if (pending_space) out.push_back(' ');
      pending_space = false;
      out.push_back(c);
    }
  }
  return out;
}

std::vector<std::string> split_word(std::string_view word, const Vocab& vocab, const TokenizerOptions& opts) {
  return split_word_with(word, [&](std::string_view s) { return vocab.contains(s); }, opts);
}

Document tokenize(std::string_view text, const Vocab& vocab, std::string id, const TokenizerOptions& opts) {
  const std::string normalized = normalize_whitespace(text);
  if (normalized.empty()) throw EmptyDocument("input text is empty after whitespace normalization");
  DocumentParts parts;
  parts.id = std::move(id);
  parts.source_text = normalized;
  std::size_t sentence_first_word = 0;
  for (std::string_view word : split_spaces(normalized)) {
    const std::size_t first = parts.pieces.size();
    for (auto& piece : split_word(word, vocab, opts)) {
      parts.pieces.push_back(vocab.id(piece));
      parts.piece_text.push_back(std::move(piece));
    }
    parts.word_spans.push_back({first, parts.pieces.size()});
    if (kTerminalPunct.find(word.back()) != std::string_view::npos) {
      parts.sentence_spans.push_back({sentence_first_word, parts.word_spans.size()});
      sentence_first_word = parts.word_spans.size();
    }
  }
  if (sentence_first_word < parts.word_spans.size()) {
    parts.sentence_spans.push_back({sentence_first_word, parts.word_spans.size()});
  }
  return Document(std::move(parts));
}

std::vector<TokenId> tokenize_pieces(std::string_view text, const Vocab& vocab, const TokenizerOptions& opts) {
  std::vector<TokenId> ids;
  const std::string normalized = normalize_whitespace(text);
  if (normalized.empty()) return ids;
  for (std::string_view word : split_spaces(normalized)) {
    for (const auto& piece : split_word(word, vocab, opts)) ids.push_back(vocab.id(piece));
  }
  return ids;
}

std::string detokenize(std::span<const TokenId> pieces, const Vocab& vocab) {
  std::string out;
  const auto& sp = vocab.specials();
  for (TokenId id : pieces) {
    if (id == sp.sos || id == sp.eos || id == sp.pad) continue;
    const std::string& t = vocab.token(id);
    if (!out.empty() && t.size() > 1 && t.front() == '#') {
      out.append(t, 1);
    } else if (!out.empty() && all_punct(t)) {
      out.append(t);
    } else {
      if (!out.empty()) out.push_back(' ');
      out.append(t);
    }
  }
  return out;
}

Vocab build_vocab(std::span<const std::string> texts, const VocabOptions& opts) {
  std::map<std::string, std::size_t, std::less<>> stem_counts;
  std::vector<std::vector<std::string_view>> words_per_text;
  std::vector<std::string> normalized;
  normalized.reserve(texts.size());
  for (const auto& t : texts) normalized.push_back(normalize_whitespace(t));
  for (const auto& t : normalized) {
    if (t.empty()) continue;
    for (std::string_view w : split_spaces(t)) {
      std::size_t e = w.size();
      while (e > 0 && is_trailing_punct(w[e - 1])) --e;
      if (e > 0) ++stem_counts[std::string(w.substr(0, e))];
    }
  }
  auto known_whole = [&](std::string_view stem) {
    auto it = stem_counts.find(stem);
    return it != stem_counts.end() && it->second >= opts.min_whole_count;
  };
  Vocab base = Vocab::specials_only();
  std::vector<std::string> tokens = base.tokens();
  std::unordered_map<std::string, bool> seen;
  for (const auto& t : tokens) seen[t] = true;
  for (const auto& t : normalized) {
    if (t.empty()) continue;
    for (std::string_view w : split_spaces(t)) {
      for (auto& piece : split_word_with(w, known_whole, opts.tokenizer)) {
        if (!seen[piece]) {
          seen[piece] = true;
          tokens.push_back(std::move(piece));
        }
      }
    }
  }
  return Vocab(std::move(tokens), base.specials());
}

std::vector<std::size_t> group_subwords(const Document& doc, std::size_t piece_index, std::size_t window) {
  if (piece_index >= doc.num_pieces()) {
    throw IndexError("piece " + std::to_string(piece_index) + " out of range");
  }
  const std::size_t lo = piece_index >= window ? piece_index - window : 0;
  const std::size_t hi = std::min(doc.num_pieces() - 1, piece_index + window);
  std::vector<std::size_t> out;
  for (std::size_t p = lo; p <= hi; ++p) out.push_back(p);
  return out;
}

}  // namespace sumlens
