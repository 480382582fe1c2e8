#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sumlens/vocab.hpp"

namespace sumlens {

// Half-open index range.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
  friend bool operator==(const Span&, const Span&) = default;
};

// Raw parts of a Document; validated by the Document constructor.
struct DocumentParts {
  std::string id;
  std::vector<TokenId> pieces;
  std::vector<std::string> piece_text;
  std::vector<Span> word_spans;      // ranges of pieces
  std::vector<Span> sentence_spans;  // ranges of words
  std::string source_text;
  // Index of each piece in the document this one was derived from, and that
  // piece's sentence there. Empty means identity.
  std::vector<std::size_t> origin_piece;
  std::vector<std::size_t> origin_sentence;
};

// Subword pieces grouped into words grouped into sentences. Immutable; every
// ablation produces a new Document that remembers where its pieces came from.
class Document {
 public:
  Document() = default;
  explicit Document(DocumentParts parts);

  const std::string& id() const { return parts_.id; }
  const std::vector<TokenId>& pieces() const { return parts_.pieces; }
  const std::vector<std::string>& piece_text() const { return parts_.piece_text; }
  const std::vector<Span>& word_spans() const { return parts_.word_spans; }
  const std::vector<Span>& sentence_spans() const { return parts_.sentence_spans; }
  const std::string& source_text() const { return parts_.source_text; }
  const std::vector<std::size_t>& origin_piece() const { return parts_.origin_piece; }
  const std::vector<std::size_t>& origin_sentence() const { return parts_.origin_sentence; }

  std::size_t num_pieces() const { return parts_.pieces.size(); }
  std::size_t num_words() const { return parts_.word_spans.size(); }
  std::size_t num_sentences() const { return parts_.sentence_spans.size(); }
  bool empty() const { return parts_.pieces.empty(); }

  std::size_t word_of_piece(std::size_t piece) const;
  std::size_t sentence_of_piece(std::size_t piece) const;
  Span sentence_pieces(std::size_t sentence) const;

  // Whitespace-normalized text rebuilt from the pieces.
  std::string text() const;

  // Keeps the listed pieces (any order, duplicates ignored) in document order.
  Document keep_pieces(std::span<const std::size_t> pieces) const;
  Document keep_sentences(std::span<const std::size_t> sentences) const;
  Document drop_sentences(std::span<const std::size_t> sentences) const;
  // Replaces the listed pieces by `mask_id`; structure is unchanged.
  Document with_masked(std::span<const std::size_t> pieces, TokenId mask_id, std::string_view mask_text) const;
  Document with_id(std::string id) const;

 private:
  DocumentParts parts_;
  std::vector<std::size_t> piece_word_;
  std::vector<std::size_t> word_sentence_;
};

struct TokenizerOptions {
  // Stems longer than this are split in two unless the vocabulary knows them whole.
  std::size_t max_whole_length = 6;
  std::size_t head_length = 3;
};

std::string normalize_whitespace(std::string_view text);

// Splits one whitespace word into surface pieces ("Burberry," -> "Bur", "#berry", ",").
std::vector<std::string> split_word(std::string_view word, const Vocab& vocab, const TokenizerOptions& opts = {});

Document tokenize(std::string_view text, const Vocab& vocab, std::string id = {}, const TokenizerOptions& opts = {});

// Tokenizes a summary into piece ids without sentence structure.
std::vector<TokenId> tokenize_pieces(std::string_view text, const Vocab& vocab, const TokenizerOptions& opts = {});

// Renders pieces (e.g. a decoded summary) back to text.
std::string detokenize(std::span<const TokenId> pieces, const Vocab& vocab);

struct VocabOptions {
  // Long stems seen at least this often keep a whole-word entry.
  std::size_t min_whole_count = 2;
  TokenizerOptions tokenizer;
};

// Closed-world vocabulary over the pieces of `texts`, specials first.
Vocab build_vocab(std::span<const std::string> texts, const VocabOptions& opts = {});

// The seed piece plus every piece within `window` positions of it, clipped
// to the document; ascending.
std::vector<std::size_t> group_subwords(const Document& doc, std::size_t piece_index, std::size_t window);

}  // namespace sumlens
