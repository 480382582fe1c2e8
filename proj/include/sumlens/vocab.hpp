#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace sumlens {

using TokenId = std::int32_t;

struct SpecialTokens {
  TokenId pad = 0;
  TokenId sos = 1;
  TokenId eos = 2;
  TokenId mask = 3;
  TokenId unk = 4;
};

// Closed-world subword vocabulary. Token strings are unique and the special
// ids are distinct and in range; both are checked on construction.
class Vocab {
 public:
  Vocab() = default;
  Vocab(std::vector<std::string> tokens, SpecialTokens specials);

  // Vocabulary holding only the five special tokens, in the default layout.
  static Vocab specials_only();

  static Vocab load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
  static Vocab parse(std::string_view text);
  std::string serialize() const;

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const SpecialTokens& specials() const { return specials_; }

  std::optional<TokenId> find(std::string_view token) const;
  // Falls back to UNK for out-of-vocabulary strings.
  TokenId id(std::string_view token) const;
  const std::string& token(TokenId id) const;
  bool contains(std::string_view token) const { return find(token).has_value(); }
  bool in_range(TokenId id) const { return id >= 0 && static_cast<std::size_t>(id) < tokens_.size(); }
  bool is_special(TokenId id) const;

  // FNV-1a over the serialized form; stored in checkpoints to pair models with vocabularies.
  std::uint64_t hash() const;

  friend bool operator==(const Vocab& a, const Vocab& b) {
    return a.tokens_ == b.tokens_ && a.specials_.pad == b.specials_.pad && a.specials_.sos == b.specials_.sos &&
           a.specials_.eos == b.specials_.eos && a.specials_.mask == b.specials_.mask &&
           a.specials_.unk == b.specials_.unk;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  SpecialTokens specials_;
};

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 1469598103934665603ULL);
std::string hex64(std::uint64_t value);

}  // namespace sumlens
