#include "sumlens/vocab.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "sumlens/error.hpp"

namespace sumlens {

namespace {

constexpr std::string_view kMagic = "#sumlens-vocab 1";

bool parse_special(std::string_view field, std::string_view name, TokenId& out) {
  if (field.substr(0, name.size()) != name || field.size() <= name.size() || field[name.size()] != '=') {
    return false;
  }
  out = static_cast<TokenId>(std::stol(std::string(field.substr(name.size() + 1))));
  return true;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

Vocab::Vocab(std::vector<std::string> tokens, SpecialTokens specials)
    : tokens_(std::move(tokens)), specials_(specials) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty()) throw VocabError("empty token string at id " + std::to_string(i));
    if (tokens_[i].find('\n') != std::string::npos) throw VocabError("token contains a newline");
    auto [it, inserted] = index_.emplace(tokens_[i], static_cast<TokenId>(i));
    if (!inserted) throw VocabError("duplicate token '" + tokens_[i] + "'");
  }
  const TokenId ids[] = {specials_.pad, specials_.sos, specials_.eos, specials_.mask, specials_.unk};
  for (std::size_t i = 0; i < 5; ++i) {
    if (!in_range(ids[i])) throw VocabError("special token id out of range");
    for (std::size_t j = 0; j < i; ++j) {
      if (ids[i] == ids[j]) throw VocabError("special token ids must be distinct");
    }
  }
}

Vocab Vocab::specials_only() {
  return Vocab({"<pad>", "<sos>", "<eos>", "<mask>", "<unk>"}, SpecialTokens{});
}

std::optional<TokenId> Vocab::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocab::id(std::string_view token) const { return find(token).value_or(specials_.unk); }

const std::string& Vocab::token(TokenId id) const {
  if (!in_range(id)) throw VocabError("token id " + std::to_string(id) + " out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

bool Vocab::is_special(TokenId id) const {
  return id == specials_.pad || id == specials_.sos || id == specials_.eos || id == specials_.mask ||
         id == specials_.unk;
}

std::string Vocab::serialize() const {
  std::ostringstream out;
  out << kMagic << '\n'
      << "#special pad=" << specials_.pad << " sos=" << specials_.sos << " eos=" << specials_.eos
      << " mask=" << specials_.mask << " unk=" << specials_.unk << '\n'
      << "#end\n";
  for (const auto& t : tokens_) out << t << '\n';
  return out.str();
}

Vocab Vocab::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != kMagic) throw VocabError("missing vocabulary header");
  SpecialTokens specials;
  bool have_special = false;
  while (std::getline(in, line)) {
    if (line == "#end") break;
    if (line.rfind("#special", 0) == 0) {
      std::istringstream fields(line.substr(8));
      std::string f;
      int seen = 0;
      while (fields >> f) {
        seen += parse_special(f, "pad", specials.pad) || parse_special(f, "sos", specials.sos) ||
                parse_special(f, "eos", specials.eos) || parse_special(f, "mask", specials.mask) ||
                parse_special(f, "unk", specials.unk);
      }
      if (seen != 5) throw VocabError("special block must declare pad, sos, eos, mask, unk");
      have_special = true;
    } else {
      throw VocabError("unexpected header line: " + line);
    }
  }
  if (!have_special) throw VocabError("missing #special block");
  std::vector<std::string> tokens;
  while (std::getline(in, line)) tokens.push_back(line);
  return Vocab(std::move(tokens), specials);
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PathError("cannot open vocabulary " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw PathError("cannot write vocabulary " + path.string());
  out << serialize();
}

std::uint64_t Vocab::hash() const { return fnv1a64(serialize()); }

}  // namespace sumlens
