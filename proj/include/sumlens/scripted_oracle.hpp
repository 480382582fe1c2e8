#pragma once

#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include "sumlens/backend.hpp"

namespace sumlens {

// All listed constraints must hold for a rule to fire.
struct OracleCondition {
  std::vector<TokenId> tokens;          // each present (unmasked) in the source
  std::vector<TokenId> tokens_absent;   // none present in the source
  std::vector<std::size_t> sentences;   // each original sentence contributes a visible piece
  std::optional<std::size_t> step;      // prefix length - 1
  std::optional<TokenId> prefix_last;
  std::optional<bool> source_empty;

  bool matches(const Document& source, const Prefix& prefix, TokenId mask) const;
};

struct OracleRule {
  OracleCondition when;
  std::map<TokenId, double> probs;  // pinned entries; the remainder follows the default shape
};

// Deterministic rule-driven backend. The first matching rule pins the listed
// probabilities and spreads the remaining mass over the other tokens in
// proportion to the default distribution; no match yields the default.
class ScriptedOracle final : public Backend {
 public:
  ScriptedOracle(Vocab vocab, std::vector<OracleRule> rules, std::vector<double> default_probs);

  // {"rules": [{"when": {...}, "probs": {"tok": p}}], "default": {"tok": p}}.
  // Unlisted default mass is spread uniformly over unlisted tokens.
  static ScriptedOracle from_json_text(std::string_view text, const Vocab& vocab);

  const Vocab& vocab() const override { return vocab_; }
  std::string name() const override { return "scripted"; }

 protected:
  TokenDistribution do_predict(const AblationConfig& config, const Document& doc, const Prefix& prefix) const override;

 private:
  Vocab vocab_;
  std::vector<OracleRule> rules_;
  std::vector<double> default_;
};

// Default distribution with `target` at probability `p` and the rest uniform.
std::vector<double> peaked_distribution(std::size_t size, TokenId target, double p);

}  // namespace sumlens
