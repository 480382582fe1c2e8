#pragma once

#include <span>
#include <vector>

#include "sumlens/vocab.hpp"

namespace sumlens {

inline constexpr double kSimplexTolerance = 1e-6;

// Normalized next-token distribution over a fixed vocabulary.
class TokenDistribution {
 public:
  TokenDistribution() = default;
  // Throws VocabError unless entries are non-negative and sum to 1 within kSimplexTolerance.
  explicit TokenDistribution(std::vector<double> probs);

  static TokenDistribution from_logits(std::span<const double> logits);
  static TokenDistribution uniform(std::size_t size);
  static TokenDistribution one_hot(std::size_t size, TokenId id);

  std::size_t size() const { return probs_.size(); }
  std::span<const double> probs() const { return probs_; }
  double operator[](TokenId id) const { return probs_.at(static_cast<std::size_t>(id)); }

  // Lowest id wins ties.
  TokenId argmax() const;
  bool argmax_tied() const;

  // 0 for full distributions; K when reconstructed from a top-K wire payload.
  int truncated_top_k() const { return truncated_top_k_; }
  bool residual_spread() const { return residual_spread_; }
  void set_truncation(int top_k, bool residual_spread) {
    truncated_top_k_ = top_k;
    residual_spread_ = residual_spread;
  }

 private:
  std::vector<double> probs_;
  int truncated_top_k_ = 0;
  bool residual_spread_ = false;
};

// Decoder prefix y_<t; always starts with SOS.
class Prefix {
 public:
  Prefix(std::vector<TokenId> pieces, const Vocab& vocab);
  const std::vector<TokenId>& pieces() const { return pieces_; }
  std::size_t size() const { return pieces_.size(); }
  Prefix extended(TokenId next) const;

 private:
  Prefix() = default;
  std::vector<TokenId> pieces_;
};

}  // namespace sumlens
