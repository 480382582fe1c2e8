#include "sumlens/distribution.hpp"

#include <algorithm>
#include <cmath>

#include "sumlens/error.hpp"

namespace sumlens {

TokenDistribution::TokenDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw VocabError("distribution over an empty vocabulary");
  double total = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw VocabError("distribution entries must be finite and non-negative");
    total += p;
  }
  if (std::abs(total - 1.0) > kSimplexTolerance) {
    throw VocabError("distribution sums to " + std::to_string(total) + ", expected 1");
  }
}

TokenDistribution TokenDistribution::from_logits(std::span<const double> logits) {
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - top);
    z += p[i];
  }
  for (double& v : p) v /= z;
  return TokenDistribution(std::move(p));
}

TokenDistribution TokenDistribution::uniform(std::size_t size) {
  return TokenDistribution(std::vector<double>(size, 1.0 / static_cast<double>(size)));
}

TokenDistribution TokenDistribution::one_hot(std::size_t size, TokenId id) {
  std::vector<double> p(size, 0.0);
  p.at(static_cast<std::size_t>(id)) = 1.0;
  return TokenDistribution(std::move(p));
}

TokenId TokenDistribution::argmax() const {
  return static_cast<TokenId>(std::max_element(probs_.begin(), probs_.end()) - probs_.begin());
}

bool TokenDistribution::argmax_tied() const {
  const double top = probs_[static_cast<std::size_t>(argmax())];
  return std::count(probs_.begin(), probs_.end(), top) > 1;
}

Prefix::Prefix(std::vector<TokenId> pieces, const Vocab& vocab) : pieces_(std::move(pieces)) {
  if (pieces_.empty() || pieces_.front() != vocab.specials().sos) {
    throw ConfigError("prefix must be non-empty and start with SOS");
  }
  for (TokenId id : pieces_) {
    if (!vocab.in_range(id)) throw VocabError("prefix token id out of range");
  }
}

Prefix Prefix::extended(TokenId next) const {
  Prefix p;
  p.pieces_ = pieces_;
  p.pieces_.push_back(next);
  return p;
}

}  // namespace sumlens
