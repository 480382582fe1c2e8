#include "sumlens/scripted_oracle.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "sumlens/error.hpp"

namespace sumlens {

namespace {

TokenId token_of(const nlohmann::json& j, const Vocab& vocab) {
  if (j.is_number_integer()) {
    const auto id = j.get<TokenId>();
    if (!vocab.in_range(id)) throw ConfigError("oracle token id out of range");
    return id;
  }
  const auto s = j.get<std::string>();
  auto id = vocab.find(s);
  if (!id) throw ConfigError("oracle token '" + s + "' not in vocabulary");
  return *id;
}

std::map<TokenId, double> prob_map(const nlohmann::json& j, const Vocab& vocab) {
  std::map<TokenId, double> out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto id = token_of(nlohmann::json(it.key()), vocab);
    const double p = it.value().get<double>();
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("oracle probability outside [0,1]");
    out[id] = p;
  }
  return out;
}

}  // namespace

bool OracleCondition::matches(const Document& source, const Prefix& prefix, TokenId mask) const {
  if (source_empty && *source_empty != source.empty()) return false;
  if (step && *step + 1 != prefix.size()) return false;
  if (prefix_last && *prefix_last != prefix.pieces().back()) return false;
  const auto& ids = source.pieces();
  for (TokenId t : tokens) {
    if (std::find(ids.begin(), ids.end(), t) == ids.end()) return false;
  }
  for (TokenId t : tokens_absent) {
    if (std::find(ids.begin(), ids.end(), t) != ids.end()) return false;
  }
  for (std::size_t s : sentences) {
    bool seen = false;
    for (std::size_t i = 0; i < source.num_pieces() && !seen; ++i) {
      seen = source.origin_sentence()[i] == s && ids[i] != mask;
    }
    if (!seen) return false;
  }
  return true;
}

std::vector<double> peaked_distribution(std::size_t size, TokenId target, double p) {
  std::vector<double> probs(size, size > 1 ? (1.0 - p) / static_cast<double>(size - 1) : 0.0);
  probs.at(static_cast<std::size_t>(target)) = size > 1 ? p : 1.0;
  return probs;
}

ScriptedOracle::ScriptedOracle(Vocab vocab, std::vector<OracleRule> rules, std::vector<double> default_probs)
    : vocab_(std::move(vocab)), rules_(std::move(rules)), default_(std::move(default_probs)) {
  if (default_.size() != vocab_.size()) throw VocabError("oracle default distribution has the wrong size");
  TokenDistribution check(default_);
  for (const auto& r : rules_) {
    double pinned = 0.0;
    for (const auto& [id, p] : r.probs) {
      if (!vocab_.in_range(id)) throw ConfigError("oracle rule token out of range");
      if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("oracle rule probability outside [0,1]");
      pinned += p;
    }
    if (pinned > 1.0 + kSimplexTolerance) throw ConfigError("oracle rule pins more than unit mass");
  }
}

TokenDistribution ScriptedOracle::do_predict(const AblationConfig& config, const Document& doc,
                                             const Prefix& prefix) const {
  const Document source = materialize_source(config, doc);
  for (const auto& rule : rules_) {
    if (!rule.when.matches(source, prefix, vocab_.specials().mask)) continue;
    std::vector<double> out(vocab_.size(), 0.0);
    double pinned = 0.0;
    double free_default = 0.0;
    for (const auto& [id, p] : rule.probs) pinned += p;
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (!rule.probs.contains(static_cast<TokenId>(i))) free_default += default_[i];
    }
    const std::size_t free_count = out.size() - rule.probs.size();
    const double rest = std::max(0.0, 1.0 - pinned);
    for (std::size_t i = 0; i < out.size(); ++i) {
      auto it = rule.probs.find(static_cast<TokenId>(i));
      if (it != rule.probs.end()) {
        out[i] = it->second;
      } else if (free_default > 0.0) {
        out[i] = rest * default_[i] / free_default;
      } else if (free_count > 0) {
        out[i] = rest / static_cast<double>(free_count);
      }
    }
    double total = 0.0;
    for (double v : out) total += v;
    if (std::abs(total - 1.0) > 1e-12) {
      for (double& v : out) v /= total;
    }
    return TokenDistribution(std::move(out));
  }
  return TokenDistribution(default_);
}

ScriptedOracle ScriptedOracle::from_json_text(std::string_view text, const Vocab& vocab) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("oracle JSON: ") + e.what());
  }
  std::vector<OracleRule> rules;
  try {
    for (const auto& r : j.value("rules", nlohmann::json::array())) {
      OracleRule rule;
      const auto& w = r.value("when", nlohmann::json::object());
      for (const auto& t : w.value("tokens", nlohmann::json::array())) rule.when.tokens.push_back(token_of(t, vocab));
      for (const auto& t : w.value("tokens_absent", nlohmann::json::array())) {
        rule.when.tokens_absent.push_back(token_of(t, vocab));
      }
      for (const auto& s : w.value("sentences", nlohmann::json::array())) rule.when.sentences.push_back(s.get<std::size_t>());
      if (w.contains("step")) rule.when.step = w.at("step").get<std::size_t>();
      if (w.contains("prefix_last")) rule.when.prefix_last = token_of(w.at("prefix_last"), vocab);
      if (w.contains("source_empty")) rule.when.source_empty = w.at("source_empty").get<bool>();
      rule.probs = prob_map(r.at("probs"), vocab);
      rules.push_back(std::move(rule));
    }
    std::vector<double> def(vocab.size(), 0.0);
    const auto listed = prob_map(j.value("default", nlohmann::json::object()), vocab);
    double mass = 0.0;
    for (const auto& [id, p] : listed) {
      def[static_cast<std::size_t>(id)] = p;
      mass += p;
    }
    if (mass > 1.0 + kSimplexTolerance) throw ConfigError("oracle default exceeds unit mass");
    const std::size_t unlisted = vocab.size() - listed.size();
    if (unlisted > 0) {
      for (std::size_t i = 0; i < def.size(); ++i) {
        if (!listed.contains(static_cast<TokenId>(i))) def[i] = (1.0 - mass) / static_cast<double>(unlisted);
      }
    } else if (std::abs(mass - 1.0) > kSimplexTolerance) {
      throw ConfigError("oracle default must sum to 1 when every token is listed");
    }
    return ScriptedOracle(vocab, std::move(rules), std::move(def));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("oracle JSON: ") + e.what());
  }
}

}  // namespace sumlens
