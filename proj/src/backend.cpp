#include "sumlens/backend.hpp"

#include "sumlens/error.hpp"

namespace sumlens {

std::string_view to_string(AblationMode mode) {
  switch (mode) {
    case AblationMode::LM_EMPTY: return "LM_EMPTY";
    case AblationMode::S_EMPTY: return "S_EMPTY";
    case AblationMode::S_PART: return "S_PART";
    case AblationMode::S_FULL: return "S_FULL";
  }
  return "?";
}

AblationMode parse_ablation_mode(std::string_view name) {
  if (name == "LM_EMPTY") return AblationMode::LM_EMPTY;
  if (name == "S_EMPTY") return AblationMode::S_EMPTY;
  if (name == "S_PART") return AblationMode::S_PART;
  if (name == "S_FULL") return AblationMode::S_FULL;
  throw ConfigError("unknown ablation mode '" + std::string(name) + "'");
}

Document materialize_source(const AblationConfig& config, const Document& doc) {
  switch (config.mode) {
    case AblationMode::LM_EMPTY:
    case AblationMode::S_EMPTY: return doc.keep_pieces({});
    case AblationMode::S_FULL: return doc;
    case AblationMode::S_PART: return doc.keep_pieces(*config.visible_pieces);
  }
  return doc;
}

TokenDistribution Backend::predict_next(const AblationConfig& config, const Document& doc, const Prefix& prefix) const {
  if (config.mode == AblationMode::S_PART) {
    if (!config.visible_pieces) throw ConfigError("S_PART requires visible_pieces");
    for (std::size_t p : *config.visible_pieces) {
      if (p >= doc.num_pieces()) throw ConfigError("visible piece " + std::to_string(p) + " not in document");
    }
  } else if (config.visible_pieces) {
    throw ConfigError("visible_pieces is only meaningful for S_PART");
  }
  calls_.fetch_add(1);
  TokenDistribution out = do_predict(config, doc, prefix);
  if (out.size() != vocab().size()) throw VocabError("backend returned a distribution of the wrong size");
  return out;
}

GradientPack input_gradients(const Backend& backend, const Document& doc, const Prefix& prefix, TokenId target) {
  const GradientModel* model = backend.gradient_model();
  if (model == nullptr) throw UnsupportedCapability(backend.name() + " does not expose input gradients");
  if (!backend.vocab().in_range(target)) throw VocabError("target id out of range");
  GradientPack pack;
  pack.embeddings = model->piece_embeddings(doc);
  pack.gradients.resize(pack.embeddings.rows(), pack.embeddings.cols());
  model->target_log_prob(pack.embeddings, prefix, target, &pack.gradients);
  return pack;
}

std::vector<double> attention_weights(const Backend& backend, const Document& doc, const Prefix& prefix) {
  const AttentionModel* model = backend.attention_model();
  if (model == nullptr) throw UnsupportedCapability(backend.name() + " does not expose attention");
  return model->attention_weights(doc, prefix);
}

std::vector<double> pool_attention(std::span<const std::vector<double>> head_rows,
                                   std::span<const bool> special_positions) {
  if (head_rows.empty()) throw ShapeError("no attention heads");
  const std::size_t keys = special_positions.size();
  std::vector<double> pooled;
  for (std::size_t k = 0; k < keys; ++k) {
    if (special_positions[k]) continue;
    double sum = 0.0;
    for (const auto& row : head_rows) {
      if (row.size() != keys) throw ShapeError("attention row length mismatch");
      sum += row[k];
    }
    pooled.push_back(sum / static_cast<double>(head_rows.size()));
  }
  double total = 0.0;
  for (double w : pooled) total += w;
  if (total > 0.0) {
    for (double& w : pooled) w /= total;
  }
  return pooled;
}

}  // namespace sumlens
