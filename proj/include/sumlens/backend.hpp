#pragma once

#include <atomic>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "sumlens/distribution.hpp"
#include "sumlens/document.hpp"
#include "sumlens/vocab.hpp"

namespace sumlens {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::RowVectorXd;

// LM_EMPTY: generic LM weights, prefix only. S_EMPTY: summarizer, no source.
// S_PART: summarizer over `visible_pieces`. S_FULL: summarizer over the whole source.
enum class AblationMode { LM_EMPTY, S_EMPTY, S_PART, S_FULL };

std::string_view to_string(AblationMode mode);
AblationMode parse_ablation_mode(std::string_view name);

struct AblationConfig {
  AblationMode mode = AblationMode::S_FULL;
  std::optional<std::vector<std::size_t>> visible_pieces;

  static AblationConfig lm_empty() { return {AblationMode::LM_EMPTY, std::nullopt}; }
  static AblationConfig s_empty() { return {AblationMode::S_EMPTY, std::nullopt}; }
  static AblationConfig s_full() { return {AblationMode::S_FULL, std::nullopt}; }
  static AblationConfig s_part(std::vector<std::size_t> visible) { return {AblationMode::S_PART, std::move(visible)}; }
};

// The source a model actually sees under `config`: empty, the full document, or
// the visible pieces in document order.
Document materialize_source(const AblationConfig& config, const Document& doc);

// Gradients of log P(target) with respect to each source piece's input embedding.
struct GradientPack {
  Matrix gradients;   // one row per source piece
  Matrix embeddings;  // the embedding rows the gradients were taken at
};

// Differentiable access to a model's source embeddings.
class GradientModel {
 public:
  virtual ~GradientModel() = default;
  virtual std::size_t embed_dim() const = 0;
  virtual Matrix piece_embeddings(const Document& source) const = 0;
  virtual RowVector mask_embedding() const = 0;
  // log P(target | prefix, source) with the source given as embedding rows;
  // writes d/d(embeddings) into `grad` when it is non-null.
  virtual double target_log_prob(const Matrix& piece_embeddings, const Prefix& prefix, TokenId target,
                                 Matrix* grad) const = 0;
};

class AttentionModel {
 public:
  virtual ~AttentionModel() = default;
  // Final-layer cross-attention at the last prefix position, head-averaged,
  // special positions dropped and renormalized. One weight per source piece.
  virtual std::vector<double> attention_weights(const Document& source, const Prefix& prefix) const = 0;
};

class Backend {
 public:
  virtual ~Backend() = default;

  virtual const Vocab& vocab() const = 0;
  virtual std::string name() const = 0;

  TokenDistribution predict_next(const AblationConfig& config, const Document& doc, const Prefix& prefix) const;

  virtual const GradientModel* gradient_model() const { return nullptr; }
  virtual const AttentionModel* attention_model() const { return nullptr; }

  // Number of predict_next invocations since construction or the last reset.
  std::size_t call_count() const { return calls_.load(); }
  void reset_call_count() const { calls_.store(0); }

 protected:
  Backend() = default;
  // Copies start with a fresh call counter.
  Backend(const Backend&) {}
  Backend& operator=(const Backend&) { return *this; }

  // `config` has been validated against `doc`.
  virtual TokenDistribution do_predict(const AblationConfig& config, const Document& doc,
                                       const Prefix& prefix) const = 0;

 private:
  mutable std::atomic<std::size_t> calls_{0};
};

GradientPack input_gradients(const Backend& backend, const Document& doc, const Prefix& prefix, TokenId target);
std::vector<double> attention_weights(const Backend& backend, const Document& doc, const Prefix& prefix);

// Mean over heads of one query row of attention probabilities, restricted to
// the non-special key positions and renormalized to sum 1.
std::vector<double> pool_attention(std::span<const std::vector<double>> head_rows,
                                   std::span<const bool> special_positions);

}  // namespace sumlens
