#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "sumlens/backend.hpp"

namespace sumlens {

struct ToyModelConfig {
  std::size_t layers = 2;
  std::size_t heads = 2;
  std::size_t embed_dim = 64;
  std::size_t ffn_dim = 128;
  std::size_t max_len = 128;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const ToyModelConfig&, const ToyModelConfig&) = default;
};

class ForwardTrace;

struct ForwardResult {
  Matrix logits;  // one row per decoder position
  // Final decoder layer cross-attention, one (decoder x encoder) matrix per head.
  std::vector<Matrix> cross_attention;
  std::shared_ptr<const ForwardTrace> trace;
};

// Pre-LayerNorm encoder-decoder transformer in double precision with
// sinusoidal positions, GELU feed-forward blocks, and a hand-written backward
// pass. All parameters live in one flat buffer.
class ToyTransformer {
 public:
  ToyTransformer(ToyModelConfig config, std::size_t vocab_size, bool lm_only);

  const ToyModelConfig& config() const { return config_; }
  std::size_t vocab_size() const { return vocab_size_; }
  bool lm_only() const { return lm_only_; }

  std::span<const double> parameters() const { return params_; }
  std::span<double> parameters() { return params_; }
  std::size_t num_parameters() const { return params_.size(); }

  RowVector embedding(TokenId id) const;
  // Token embedding rows (no positions) for SOS + `ids` + EOS.
  Matrix encoder_inputs(std::span<const TokenId> ids, TokenId sos, TokenId eos) const;

  // `encoder_inputs == nullptr` runs the decoder alone (no cross-attention).
  ForwardResult forward(const Matrix* encoder_inputs, std::span<const TokenId> decoder_tokens,
                        bool keep_trace) const;

  // Backpropagates d(objective)/d(logits). Accumulates parameter gradients into
  // `param_grads` when non-empty (decoder-token embedding rows included; encoder
  // rows are returned through `d_encoder_inputs` for the caller to scatter).
  void backward(const ForwardTrace& trace, const Matrix& d_logits, std::span<double> param_grads,
                Matrix* d_encoder_inputs) const;

  // Adds d/d(encoder input rows) into the embedding rows of `ids` in `param_grads`.
  void scatter_embedding_grad(const Matrix& d_rows, std::span<const TokenId> ids, std::span<double> param_grads) const;

 private:
  struct Layout;
  ToyModelConfig config_;
  std::size_t vocab_size_;
  bool lm_only_;
  std::vector<double> params_;
  std::shared_ptr<const Layout> layout_;
};

// Backend over a trained (or freshly initialized) toy transformer. Supports
// every capability: prediction, input gradients, and attention.
class ToyTransformerBackend final : public Backend, public GradientModel, public AttentionModel {
 public:
  ToyTransformerBackend(Vocab vocab, ToyTransformer model);

  const Vocab& vocab() const override { return vocab_; }
  std::string name() const override { return model_.lm_only() ? "toy-lm" : "toy-sum"; }
  const GradientModel* gradient_model() const override { return this; }
  const AttentionModel* attention_model() const override { return this; }

  const ToyTransformer& model() const { return model_; }

  std::size_t embed_dim() const override { return model_.config().embed_dim; }
  Matrix piece_embeddings(const Document& source) const override;
  RowVector mask_embedding() const override;
  double target_log_prob(const Matrix& piece_embeddings, const Prefix& prefix, TokenId target,
                         Matrix* grad) const override;
  std::vector<double> attention_weights(const Document& source, const Prefix& prefix) const override;

 protected:
  TokenDistribution do_predict(const AblationConfig& config, const Document& doc, const Prefix& prefix) const override;

 private:
  Matrix wrap_source(const Matrix& piece_embeddings) const;
  void check_lengths(std::size_t source_pieces, std::size_t prefix_len) const;

  Vocab vocab_;
  ToyTransformer model_;
};

}  // namespace sumlens
