#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "sumlens/toy_transformer.hpp"

namespace sumlens {

// One (source, reference summary) pair. Summary ids exclude SOS/EOS.
struct TrainingExample {
  Document source;
  std::vector<TokenId> summary;
};

struct TrainOptions {
  std::size_t epochs = 20;
  std::size_t batch_size = 8;
  double learning_rate = 3e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double grad_clip = 5.0;  // global L2 norm; 0 disables
  // Called after every epoch with (epoch, mean token loss).
  std::function<void(std::size_t, double)> on_epoch;
};

struct TrainResult {
  ToyTransformerBackend backend;
  std::vector<double> loss_history;  // mean per-token cross-entropy per epoch
};

// Adam on summed token cross-entropy. With `lm_only` the source is ignored and
// the decoder learns the summaries as plain text. Deterministic given
// cfg.seed; single-threaded.
TrainResult train_toy(std::span<const TrainingExample> corpus, const Vocab& vocab, const ToyModelConfig& cfg,
                      bool lm_only, const TrainOptions& opts = {});

// Mean per-token cross-entropy of `corpus` under `model` (teacher forcing).
double corpus_loss(const ToyTransformer& model, std::span<const TrainingExample> corpus, const Vocab& vocab);

// Greedy argmax decoding of the full model's summary, without SOS/EOS.
std::vector<TokenId> greedy_decode(const Backend& backend, const Document& doc, std::size_t max_steps);

}  // namespace sumlens
