#include "sumlens/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "sumlens/error.hpp"

namespace sumlens {

namespace {

void check_example(const TrainingExample& ex, const Vocab& vocab) {
  if (ex.summary.empty()) throw VocabError("training example with an empty summary");
  for (TokenId id : ex.source.pieces()) {
    if (!vocab.in_range(id)) throw VocabError("source piece outside the vocabulary");
  }
  for (TokenId id : ex.summary) {
    if (!vocab.in_range(id)) throw VocabError("summary piece outside the vocabulary");
  }
}

// Loss and, when `grads` is non-empty, accumulated parameter gradients.
double example_loss(const ToyTransformer& model, const TrainingExample& ex, const Vocab& vocab,
                    std::span<double> grads) {
  const auto& sp = vocab.specials();
  std::vector<TokenId> dec = {sp.sos};
  dec.insert(dec.end(), ex.summary.begin(), ex.summary.end());
  std::vector<TokenId> targets(ex.summary.begin(), ex.summary.end());
  targets.push_back(sp.eos);

  std::vector<TokenId> enc_ids;
  Matrix inputs;
  if (!model.lm_only()) {
    enc_ids.push_back(sp.sos);
    enc_ids.insert(enc_ids.end(), ex.source.pieces().begin(), ex.source.pieces().end());
    enc_ids.push_back(sp.eos);
    inputs = model.encoder_inputs(ex.source.pieces(), sp.sos, sp.eos);
  }
  const bool train = !grads.empty();
  const ForwardResult out = model.forward(model.lm_only() ? nullptr : &inputs, dec, train);

  double loss = 0.0;
  Matrix d_logits(out.logits.rows(), out.logits.cols());
  for (Eigen::Index t = 0; t < out.logits.rows(); ++t) {
    const RowVector row = out.logits.row(t);
    const double top = row.maxCoeff();
    const RowVector e = (row.array() - top).exp();
    const double z = e.sum();
    const auto y = targets[static_cast<std::size_t>(t)];
    loss -= row(y) - top - std::log(z);
    d_logits.row(t) = e / z;
    d_logits(t, y) -= 1.0;
  }
  if (train) {
    Matrix d_enc;
    model.backward(*out.trace, d_logits, grads, model.lm_only() ? nullptr : &d_enc);
    if (!model.lm_only()) model.scatter_embedding_grad(d_enc, enc_ids, grads);
  }
  return loss;
}

}  // namespace

double corpus_loss(const ToyTransformer& model, std::span<const TrainingExample> corpus, const Vocab& vocab) {
  double total = 0.0;
  std::size_t tokens = 0;
  for (const auto& ex : corpus) {
    total += example_loss(model, ex, vocab, {});
    tokens += ex.summary.size() + 1;
  }
  return tokens ? total / static_cast<double>(tokens) : 0.0;
}

TrainResult train_toy(std::span<const TrainingExample> corpus, const Vocab& vocab, const ToyModelConfig& cfg,
                      bool lm_only, const TrainOptions& opts) {
  if (corpus.empty()) throw VocabError("empty training corpus");
  if (opts.batch_size == 0) throw ConfigError("batch_size must be positive");
  for (const auto& ex : corpus) check_example(ex, vocab);

  ToyTransformer model(cfg, vocab.size(), lm_only);
  const std::size_t n = model.num_parameters();
  std::vector<double> grads(n), m(n, 0.0), v(n, 0.0);
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

  std::vector<double> history;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    std::size_t epoch_tokens = 0;
    for (std::size_t start = 0; start < order.size(); start += opts.batch_size) {
      const std::size_t end = std::min(order.size(), start + opts.batch_size);
      std::fill(grads.begin(), grads.end(), 0.0);
      std::size_t batch_tokens = 0;
      for (std::size_t k = start; k < end; ++k) {
        const auto& ex = corpus[order[k]];
        epoch_loss += example_loss(model, ex, vocab, grads);
        batch_tokens += ex.summary.size() + 1;
      }
      epoch_tokens += batch_tokens;
      const double scale = 1.0 / static_cast<double>(batch_tokens);
      double norm2 = 0.0;
      for (double& g : grads) {
        g *= scale;
        norm2 += g * g;
      }
      const double norm = std::sqrt(norm2);
      const double clip = opts.grad_clip > 0.0 && norm > opts.grad_clip ? opts.grad_clip / norm : 1.0;

      ++step;
      const double c1 = 1.0 - std::pow(opts.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(opts.beta2, static_cast<double>(step));
      auto params = model.parameters();
      for (std::size_t i = 0; i < n; ++i) {
        const double g = grads[i] * clip;
        m[i] = opts.beta1 * m[i] + (1.0 - opts.beta1) * g;
        v[i] = opts.beta2 * v[i] + (1.0 - opts.beta2) * g * g;
        params[i] -= opts.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + opts.epsilon);
      }
    }
    history.push_back(epoch_loss / static_cast<double>(epoch_tokens));
    if (opts.on_epoch) opts.on_epoch(epoch, history.back());
  }
  return {ToyTransformerBackend(vocab, std::move(model)), std::move(history)};
}

std::vector<TokenId> greedy_decode(const Backend& backend, const Document& doc, std::size_t max_steps) {
  const auto& sp = backend.vocab().specials();
  Prefix prefix({sp.sos}, backend.vocab());
  std::vector<TokenId> out;
  for (std::size_t t = 0; t < max_steps; ++t) {
    const TokenId next = backend.predict_next(AblationConfig::s_full(), doc, prefix).argmax();
    if (next == sp.eos) break;
    out.push_back(next);
    prefix = prefix.extended(next);
  }
  return out;
}

}  // namespace sumlens
