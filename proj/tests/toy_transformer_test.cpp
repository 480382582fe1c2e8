#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "sumlens/backend.hpp"
#include "sumlens/error.hpp"
#include "sumlens/toy_transformer.hpp"
#include "test_support.hpp"

namespace sumlens {
namespace {

using testing::finite_difference_gradient;
using testing::random_document;
using testing::random_prefix;
using testing::relative_error;
using testing::small_config;
using testing::word_vocab;

ToyTransformerBackend make_backend(std::uint64_t seed, bool lm_only = false) {
  const Vocab vocab = word_vocab(20);
  return ToyTransformerBackend(vocab, ToyTransformer(small_config(seed), vocab.size(), lm_only));
}

TEST(ToyTransformer, InputGradientsMatchCentralDifferences) {
  std::mt19937_64 rng(11);
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    const auto backend = make_backend(100 + trial);
    const Document doc = random_document(backend.vocab(), rng, 2);
    const Prefix prefix = random_prefix(backend.vocab(), rng, 4);
    const TokenId target = static_cast<TokenId>(5 + trial % 15);
    const GradientPack pack = input_gradients(backend, doc, prefix, target);
    ASSERT_EQ(pack.gradients.rows(), static_cast<Eigen::Index>(doc.num_pieces()));
    const Matrix fd = finite_difference_gradient(backend, pack.embeddings, prefix, target, 1e-3);
    EXPECT_LE(relative_error(pack.gradients, fd), 1e-4) << "trial " << trial;
  }
}

// The training path: parameter gradients of a summed cross-entropy loss.
TEST(ToyTransformer, ParameterGradientsMatchCentralDifferences) {
  const Vocab vocab = word_vocab(12);
  ToyTransformer model(small_config(5), vocab.size(), false);
  const std::vector<TokenId> source = {6, 7, 8, 9, 10};
  const std::vector<TokenId> decoder = {vocab.specials().sos, 7, 9};
  const std::vector<TokenId> targets = {7, 9, vocab.specials().eos};

  auto loss = [&](const ToyTransformer& m) {
    const Matrix inputs = m.encoder_inputs(source, vocab.specials().sos, vocab.specials().eos);
    const ForwardResult out = m.forward(&inputs, decoder, false);
    double total = 0.0;
    for (Eigen::Index t = 0; t < out.logits.rows(); ++t) {
      const RowVector row = out.logits.row(t);
      const double top = row.maxCoeff();
      total -= row(targets[static_cast<std::size_t>(t)]) - top - std::log((row.array() - top).exp().sum());
    }
    return total;
  };

  const Matrix inputs = model.encoder_inputs(source, vocab.specials().sos, vocab.specials().eos);
  const ForwardResult out = model.forward(&inputs, decoder, true);
  Matrix d_logits(out.logits.rows(), out.logits.cols());
  for (Eigen::Index t = 0; t < out.logits.rows(); ++t) {
    const RowVector row = out.logits.row(t);
    const RowVector p = (row.array() - row.maxCoeff()).exp();
    d_logits.row(t) = p / p.sum();
    d_logits(t, targets[static_cast<std::size_t>(t)]) -= 1.0;
  }
  std::vector<double> grads(model.num_parameters(), 0.0);
  Matrix d_enc;
  model.backward(*out.trace, d_logits, grads, &d_enc);
  std::vector<TokenId> enc_ids = {vocab.specials().sos};
  enc_ids.insert(enc_ids.end(), source.begin(), source.end());
  enc_ids.push_back(vocab.specials().eos);
  model.scatter_embedding_grad(d_enc, enc_ids, grads);

  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> pick(0, model.num_parameters() - 1);
  Eigen::VectorXd analytic(300), numeric(300);
  for (int i = 0; i < 300; ++i) {
    const std::size_t idx = pick(rng);
    const double keep = model.parameters()[idx];
    const double h = 1e-5;
    model.parameters()[idx] = keep + h;
    const double up = loss(model);
    model.parameters()[idx] = keep - h;
    const double down = loss(model);
    model.parameters()[idx] = keep;
    analytic(i) = grads[idx];
    numeric(i) = (up - down) / (2 * h);
  }
  EXPECT_LE((analytic - numeric).norm() / analytic.norm(), 1e-6);
}

TEST(ToyTransformer, MaskedPieceGradientIsTakenAtTheMaskEmbedding) {
  const auto backend = make_backend(1);
  std::mt19937_64 rng(2);
  const Document doc = random_document(backend.vocab(), rng, 2);
  const std::vector<std::size_t> hide = {1};
  const Document masked = doc.with_masked(hide, backend.vocab().specials().mask, "<mask>");
  const Prefix prefix({backend.vocab().specials().sos, 7}, backend.vocab());
  const GradientPack pack = input_gradients(backend, masked, prefix, 9);
  EXPECT_TRUE(pack.embeddings.row(1).isApprox(backend.mask_embedding()));
  EXPECT_GT(pack.gradients.row(1).norm(), 0.0);
  const Matrix fd = finite_difference_gradient(backend, pack.embeddings, prefix, 9, 1e-3);
  EXPECT_LE(relative_error(pack.gradients.row(1), fd.row(1)), 1e-4);
}

TEST(ToyTransformer, PredictionsAreValidDistributions) {
  const auto backend = make_backend(4);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 10; ++i) {
    const Document doc = random_document(backend.vocab(), rng, 3);
    const Prefix prefix = random_prefix(backend.vocab(), rng, 5);
    for (const auto& cfg : {AblationConfig::lm_empty(), AblationConfig::s_empty(), AblationConfig::s_full(),
                            AblationConfig::s_part({0, 2})}) {
      const auto dist = backend.predict_next(cfg, doc, prefix);
      double total = 0.0;
      for (double p : dist.probs()) total += p;
      EXPECT_NEAR(total, 1.0, 1e-6);
    }
  }
}

TEST(ToyTransformer, PartWithEveryPieceVisibleEqualsFull) {
  const auto backend = make_backend(6);
  std::mt19937_64 rng(8);
  const Document doc = random_document(backend.vocab(), rng, 3);
  const Prefix prefix = random_prefix(backend.vocab(), rng, 3);
  std::vector<std::size_t> all(doc.num_pieces());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const auto part = backend.predict_next(AblationConfig::s_part(all), doc, prefix);
  const auto full = backend.predict_next(AblationConfig::s_full(), doc, prefix);
  for (std::size_t i = 0; i < part.size(); ++i) EXPECT_EQ(part.probs()[i], full.probs()[i]);
}

// Property: without a source the summarizer output cannot depend on the document.
TEST(ToyTransformer, EmptySourceIgnoresDocumentContent) {
  const auto backend = make_backend(9);
  std::mt19937_64 rng(10);
  const Prefix prefix = random_prefix(backend.vocab(), rng, 3);
  const Document first = random_document(backend.vocab(), rng, 3);
  const auto base = backend.predict_next(AblationConfig::s_empty(), first, prefix);
  for (int i = 0; i < 20; ++i) {
    const Document other = random_document(backend.vocab(), rng, 1 + i % 4);
    const auto d = backend.predict_next(AblationConfig::s_empty(), other, prefix);
    for (std::size_t k = 0; k < d.size(); ++k) ASSERT_EQ(d.probs()[k], base.probs()[k]);
  }
}

TEST(ToyTransformer, PartWithoutVisiblePiecesIsAConfigError) {
  const auto backend = make_backend(1);
  std::mt19937_64 rng(1);
  const Document doc = random_document(backend.vocab(), rng, 1);
  const Prefix prefix({backend.vocab().specials().sos}, backend.vocab());
  EXPECT_THROW(backend.predict_next({AblationMode::S_PART, std::nullopt}, doc, prefix), ConfigError);
  EXPECT_THROW(backend.predict_next(AblationConfig::s_part({999}), doc, prefix), ConfigError);
}

TEST(ToyTransformer, AttentionWeightsFormADistributionOverPieces) {
  const auto backend = make_backend(12);
  std::mt19937_64 rng(13);
  const Document doc = random_document(backend.vocab(), rng, 2);
  const Prefix prefix = random_prefix(backend.vocab(), rng, 3);
  const auto w = attention_weights(backend, doc, prefix);
  ASSERT_EQ(w.size(), doc.num_pieces());
  double total = 0.0;
  for (double v : w) {
    EXPECT_GE(v, 0.0);
    total += v;
  }
  EXPECT_NEAR(total, 1.0, 1e-12);

  const std::vector<std::size_t> one = {0};
  const auto single = attention_weights(backend, doc.keep_pieces(one), prefix);
  ASSERT_EQ(single.size(), 1u);
  EXPECT_DOUBLE_EQ(single[0], 1.0);
}

TEST(PoolAttention, HandSetLogitsGiveSoftmaxWeights) {
  // logits (0, ln 3) over two pieces, flanked by special positions with zero mass
  const double e0 = 1.0, e1 = 3.0;
  const std::vector<std::vector<double>> heads = {{0.0, e0 / (e0 + e1), e1 / (e0 + e1), 0.0}};
  const bool special[] = {true, false, false, true};
  const auto w = pool_attention(heads, special);
  ASSERT_EQ(w.size(), 2u);
  EXPECT_NEAR(w[0], 0.25, 1e-15);
  EXPECT_NEAR(w[1], 0.75, 1e-15);

  const std::vector<std::vector<double>> uniform = {{0.1, 0.2, 0.2, 0.2, 0.2, 0.1}, {0.0, 0.25, 0.25, 0.25, 0.25, 0.0}};
  const bool flanked[] = {true, false, false, false, false, true};
  for (double v : pool_attention(uniform, flanked)) EXPECT_NEAR(v, 0.25, 1e-15);
}

TEST(ToyTransformer, SameSeedGivesIdenticalParameters) {
  const Vocab vocab = word_vocab(10);
  ToyTransformer a(small_config(42), vocab.size(), false);
  ToyTransformer b(small_config(42), vocab.size(), false);
  ToyTransformer c(small_config(43), vocab.size(), false);
  EXPECT_TRUE(std::equal(a.parameters().begin(), a.parameters().end(), b.parameters().begin()));
  EXPECT_FALSE(std::equal(a.parameters().begin(), a.parameters().end(), c.parameters().begin()));
}

TEST(ToyTransformer, DecoderOnlyModelIgnoresTheSource) {
  const auto backend = make_backend(3, true);
  std::mt19937_64 rng(4);
  const Prefix prefix = random_prefix(backend.vocab(), rng, 3);
  const auto a = backend.predict_next(AblationConfig::s_full(), random_document(backend.vocab(), rng, 2), prefix);
  const auto b = backend.predict_next(AblationConfig::lm_empty(), random_document(backend.vocab(), rng, 3), prefix);
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(a.probs()[k], b.probs()[k]);
  EXPECT_THROW(attention_weights(backend, random_document(backend.vocab(), rng, 1), prefix), UnsupportedCapability);
}

TEST(ToyModelConfig, Validation) {
  ToyModelConfig cfg;
  cfg.heads = 3;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = ToyModelConfig{};
  cfg.layers = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_NO_THROW(ToyModelConfig{}.validate());
}

}  // namespace
}  // namespace sumlens
