#include <gtest/gtest.h>

#include <filesystem>

#include "sumlens/checkpoint.hpp"
#include "sumlens/error.hpp"
#include "sumlens/synthetic.hpp"
#include "sumlens/trainer.hpp"
#include "test_support.hpp"

namespace sumlens {
namespace {

CopyCorpus tiny_corpus() {
  CopyCorpusOptions opts;
  opts.train = 60;
  opts.dev = 5;
  opts.seed = 3;
  return make_copy_corpus(opts);
}

TrainOptions quick(std::size_t epochs) {
  TrainOptions o;
  o.epochs = epochs;
  o.learning_rate = 3e-3;
  return o;
}

TEST(CopyCorpus, SummaryCopiesTheKeySentence) {
  const CopyCorpus c = tiny_corpus();
  ASSERT_EQ(c.dev.size(), 5u);
  for (std::size_t i = 0; i < c.dev.size(); ++i) {
    const auto& raw = c.dev_raw[i];
    const Document& doc = c.dev[i].source;
    const Span key = doc.sentence_pieces(raw.key_sentence);
    EXPECT_EQ(c.vocab.token(doc.pieces()[key.begin + 1]), "won");
    EXPECT_EQ(c.dev[i].summary[kCopySlotName], doc.pieces()[key.begin]);
    EXPECT_EQ(c.dev[i].summary[kCopySlotNoun], doc.pieces()[key.begin + 2]);
  }
  EXPECT_EQ(make_copy_corpus({.train = 60, .dev = 5, .seed = 3}).dev_raw[2].text, c.dev_raw[2].text);
}

TEST(Trainer, SameSeedGivesBitIdenticalParameters) {
  const CopyCorpus c = tiny_corpus();
  const auto cfg = testing::small_config(1);
  const auto a = train_toy(c.train, c.vocab, cfg, false, quick(2));
  const auto b = train_toy(c.train, c.vocab, cfg, false, quick(2));
  const auto pa = a.backend.model().parameters();
  const auto pb = b.backend.model().parameters();
  EXPECT_TRUE(std::equal(pa.begin(), pa.end(), pb.begin()));
  EXPECT_EQ(a.loss_history, b.loss_history);
}

TEST(Trainer, LossDecreases) {
  const CopyCorpus c = tiny_corpus();
  const auto r = train_toy(c.train, c.vocab, testing::small_config(2), false, quick(6));
  ASSERT_EQ(r.loss_history.size(), 6u);
  EXPECT_LT(r.loss_history.back(), r.loss_history.front());
  const auto lm = train_toy(c.lm_train, c.vocab, testing::small_config(2), true, quick(6));
  EXPECT_LT(lm.loss_history.back(), lm.loss_history.front());
  EXPECT_EQ(lm.backend.name(), "toy-lm");
}

TEST(Trainer, RejectsEmptyCorpusAndForeignTokens) {
  const Vocab vocab = testing::word_vocab(4);
  EXPECT_THROW(train_toy({}, vocab, testing::small_config(0), false), VocabError);
  std::mt19937_64 rng(1);
  std::vector<TrainingExample> bad = {{testing::random_document(vocab, rng, 1), {999}}};
  EXPECT_THROW(train_toy(bad, vocab, testing::small_config(0), false), VocabError);
}

TEST(Trainer, GreedyDecodeStopsAtEos) {
  const CopyCorpus c = tiny_corpus();
  const auto r = train_toy(c.train, c.vocab, testing::small_config(4), false, quick(8));
  const auto out = greedy_decode(r.backend, c.dev[0].source, 20);
  EXPECT_LE(out.size(), 20u);
  for (TokenId id : out) EXPECT_NE(id, c.vocab.specials().eos);
  // the template opening is learned quickly
  ASSERT_FALSE(out.empty());
  EXPECT_EQ(c.vocab.token(out[0]), "news");
}

TEST(Checkpoint, RoundTripPreservesPredictions) {
  const CopyCorpus c = tiny_corpus();
  const auto r = train_toy(c.train, c.vocab, testing::small_config(5), false, quick(1));
  const auto path = std::filesystem::temp_directory_path() / "sumlens_ckpt_test.bin";
  save_checkpoint(r.backend, path);
  const auto back = load_checkpoint(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.vocab(), r.backend.vocab());
  EXPECT_EQ(back.model().config(), r.backend.model().config());
  const Prefix prefix({c.vocab.specials().sos}, c.vocab);
  const auto a = r.backend.predict_next(AblationConfig::s_full(), c.dev[0].source, prefix);
  const auto b = back.predict_next(AblationConfig::s_full(), c.dev[0].source, prefix);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.probs()[i], b.probs()[i]);
  EXPECT_EQ(serialize_checkpoint(back), serialize_checkpoint(r.backend));
}

TEST(Checkpoint, RejectsCorruptInput) {
  const Vocab vocab = testing::word_vocab(3);
  const ToyTransformerBackend backend(vocab, ToyTransformer(testing::small_config(0), vocab.size(), false));
  std::string bytes = serialize_checkpoint(backend);
  EXPECT_THROW(parse_checkpoint("nope"), DataError);
  EXPECT_THROW(parse_checkpoint(bytes.substr(0, bytes.size() - 8)), DataError);
  bytes[4] = 9;  // version
  EXPECT_THROW(parse_checkpoint(bytes), DataError);
  EXPECT_THROW(load_checkpoint("/nonexistent/ckpt.bin"), PathError);
}

}  // namespace
}  // namespace sumlens
