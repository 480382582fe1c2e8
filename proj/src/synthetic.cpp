#include "sumlens/synthetic.hpp"

#include <random>

#include "sumlens/error.hpp"

namespace sumlens {

namespace {

const std::vector<std::string> kNames = {"anna", "boris", "chen", "dara", "elif", "farid", "greta", "hugo",
                                         "ines", "jonas", "kemal", "lena", "milo", "nadia", "omar", "petra"};
const std::vector<std::string> kVerbs = {"bought", "sold", "found", "lost", "saw", "fixed", "stole"};
const std::vector<std::string> kNouns = {"car", "prize", "boat", "cup", "house", "medal", "horse", "ring",
                                         "game", "title", "lamp", "piano", "bike", "map", "coin", "seat"};

std::string pick(const std::vector<std::string>& pool, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> d(0, pool.size() - 1);
  return pool[d(rng)];
}

std::string frame(const std::string& name, const std::string& noun) {
  return "news : " + name + " won " + noun + " today .";
}

CopyExample make_example(std::mt19937_64& rng, const CopyCorpusOptions& opts, const std::string& id) {
  std::uniform_int_distribution<std::size_t> count(opts.min_sentences, opts.max_sentences);
  const std::size_t m = count(rng);
  std::uniform_int_distribution<std::size_t> key_at(0, m - 1);
  CopyExample ex;
  ex.id = id;
  ex.key_sentence = key_at(rng);
  std::string key_name, key_noun;
  for (std::size_t s = 0; s < m; ++s) {
    const std::string name = pick(kNames, rng);
    const std::string noun = pick(kNouns, rng);
    const std::string verb = s == ex.key_sentence ? "won" : pick(kVerbs, rng);
    if (s == ex.key_sentence) {
      key_name = name;
      key_noun = noun;
    }
    if (s) ex.text += ' ';
    ex.text += name + " " + verb + " " + noun + " .";
  }
  ex.summary = frame(key_name, key_noun);
  return ex;
}

}  // namespace

CopyCorpus make_copy_corpus(const CopyCorpusOptions& opts) {
  if (opts.min_sentences < 1 || opts.max_sentences < opts.min_sentences) {
    throw ConfigError("invalid sentence range for the copy corpus");
  }
  if (opts.train == 0) throw ConfigError("copy corpus needs training examples");
  std::mt19937_64 rng(opts.seed);
  CopyCorpus c;
  for (std::size_t i = 0; i < opts.train; ++i) c.train_raw.push_back(make_example(rng, opts, "train-" + std::to_string(i)));
  for (std::size_t i = 0; i < opts.dev; ++i) c.dev_raw.push_back(make_example(rng, opts, "dev-" + std::to_string(i)));

  // Every filler word appears in the vocabulary regardless of sampling.
  std::vector<std::string> texts;
  for (const auto& pool : {kNames, kVerbs, kNouns}) {
    std::string line;
    for (const auto& w : pool) line += w + " ";
    texts.push_back(line);
  }
  texts.push_back(frame(kNames[0], kNouns[0]));
  c.vocab = build_vocab(texts);

  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (const auto& ex : c.train_raw) {
    Document doc = tokenize(ex.text, c.vocab, ex.id);
    if (coin(rng) < opts.empty_source_rate) {
      // the prior over summaries: random fillers, no source
      doc = doc.keep_pieces({});
      c.train.push_back({doc, tokenize_pieces(frame(pick(kNames, rng), pick(kNouns, rng)), c.vocab)});
    } else {
      c.train.push_back({doc, tokenize_pieces(ex.summary, c.vocab)});
    }
    c.lm_train.push_back({doc.keep_pieces({}), tokenize_pieces(frame(pick(kNames, rng), pick(kNouns, rng)), c.vocab)});
  }
  for (const auto& ex : c.dev_raw) {
    c.dev.push_back({tokenize(ex.text, c.vocab, ex.id), tokenize_pieces(ex.summary, c.vocab)});
    std::vector<bool> copy(c.dev.back().summary.size(), false);
    copy[kCopySlotName] = copy[kCopySlotNoun] = true;
    c.dev_copy_positions.push_back(std::move(copy));
  }
  return c;
}

}  // namespace sumlens
