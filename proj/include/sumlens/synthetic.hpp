#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sumlens/trainer.hpp"

namespace sumlens {

// Templated copy task. Sources are 3-5 sentences "<name> <verb> <noun> ." with
// exactly one sentence using the verb "won"; the summary is
// "news : <name> won <noun> today ." copying the name and noun of that sentence.
struct CopyCorpusOptions {
  std::size_t train = 2000;
  std::size_t dev = 100;
  std::size_t min_sentences = 3;
  std::size_t max_sentences = 5;
  // Fraction of summarizer training pairs shown with an empty source, so the
  // S_EMPTY configuration sees in-distribution inputs.
  double empty_source_rate = 0.1;
  std::uint64_t seed = 1;
};

struct CopyExample {
  std::string id;
  std::string text;
  std::string summary;
  std::size_t key_sentence = 0;  // the "won" sentence
};

struct CopyCorpus {
  Vocab vocab;
  std::vector<CopyExample> train_raw;
  std::vector<CopyExample> dev_raw;
  std::vector<TrainingExample> train;     // summarizer pairs (some with empty sources)
  std::vector<TrainingExample> lm_train;  // template frames with random fillers, decoder only
  std::vector<TrainingExample> dev;
  // Per dev summary position: true where the token is copied from the source.
  std::vector<std::vector<bool>> dev_copy_positions;
};

CopyCorpus make_copy_corpus(const CopyCorpusOptions& opts = {});

// The summary template with copy slots at positions 2 and 4.
inline constexpr std::size_t kCopySlotName = 2;
inline constexpr std::size_t kCopySlotNoun = 4;

}  // namespace sumlens
