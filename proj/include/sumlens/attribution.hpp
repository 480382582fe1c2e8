#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sumlens/backend.hpp"

namespace sumlens {

enum class Method { RANDOM, LEAD, OCCLUSION, ATTENTION, INPGRAD, INTGRAD };

std::string_view to_string(Method method);
Method parse_method(std::string_view name);
const std::vector<Method>& all_methods();

// One score per source piece for a fixed (prefix, target) decision.
struct AttributionVector {
  std::vector<double> scores;
  Method method = Method::RANDOM;
  std::string doc_id;
  std::size_t step = 0;
  TokenId target = 0;
  // Set by two_stage: the sentences the method ran on, in document order.
  std::optional<std::vector<std::size_t>> preselected_sentences;
  bool k_clipped = false;
};

struct SentenceAttribution {
  std::vector<double> scores;
  Method method = Method::RANDOM;
};

struct AttributionOptions {
  std::size_t ig_steps = 50;
  std::size_t occlusion_batch = 100;
  std::uint64_t seed = 0;  // RANDOM only
  std::size_t jobs = 1;
};

// Piece indices by descending score; lower index first on ties; −∞ last.
std::vector<std::size_t> ranking(std::span<const double> scores);

// α_i = P_full(target) − P(target | piece i replaced by MASK), masked variants
// evaluated in batches.
AttributionVector occlusion_token(const Backend& backend, const Document& doc, const Prefix& prefix, TokenId target,
                                  const AttributionOptions& opts = {});
// Reference implementation: one fresh full/masked pair per piece.
AttributionVector occlusion_token_naive(const Backend& backend, const Document& doc, const Prefix& prefix,
                                        TokenId target);

// score_i = P_full(target) − P(target | sentence i deleted).
SentenceAttribution occlusion_sentence(const Backend& backend, const Document& doc, const Prefix& prefix,
                                       TokenId target);

AttributionVector attention_attr(const Backend& backend, const Document& doc, const Prefix& prefix);

// α_i = ∇_{x_i} log P(target) · x_i
AttributionVector input_gradient_attr(const Backend& backend, const Document& doc, const Prefix& prefix,
                                      TokenId target);

// Right-point Riemann sum of the path integral from `baseline` (default: every
// row the MASK embedding) to the source embeddings, r steps.
AttributionVector integrated_gradients(const Backend& backend, const Document& doc, const Prefix& prefix,
                                       TokenId target, std::size_t steps = 50,
                                       const std::optional<Matrix>& baseline = std::nullopt, std::size_t jobs = 1);

// RANDOM: a seeded random permutation of 0..n−1; LEAD: n − i.
AttributionVector baseline_attr(Method kind, const Document& doc, std::uint64_t seed);

SentenceAttribution aggregate_to_sentences(const AttributionVector& attr, const Document& doc);

// Runs any method by tag.
AttributionVector attribute(Method method, const Backend& backend, const Document& doc, const Prefix& prefix,
                            TokenId target, const AttributionOptions& opts = {});

// Probes every sentence, keeps the top-k by P_part(target), and runs `method` on
// their concatenation only; other pieces score −∞.
AttributionVector two_stage(const Backend& backend, const Document& doc, const Prefix& prefix, TokenId target,
                            Method method, std::size_t k = 2, const AttributionOptions& opts = {});

}  // namespace sumlens
