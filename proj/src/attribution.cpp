#include "sumlens/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "sumlens/ablation_map.hpp"
#include "sumlens/error.hpp"
#include "sumlens/parallel.hpp"

namespace sumlens {

namespace {

constexpr std::string_view kMaskText = "<mask>";

AttributionVector tagged(Method method, const Document& doc, const Prefix& prefix, TokenId target) {
  AttributionVector a;
  a.method = method;
  a.doc_id = doc.id();
  a.step = prefix.size() - 1;
  a.target = target;
  return a;
}

const GradientModel& gradients_of(const Backend& backend) {
  const GradientModel* g = backend.gradient_model();
  if (g == nullptr) throw UnsupportedCapability(backend.name() + " does not expose input gradients");
  return *g;
}

double p_masked(const Backend& backend, const Document& doc, const Prefix& prefix, TokenId target, std::size_t piece) {
  const std::size_t one[] = {piece};
  return backend.predict_next(AblationConfig::s_full(), doc.with_masked(one, backend.vocab().specials().mask, kMaskText),
                              prefix)[target];
}

}  // namespace

std::string_view to_string(Method method) {
  switch (method) {
    case Method::RANDOM: return "random";
    case Method::LEAD: return "lead";
    case Method::OCCLUSION: return "occlusion";
    case Method::ATTENTION: return "attention";
    case Method::INPGRAD: return "inpgrad";
    case Method::INTGRAD: return "intgrad";
  }
  return "random";
}

const std::vector<Method>& all_methods() {
  static const std::vector<Method> m = {Method::RANDOM,    Method::LEAD,    Method::OCCLUSION,
                                        Method::ATTENTION, Method::INPGRAD, Method::INTGRAD};
  return m;
}

Method parse_method(std::string_view name) {
  for (Method m : all_methods()) {
    if (to_string(m) == name) return m;
  }
  throw ConfigError("unknown attribution method '" + std::string(name) + "'");
}

std::vector<std::size_t> ranking(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

AttributionVector occlusion_token(const Backend& backend, const Document& doc, const Prefix& prefix, TokenId target,
                                  const AttributionOptions& opts) {
  if (opts.occlusion_batch == 0) throw ConfigError("occlusion batch size must be positive");
  AttributionVector a = tagged(Method::OCCLUSION, doc, prefix, target);
  const double full = backend.predict_next(AblationConfig::s_full(), doc, prefix)[target];
  const std::size_t n = doc.num_pieces();
  a.scores.resize(n);
  const TokenId mask = backend.vocab().specials().mask;
  for (std::size_t start = 0; start < n; start += opts.occlusion_batch) {
    const std::size_t count = std::min(opts.occlusion_batch, n - start);
    std::vector<Document> batch;
    batch.reserve(count);
    for (std::size_t i = start; i < start + count; ++i) {
      const std::size_t one[] = {i};
      batch.push_back(doc.with_masked(one, mask, kMaskText));
    }
    parallel_for(count, opts.jobs, [&](std::size_t j) {
      a.scores[start + j] = full - backend.predict_next(AblationConfig::s_full(), batch[j], prefix)[target];
    });
  }
  return a;
}

AttributionVector occlusion_token_naive(const Backend& backend, const Document& doc, const Prefix& prefix,
                                        TokenId target) {
  AttributionVector a = tagged(Method::OCCLUSION, doc, prefix, target);
  for (std::size_t i = 0; i < doc.num_pieces(); ++i) {
    const double full = backend.predict_next(AblationConfig::s_full(), doc, prefix)[target];
    a.scores.push_back(full - p_masked(backend, doc, prefix, target, i));
  }
  return a;
}

SentenceAttribution occlusion_sentence(const Backend& backend, const Document& doc, const Prefix& prefix,
                                       TokenId target) {
  if (doc.num_sentences() == 0) throw EmptyDocument("sentence occlusion needs at least one sentence");
  SentenceAttribution s;
  s.method = Method::OCCLUSION;
  const double full = backend.predict_next(AblationConfig::s_full(), doc, prefix)[target];
  for (std::size_t i = 0; i < doc.num_sentences(); ++i) {
    double without;
    if (doc.num_sentences() == 1) {
      without = backend.predict_next(AblationConfig::s_empty(), doc, prefix)[target];
    } else {
      const std::size_t one[] = {i};
      without = backend.predict_next(AblationConfig::s_full(), doc.drop_sentences(one), prefix)[target];
    }
    s.scores.push_back(full - without);
  }
  return s;
}

AttributionVector attention_attr(const Backend& backend, const Document& doc, const Prefix& prefix) {
  AttributionVector a = tagged(Method::ATTENTION, doc, prefix, 0);
  a.scores = attention_weights(backend, doc, prefix);
  return a;
}

AttributionVector input_gradient_attr(const Backend& backend, const Document& doc, const Prefix& prefix,
                                      TokenId target) {
  AttributionVector a = tagged(Method::INPGRAD, doc, prefix, target);
  const GradientPack pack = input_gradients(backend, doc, prefix, target);
  a.scores.resize(doc.num_pieces());
  for (Eigen::Index i = 0; i < pack.gradients.rows(); ++i) {
    a.scores[static_cast<std::size_t>(i)] = pack.gradients.row(i).dot(pack.embeddings.row(i));
  }
  return a;
}

AttributionVector integrated_gradients(const Backend& backend, const Document& doc, const Prefix& prefix,
                                       TokenId target, std::size_t steps, const std::optional<Matrix>& baseline,
                                       std::size_t jobs) {
  if (steps < 1) throw ConfigError("integrated gradients needs at least one step");
  const GradientModel& model = gradients_of(backend);
  if (!backend.vocab().in_range(target)) throw VocabError("target id out of range");
  AttributionVector a = tagged(Method::INTGRAD, doc, prefix, target);
  const Matrix x = model.piece_embeddings(doc);
  Matrix b;
  if (baseline) {
    if (baseline->rows() != x.rows() || baseline->cols() != x.cols()) throw ShapeError("baseline shape mismatch");
    b = *baseline;
  } else {
    b = model.mask_embedding().replicate(x.rows(), 1);
  }
  const Matrix delta = x - b;
  std::vector<Matrix> grads(steps);
  parallel_for(steps, jobs, [&](std::size_t k) {
    const double alpha = static_cast<double>(k + 1) / static_cast<double>(steps);
    model.target_log_prob(b + alpha * delta, prefix, target, &grads[k]);
  });
  Matrix total = Matrix::Zero(x.rows(), x.cols());
  for (const Matrix& g : grads) total += g;
  total /= static_cast<double>(steps);
  a.scores.resize(doc.num_pieces());
  for (Eigen::Index i = 0; i < x.rows(); ++i) a.scores[static_cast<std::size_t>(i)] = delta.row(i).dot(total.row(i));
  return a;
}

AttributionVector baseline_attr(Method kind, const Document& doc, std::uint64_t seed) {
  AttributionVector a;
  a.method = kind;
  a.doc_id = doc.id();
  const std::size_t n = doc.num_pieces();
  a.scores.resize(n);
  if (kind == Method::LEAD) {
    for (std::size_t i = 0; i < n; ++i) a.scores[i] = static_cast<double>(n - i);
  } else if (kind == Method::RANDOM) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t i = 0; i < n; ++i) a.scores[i] = static_cast<double>(perm[i]);
  } else {
    throw ConfigError("baseline_attr only handles random and lead");
  }
  return a;
}

SentenceAttribution aggregate_to_sentences(const AttributionVector& attr, const Document& doc) {
  if (attr.scores.size() != doc.num_pieces()) throw ShapeError("attribution length does not match the document");
  SentenceAttribution s;
  s.method = attr.method;
  for (std::size_t i = 0; i < doc.num_sentences(); ++i) {
    const Span span = doc.sentence_pieces(i);
    double total = 0.0;
    for (std::size_t p = span.begin; p < span.end; ++p) total += attr.scores[p];
    s.scores.push_back(total / static_cast<double>(span.size()));
  }
  return s;
}

AttributionVector attribute(Method method, const Backend& backend, const Document& doc, const Prefix& prefix,
                            TokenId target, const AttributionOptions& opts) {
  AttributionVector a;
  switch (method) {
    case Method::RANDOM:
    case Method::LEAD: a = baseline_attr(method, doc, opts.seed); break;
    case Method::OCCLUSION: a = occlusion_token(backend, doc, prefix, target, opts); break;
    case Method::ATTENTION: a = attention_attr(backend, doc, prefix); break;
    case Method::INPGRAD: a = input_gradient_attr(backend, doc, prefix, target); break;
    case Method::INTGRAD: a = integrated_gradients(backend, doc, prefix, target, opts.ig_steps, std::nullopt, opts.jobs); break;
  }
  a.doc_id = doc.id();
  a.step = prefix.size() - 1;
  a.target = target;
  return a;
}

AttributionVector two_stage(const Backend& backend, const Document& doc, const Prefix& prefix, TokenId target,
                            Method method, std::size_t k, const AttributionOptions& opts) {
  if (k < 1) throw ConfigError("two-stage selection needs k >= 1");
  const std::size_t m = doc.num_sentences();
  const bool clipped = k > m;
  k = std::min(k, m);
  const auto p_sent = probe_sentences(backend, doc, prefix, target);
  std::vector<std::size_t> chosen = ranking(p_sent);
  chosen.resize(k);
  std::sort(chosen.begin(), chosen.end());

  const Document local = doc.keep_sentences(chosen);
  AttributionVector inner = attribute(method, backend, local, prefix, target, opts);

  AttributionVector a = inner;
  a.scores.assign(doc.num_pieces(), -std::numeric_limits<double>::infinity());
  std::size_t j = 0;
  for (std::size_t s : chosen) {
    const Span span = doc.sentence_pieces(s);
    for (std::size_t p = span.begin; p < span.end; ++p) a.scores[p] = inner.scores[j++];
  }
  a.preselected_sentences = chosen;
  a.k_clipped = clipped;
  return a;
}

}  // namespace sumlens
