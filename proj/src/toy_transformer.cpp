#include "sumlens/toy_transformer.hpp"

#include <cmath>
#include <random>

#include "sumlens/error.hpp"

namespace sumlens {

namespace {

constexpr double kNormEps = 1e-5;
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

struct ParamRef {
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
};

struct LinearP {
  ParamRef w, b;
};
struct NormP {
  ParamRef gain, bias;
};
struct AttnP {
  LinearP q, k, v, o;
};
struct FfnP {
  LinearP up, down;
};
struct EncoderLayerP {
  NormP norm1, norm2;
  AttnP attn;
  FfnP ffn;
};
struct DecoderLayerP {
  NormP norm1, norm2, norm3;
  AttnP self_attn, cross_attn;
  FfnP ffn;
};

using CMap = Eigen::Map<const Matrix>;
using MMap = Eigen::Map<Matrix>;
using CRow = Eigen::Map<const RowVector>;
using MRow = Eigen::Map<RowVector>;

CMap cmat(const double* base, const ParamRef& r) {
  return CMap(base + r.offset, static_cast<Eigen::Index>(r.rows), static_cast<Eigen::Index>(r.cols));
}
MMap mmat(double* base, const ParamRef& r) {
  return MMap(base + r.offset, static_cast<Eigen::Index>(r.rows), static_cast<Eigen::Index>(r.cols));
}
CRow crow(const double* base, const ParamRef& r) { return CRow(base + r.offset, static_cast<Eigen::Index>(r.cols)); }
MRow mrow(double* base, const ParamRef& r) { return MRow(base + r.offset, static_cast<Eigen::Index>(r.cols)); }

struct NormCache {
  Matrix xhat;
  Eigen::VectorXd inv_std;
};

struct AttnCache {
  Matrix xq, xkv;
  Matrix q, k, v;
  std::vector<Matrix> probs;
  Matrix concat;
};

struct FfnCache {
  Matrix x, pre, act;
};

struct EncoderLayerCache {
  NormCache n1, n2;
  AttnCache attn;
  FfnCache ffn;
};

struct DecoderLayerCache {
  NormCache n1, n2, n3;
  AttnCache self_attn, cross_attn;
  FfnCache ffn;
};

double gelu(double x) { return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x))); }

double gelu_grad(double x) {
  const double t = std::tanh(kGeluC * (x + kGeluA * x * x * x));
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * x * x);
}

}  // namespace

struct ToyTransformer::Layout {
  ParamRef embed;
  std::vector<EncoderLayerP> encoder;
  NormP encoder_norm;
  std::vector<DecoderLayerP> decoder;
  NormP decoder_norm;
  LinearP out;
  std::size_t total = 0;
  Matrix positions;  // max_len x embed_dim sinusoidal table
};

class ForwardTrace {
 public:
  bool has_encoder = false;
  std::vector<EncoderLayerCache> encoder;
  NormCache encoder_norm;
  Matrix encoder_out;
  std::vector<DecoderLayerCache> decoder;
  NormCache decoder_norm;
  Matrix decoder_out;
  std::vector<TokenId> decoder_tokens;
};

namespace {

// Stateless kernels over a flat parameter buffer.
struct Kernels {
  const double* params;
  std::size_t heads;

  Matrix linear(const LinearP& p, const Matrix& x) const {
    Matrix y = x * cmat(params, p.w);
    y.rowwise() += crow(params, p.b);
    return y;
  }

  Matrix linear_back(const LinearP& p, const Matrix& x, const Matrix& dy, double* grads) const {
    if (grads != nullptr) {
      mmat(grads, p.w).noalias() += x.transpose() * dy;
      mrow(grads, p.b) += dy.colwise().sum();
    }
    return dy * cmat(params, p.w).transpose();
  }

  Matrix norm(const NormP& p, const Matrix& x, NormCache* cache) const {
    const Eigen::VectorXd mean = x.rowwise().mean();
    Matrix centered = x.colwise() - mean;
    const Eigen::VectorXd var = centered.array().square().rowwise().mean();
    const Eigen::VectorXd inv = (var.array() + kNormEps).rsqrt();
    Matrix xhat = centered.array().colwise() * inv.array();
    Matrix y = (xhat.array().rowwise() * crow(params, p.gain).array()).rowwise() + crow(params, p.bias).array();
    if (cache != nullptr) {
      cache->xhat = std::move(xhat);
      cache->inv_std = inv;
    }
    return y;
  }

  Matrix norm_back(const NormP& p, const NormCache& c, const Matrix& dy, double* grads) const {
    if (grads != nullptr) {
      mrow(grads, p.gain) += dy.cwiseProduct(c.xhat).colwise().sum();
      mrow(grads, p.bias) += dy.colwise().sum();
    }
    const Matrix dxhat = dy.array().rowwise() * crow(params, p.gain).array();
    const Eigen::VectorXd m1 = dxhat.rowwise().mean();
    const Eigen::VectorXd m2 = dxhat.cwiseProduct(c.xhat).rowwise().mean();
    Matrix dx = (dxhat.colwise() - m1) - Matrix(c.xhat.array().colwise() * m2.array());
    return dx.array().colwise() * c.inv_std.array();
  }

  Matrix attention(const AttnP& p, const Matrix& xq, const Matrix& xkv, bool causal, AttnCache* cache,
                   std::vector<Matrix>* probs_out) const {
    const Matrix q = linear(p.q, xq);
    const Matrix k = linear(p.k, xkv);
    const Matrix v = linear(p.v, xkv);
    const Eigen::Index d = q.cols();
    const Eigen::Index dh = d / static_cast<Eigen::Index>(heads);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    Matrix concat(q.rows(), d);
    std::vector<Matrix> probs(heads);
    for (std::size_t h = 0; h < heads; ++h) {
      const Eigen::Index c0 = static_cast<Eigen::Index>(h) * dh;
      Matrix s = (q.middleCols(c0, dh) * k.middleCols(c0, dh).transpose()) * scale;
      for (Eigen::Index i = 0; i < s.rows(); ++i) {
        const Eigen::Index visible = causal ? std::min<Eigen::Index>(i + 1, s.cols()) : s.cols();
        const double top = s.row(i).head(visible).maxCoeff();
        double z = 0.0;
        for (Eigen::Index j = 0; j < s.cols(); ++j) {
          const double e = j < visible ? std::exp(s(i, j) - top) : 0.0;
          s(i, j) = e;
          z += e;
        }
        s.row(i) /= z;
      }
      concat.middleCols(c0, dh) = s * v.middleCols(c0, dh);
      probs[h] = std::move(s);
    }
    Matrix out = linear(p.o, concat);
    if (probs_out != nullptr) *probs_out = probs;
    if (cache != nullptr) {
      cache->xq = xq;
      cache->xkv = xkv;
      cache->q = q;
      cache->k = k;
      cache->v = v;
      cache->probs = std::move(probs);
      cache->concat = std::move(concat);
    }
    return out;
  }

  // Returns d/d(xq); adds d/d(xkv) into `dxkv`.
  Matrix attention_back(const AttnP& p, const AttnCache& c, const Matrix& dout, double* grads, Matrix& dxkv) const {
    const Matrix dconcat = linear_back(p.o, c.concat, dout, grads);
    const Eigen::Index d = c.q.cols();
    const Eigen::Index dh = d / static_cast<Eigen::Index>(heads);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    Matrix dq(c.q.rows(), d), dk(c.k.rows(), d), dv(c.v.rows(), d);
    for (std::size_t h = 0; h < heads; ++h) {
      const Eigen::Index c0 = static_cast<Eigen::Index>(h) * dh;
      const Matrix& ph = c.probs[h];
      const Matrix dp = dconcat.middleCols(c0, dh) * c.v.middleCols(c0, dh).transpose();
      dv.middleCols(c0, dh) = ph.transpose() * dconcat.middleCols(c0, dh);
      const Eigen::VectorXd inner = dp.cwiseProduct(ph).rowwise().sum();
      const Matrix ds = ph.cwiseProduct(Matrix(dp.colwise() - inner)) * scale;
      dq.middleCols(c0, dh) = ds * c.k.middleCols(c0, dh);
      dk.middleCols(c0, dh) = ds.transpose() * c.q.middleCols(c0, dh);
    }
    dxkv += linear_back(p.k, c.xkv, dk, grads);
    dxkv += linear_back(p.v, c.xkv, dv, grads);
    return linear_back(p.q, c.xq, dq, grads);
  }

  Matrix ffn(const FfnP& p, const Matrix& x, FfnCache* cache) const {
    Matrix pre = linear(p.up, x);
    Matrix act = pre.unaryExpr([](double v) { return gelu(v); });
    Matrix out = linear(p.down, act);
    if (cache != nullptr) {
      cache->x = x;
      cache->pre = std::move(pre);
      cache->act = std::move(act);
    }
    return out;
  }

  Matrix ffn_back(const FfnP& p, const FfnCache& c, const Matrix& dout, double* grads) const {
    const Matrix dact = linear_back(p.down, c.act, dout, grads);
    const Matrix dpre = dact.cwiseProduct(c.pre.unaryExpr([](double v) { return gelu_grad(v); }));
    return linear_back(p.up, c.x, dpre, grads);
  }
};

}  // namespace

void ToyModelConfig::validate() const {
  if (layers < 1 || heads < 1 || embed_dim < 1 || ffn_dim < 1 || max_len < 1) {
    throw ConfigError("toy model sizes must all be >= 1");
  }
  if (embed_dim % heads != 0) throw ConfigError("embed_dim must be divisible by heads");
}

ToyTransformer::ToyTransformer(ToyModelConfig config, std::size_t vocab_size, bool lm_only)
    : config_(config), vocab_size_(vocab_size), lm_only_(lm_only) {
  config_.validate();
  if (vocab_size_ < 1) throw VocabError("empty vocabulary");
  auto layout = std::make_shared<Layout>();
  const std::size_t d = config_.embed_dim;
  const std::size_t f = config_.ffn_dim;
  struct Init {
    ParamRef ref;
    double stddev;  // < 0 means constant one
  };
  std::vector<Init> inits;
  std::size_t next = 0;
  auto take = [&](std::size_t rows, std::size_t cols, double stddev) {
    ParamRef r{next, rows, cols};
    next += rows * cols;
    inits.push_back({r, stddev});
    return r;
  };
  auto linear = [&](std::size_t in, std::size_t out) {
    return LinearP{take(in, out, 1.0 / std::sqrt(static_cast<double>(in))), take(1, out, 0.0)};
  };
  auto norm = [&] { return NormP{take(1, d, -1.0), take(1, d, 0.0)}; };
  auto attn = [&] { return AttnP{linear(d, d), linear(d, d), linear(d, d), linear(d, d)}; };
  auto ffn = [&] { return FfnP{linear(d, f), linear(f, d)}; };

  layout->embed = take(vocab_size_, d, 1.0);
  for (std::size_t l = 0; l < config_.layers; ++l) {
    EncoderLayerP e;
    e.norm1 = norm();
    e.attn = attn();
    e.norm2 = norm();
    e.ffn = ffn();
    layout->encoder.push_back(e);
  }
  layout->encoder_norm = norm();
  for (std::size_t l = 0; l < config_.layers; ++l) {
    DecoderLayerP dl;
    dl.norm1 = norm();
    dl.self_attn = attn();
    dl.norm2 = norm();
    dl.cross_attn = attn();
    dl.norm3 = norm();
    dl.ffn = ffn();
    layout->decoder.push_back(dl);
  }
  layout->decoder_norm = norm();
  layout->out = linear(d, vocab_size_);
  layout->total = next;

  layout->positions.resize(static_cast<Eigen::Index>(config_.max_len), static_cast<Eigen::Index>(d));
  for (std::size_t pos = 0; pos < config_.max_len; ++pos) {
    for (std::size_t i = 0; i < d; ++i) {
      const double freq = std::pow(10000.0, -static_cast<double>(i - i % 2) / static_cast<double>(d));
      const double angle = static_cast<double>(pos) * freq;
      layout->positions(static_cast<Eigen::Index>(pos), static_cast<Eigen::Index>(i)) =
          i % 2 == 0 ? std::sin(angle) : std::cos(angle);
    }
  }

  params_.assign(next, 0.0);
  std::mt19937_64 rng(config_.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (const Init& init : inits) {
    double* p = params_.data() + init.ref.offset;
    const std::size_t count = init.ref.rows * init.ref.cols;
    for (std::size_t i = 0; i < count; ++i) {
      if (init.stddev < 0.0) {
        p[i] = 1.0;
      } else if (init.stddev > 0.0) {
        p[i] = init.stddev * normal(rng);
      }
    }
  }
  layout_ = std::move(layout);
}

RowVector ToyTransformer::embedding(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= vocab_size_) throw VocabError("token id out of range");
  return cmat(params_.data(), layout_->embed).row(id);
}

Matrix ToyTransformer::encoder_inputs(std::span<const TokenId> ids, TokenId sos, TokenId eos) const {
  const auto embed = cmat(params_.data(), layout_->embed);
  Matrix rows(static_cast<Eigen::Index>(ids.size() + 2), embed.cols());
  rows.row(0) = embed.row(sos);
  for (std::size_t i = 0; i < ids.size(); ++i) rows.row(static_cast<Eigen::Index>(i + 1)) = embed.row(ids[i]);
  rows.row(rows.rows() - 1) = embed.row(eos);
  return rows;
}

ForwardResult ToyTransformer::forward(const Matrix* encoder_inputs, std::span<const TokenId> decoder_tokens,
                                      bool keep_trace) const {
  const Layout& L = *layout_;
  const Kernels k{params_.data(), config_.heads};
  if (decoder_tokens.empty()) throw ConfigError("decoder input is empty");
  if (decoder_tokens.size() > config_.max_len) throw ConfigError("decoder input exceeds max_len");
  auto trace = keep_trace ? std::make_shared<ForwardTrace>() : nullptr;
  ForwardResult result;

  Matrix memory;
  const bool use_encoder = encoder_inputs != nullptr;
  if (use_encoder) {
    const Eigen::Index ts = encoder_inputs->rows();
    if (static_cast<std::size_t>(ts) > config_.max_len) throw ConfigError("source exceeds max_len");
    Matrix x = *encoder_inputs + L.positions.topRows(ts);
    if (trace) trace->encoder.resize(config_.layers);
    for (std::size_t l = 0; l < config_.layers; ++l) {
      const EncoderLayerP& p = L.encoder[l];
      EncoderLayerCache* c = trace ? &trace->encoder[l] : nullptr;
      const Matrix a = k.norm(p.norm1, x, c ? &c->n1 : nullptr);
      x += k.attention(p.attn, a, a, false, c ? &c->attn : nullptr, nullptr);
      const Matrix b = k.norm(p.norm2, x, c ? &c->n2 : nullptr);
      x += k.ffn(p.ffn, b, c ? &c->ffn : nullptr);
    }
    memory = k.norm(L.encoder_norm, x, trace ? &trace->encoder_norm : nullptr);
  }

  const auto embed = cmat(params_.data(), L.embed);
  const Eigen::Index tt = static_cast<Eigen::Index>(decoder_tokens.size());
  Matrix y(tt, embed.cols());
  for (Eigen::Index i = 0; i < tt; ++i) {
    const TokenId id = decoder_tokens[static_cast<std::size_t>(i)];
    if (id < 0 || static_cast<std::size_t>(id) >= vocab_size_) throw VocabError("decoder token out of range");
    y.row(i) = embed.row(id) + L.positions.row(i);
  }
  if (trace) trace->decoder.resize(config_.layers);
  for (std::size_t l = 0; l < config_.layers; ++l) {
    const DecoderLayerP& p = L.decoder[l];
    DecoderLayerCache* c = trace ? &trace->decoder[l] : nullptr;
    const Matrix a = k.norm(p.norm1, y, c ? &c->n1 : nullptr);
    y += k.attention(p.self_attn, a, a, true, c ? &c->self_attn : nullptr, nullptr);
    if (use_encoder) {
      const Matrix b = k.norm(p.norm2, y, c ? &c->n2 : nullptr);
      const bool last = l + 1 == config_.layers;
      y += k.attention(p.cross_attn, b, memory, false, c ? &c->cross_attn : nullptr,
                       last ? &result.cross_attention : nullptr);
    }
    const Matrix f = k.norm(p.norm3, y, c ? &c->n3 : nullptr);
    y += k.ffn(p.ffn, f, c ? &c->ffn : nullptr);
  }
  Matrix z = k.norm(L.decoder_norm, y, trace ? &trace->decoder_norm : nullptr);
  result.logits = k.linear(L.out, z);
  if (trace) {
    trace->has_encoder = use_encoder;
    trace->encoder_out = std::move(memory);
    trace->decoder_out = std::move(z);
    trace->decoder_tokens.assign(decoder_tokens.begin(), decoder_tokens.end());
    result.trace = std::move(trace);
  }
  return result;
}

void ToyTransformer::backward(const ForwardTrace& trace, const Matrix& d_logits, std::span<double> param_grads,
                              Matrix* d_encoder_inputs) const {
  const Layout& L = *layout_;
  const Kernels k{params_.data(), config_.heads};
  double* g = param_grads.empty() ? nullptr : param_grads.data();
  if (g != nullptr && param_grads.size() != params_.size()) throw ShapeError("gradient buffer size mismatch");

  Matrix dy = k.linear_back(L.out, trace.decoder_out, d_logits, g);
  dy = k.norm_back(L.decoder_norm, trace.decoder_norm, dy, g);
  Matrix d_memory;
  if (trace.has_encoder) d_memory = Matrix::Zero(trace.encoder_out.rows(), trace.encoder_out.cols());
  for (std::size_t l = config_.layers; l-- > 0;) {
    const DecoderLayerP& p = L.decoder[l];
    const DecoderLayerCache& c = trace.decoder[l];
    dy += k.norm_back(p.norm3, c.n3, k.ffn_back(p.ffn, c.ffn, dy, g), g);
    if (trace.has_encoder) {
      const Matrix dq = k.attention_back(p.cross_attn, c.cross_attn, dy, g, d_memory);
      dy += k.norm_back(p.norm2, c.n2, dq, g);
    }
    Matrix da = Matrix::Zero(dy.rows(), dy.cols());
    da += k.attention_back(p.self_attn, c.self_attn, dy, g, da);
    dy += k.norm_back(p.norm1, c.n1, da, g);
  }
  if (g != nullptr) {
    auto dembed = mmat(g, L.embed);
    for (std::size_t i = 0; i < trace.decoder_tokens.size(); ++i) {
      dembed.row(trace.decoder_tokens[i]) += dy.row(static_cast<Eigen::Index>(i));
    }
  }

  if (!trace.has_encoder) {
    if (d_encoder_inputs != nullptr) d_encoder_inputs->resize(0, 0);
    return;
  }
  Matrix dx = k.norm_back(L.encoder_norm, trace.encoder_norm, d_memory, g);
  for (std::size_t l = config_.layers; l-- > 0;) {
    const EncoderLayerP& p = L.encoder[l];
    const EncoderLayerCache& c = trace.encoder[l];
    dx += k.norm_back(p.norm2, c.n2, k.ffn_back(p.ffn, c.ffn, dx, g), g);
    Matrix da = Matrix::Zero(dx.rows(), dx.cols());
    da += k.attention_back(p.attn, c.attn, dx, g, da);
    dx += k.norm_back(p.norm1, c.n1, da, g);
  }
  if (d_encoder_inputs != nullptr) *d_encoder_inputs = std::move(dx);
}

void ToyTransformer::scatter_embedding_grad(const Matrix& d_rows, std::span<const TokenId> ids,
                                            std::span<double> param_grads) const {
  auto dembed = mmat(param_grads.data(), layout_->embed);
  for (std::size_t i = 0; i < ids.size(); ++i) dembed.row(ids[i]) += d_rows.row(static_cast<Eigen::Index>(i));
}

ToyTransformerBackend::ToyTransformerBackend(Vocab vocab, ToyTransformer model)
    : vocab_(std::move(vocab)), model_(std::move(model)) {
  if (model_.vocab_size() != vocab_.size()) throw VocabError("model and vocabulary sizes differ");
}

void ToyTransformerBackend::check_lengths(std::size_t source_pieces, std::size_t prefix_len) const {
  if (source_pieces + 2 > model_.config().max_len || prefix_len > model_.config().max_len) {
    throw ConfigError("input longer than the model's max_len");
  }
}

TokenDistribution ToyTransformerBackend::do_predict(const AblationConfig& config, const Document& doc,
                                                    const Prefix& prefix) const {
  ForwardResult out;
  if (model_.lm_only() || config.mode == AblationMode::LM_EMPTY) {
    check_lengths(0, prefix.size());
    out = model_.forward(nullptr, prefix.pieces(), false);
  } else {
    const Document source = materialize_source(config, doc);
    check_lengths(source.num_pieces(), prefix.size());
    const Matrix inputs = model_.encoder_inputs(source.pieces(), vocab_.specials().sos, vocab_.specials().eos);
    out = model_.forward(&inputs, prefix.pieces(), false);
  }
  const RowVector last = out.logits.row(out.logits.rows() - 1);
  return TokenDistribution::from_logits(std::span<const double>(last.data(), static_cast<std::size_t>(last.size())));
}

Matrix ToyTransformerBackend::piece_embeddings(const Document& source) const {
  Matrix rows(static_cast<Eigen::Index>(source.num_pieces()), static_cast<Eigen::Index>(embed_dim()));
  for (std::size_t i = 0; i < source.num_pieces(); ++i) {
    rows.row(static_cast<Eigen::Index>(i)) = model_.embedding(source.pieces()[i]);
  }
  return rows;
}

RowVector ToyTransformerBackend::mask_embedding() const { return model_.embedding(vocab_.specials().mask); }

Matrix ToyTransformerBackend::wrap_source(const Matrix& piece_embeddings) const {
  Matrix rows(piece_embeddings.rows() + 2, static_cast<Eigen::Index>(embed_dim()));
  rows.row(0) = model_.embedding(vocab_.specials().sos);
  rows.middleRows(1, piece_embeddings.rows()) = piece_embeddings;
  rows.row(rows.rows() - 1) = model_.embedding(vocab_.specials().eos);
  return rows;
}

double ToyTransformerBackend::target_log_prob(const Matrix& piece_embeddings, const Prefix& prefix, TokenId target,
                                              Matrix* grad) const {
  if (!vocab_.in_range(target)) throw VocabError("target id out of range");
  if (piece_embeddings.cols() != static_cast<Eigen::Index>(embed_dim())) throw ShapeError("embedding width mismatch");
  check_lengths(static_cast<std::size_t>(piece_embeddings.rows()), prefix.size());
  const bool use_source = !model_.lm_only();
  const Matrix inputs = wrap_source(piece_embeddings);
  const ForwardResult out = model_.forward(use_source ? &inputs : nullptr, prefix.pieces(), grad != nullptr);
  const Eigen::Index last = out.logits.rows() - 1;
  const RowVector logits = out.logits.row(last);
  const double top = logits.maxCoeff();
  const RowVector exps = (logits.array() - top).exp();
  const double z = exps.sum();
  const double log_prob = logits(target) - top - std::log(z);
  if (grad != nullptr) {
    Matrix d_logits = Matrix::Zero(out.logits.rows(), out.logits.cols());
    d_logits.row(last) = -exps / z;
    d_logits(last, target) += 1.0;
    Matrix d_inputs;
    model_.backward(*out.trace, d_logits, {}, &d_inputs);
    if (use_source) {
      *grad = d_inputs.middleRows(1, piece_embeddings.rows());
    } else {
      *grad = Matrix::Zero(piece_embeddings.rows(), piece_embeddings.cols());
    }
  }
  return log_prob;
}

std::vector<double> ToyTransformerBackend::attention_weights(const Document& source, const Prefix& prefix) const {
  if (model_.lm_only()) throw UnsupportedCapability("decoder-only model has no cross-attention");
  check_lengths(source.num_pieces(), prefix.size());
  const Matrix inputs = model_.encoder_inputs(source.pieces(), vocab_.specials().sos, vocab_.specials().eos);
  const ForwardResult out = model_.forward(&inputs, prefix.pieces(), false);
  const Eigen::Index last = out.logits.rows() - 1;
  std::vector<std::vector<double>> rows;
  for (const Matrix& head : out.cross_attention) {
    rows.emplace_back(head.row(last).data(), head.row(last).data() + head.cols());
  }
  // SOS and EOS wrap the source
  const std::size_t keys = static_cast<std::size_t>(inputs.rows());
  auto special = std::make_unique<bool[]>(keys);
  special[0] = true;
  special[keys - 1] = true;
  return pool_attention(rows, std::span<const bool>(special.get(), keys));
}

}  // namespace sumlens
