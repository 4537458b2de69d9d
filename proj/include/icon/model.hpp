#pragma once

#include <Eigen/Core>
#include <cmath>
#include <string>
#include <vector>

#include "icon/errors.hpp"
#include "icon/prompt.hpp"
#include "icon/rng.hpp"

namespace icon {

// Encoder-decoder transformer over prompt columns and query columns.
// No positional encoding: column identity lives entirely in the index rows,
// making the network permutation-invariant over prompt columns. The decoder
// has no query self-attention, so each query's output depends only on that
// query and the encoded prompt.
struct ModelConfig {
  int d_model = 64;
  int n_heads = 4;
  int n_enc_layers = 3;
  int n_dec_layers = 3;
  int d_ff = 256;
  int prompt_rows = PromptMatrix::rows();  // 10
  int query_rows = 3;
  int out_dim = 1;

  void validate() const {
    if (d_model < 1 || n_heads < 1 || n_enc_layers < 1 || n_dec_layers < 1 ||
        d_ff < 1 || prompt_rows < 1 || query_rows < 1 || out_dim < 1)
      throw InvalidInputError("ModelConfig: all sizes must be >= 1");
    if (d_model % n_heads != 0)
      throw InvalidInputError("ModelConfig: d_model must be divisible by n_heads");
  }

  // Closed-form parameter count; kept in sync with ModelParams::visit.
  long long param_count() const {
    const long long d = d_model, f = d_ff;
    const long long linear_d_d = d * d + d;
    const long long attn = 4 * linear_d_d;
    const long long ffn = f * d + f + d * f + d;
    const long long ln = 2 * d;
    const long long layer = attn + ffn + 2 * ln;  // same shape for enc and dec
    long long n = 0;
    n += d * prompt_rows + d;                 // prompt embedding
    n += d * query_rows + d;                  // query embedding
    n += (n_enc_layers + n_dec_layers) * layer;
    n += 2 * ln;                              // final norms (encoder, decoder)
    n += out_dim * d + out_dim;               // head
    return n;
  }
};

namespace detail_model {
constexpr double kMaskNegative = -1e30;
constexpr double kLnEps = 1e-5;
}  // namespace detail_model

template <typename S>
struct LinearParams {
  Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> w;
  Eigen::Matrix<S, Eigen::Dynamic, 1> b;

  void setup(int out, int in) {
    w.setZero(out, in);
    b.setZero(out);
  }
};

template <typename S>
struct LayerNormParams {
  Eigen::Matrix<S, Eigen::Dynamic, 1> gamma, beta;

  void setup(int d) {
    gamma.setOnes(d);
    beta.setZero(d);
  }
};

template <typename S>
struct AttentionParams {
  LinearParams<S> q, k, v, o;

  void setup(int d) {
    q.setup(d, d);
    k.setup(d, d);
    v.setup(d, d);
    o.setup(d, d);
  }
};

template <typename S>
struct BlockParams {  // one encoder or decoder layer
  LayerNormParams<S> ln1, ln2;
  AttentionParams<S> attn;  // self-attention (encoder) or cross-attention (decoder)
  LinearParams<S> ff1, ff2;

  void setup(int d, int d_ff) {
    ln1.setup(d);
    ln2.setup(d);
    attn.setup(d);
    ff1.setup(d_ff, d);
    ff2.setup(d, d_ff);
  }
};

template <typename S>
struct ModelParams {
  LinearParams<S> embed_prompt, embed_query, head;
  std::vector<BlockParams<S>> enc, dec;
  LayerNormParams<S> enc_norm, dec_norm;

  void setup(const ModelConfig& cfg) {
    cfg.validate();
    embed_prompt.setup(cfg.d_model, cfg.prompt_rows);
    embed_query.setup(cfg.d_model, cfg.query_rows);
    head.setup(cfg.out_dim, cfg.d_model);
    enc.assign(cfg.n_enc_layers, {});
    dec.assign(cfg.n_dec_layers, {});
    for (auto& b : enc) b.setup(cfg.d_model, cfg.d_ff);
    for (auto& b : dec) b.setup(cfg.d_model, cfg.d_ff);
    enc_norm.setup(cfg.d_model);
    dec_norm.setup(cfg.d_model);
  }

  // Enumerate every parameter block in a fixed order. The callback receives
  // (name, rows, cols, pointer); used by initialization, optimizers,
  // checkpoints, and the gradient checker.
  template <typename F>
  void visit(F&& fn) {
    const auto lin = [&](const std::string& n, LinearParams<S>& l) {
      fn(n + ".w", l.w.rows(), l.w.cols(), l.w.data());
      fn(n + ".b", l.b.rows(), Eigen::Index(1), l.b.data());
    };
    const auto ln = [&](const std::string& n, LayerNormParams<S>& l) {
      fn(n + ".gamma", l.gamma.rows(), Eigen::Index(1), l.gamma.data());
      fn(n + ".beta", l.beta.rows(), Eigen::Index(1), l.beta.data());
    };
    const auto block = [&](const std::string& n, BlockParams<S>& b) {
      ln(n + ".ln1", b.ln1);
      lin(n + ".attn.q", b.attn.q);
      lin(n + ".attn.k", b.attn.k);
      lin(n + ".attn.v", b.attn.v);
      lin(n + ".attn.o", b.attn.o);
      ln(n + ".ln2", b.ln2);
      lin(n + ".ff1", b.ff1);
      lin(n + ".ff2", b.ff2);
    };
    lin("embed_prompt", embed_prompt);
    lin("embed_query", embed_query);
    for (std::size_t i = 0; i < enc.size(); ++i) block("enc" + std::to_string(i), enc[i]);
    ln("enc_norm", enc_norm);
    for (std::size_t i = 0; i < dec.size(); ++i) block("dec" + std::to_string(i), dec[i]);
    ln("dec_norm", dec_norm);
    lin("head", head);
  }

  long long count() {
    long long n = 0;
    visit([&](const std::string&, Eigen::Index r, Eigen::Index c, S*) { n += r * c; });
    return n;
  }

  void set_zero() {
    visit([](const std::string&, Eigen::Index r, Eigen::Index c, S* p) {
      for (Eigen::Index i = 0; i < r * c; ++i) p[i] = S(0);
    });
  }

  bool all_finite() {
    bool ok = true;
    visit([&](const std::string&, Eigen::Index r, Eigen::Index c, S* p) {
      for (Eigen::Index i = 0; i < r * c; ++i)
        if (!std::isfinite(double(p[i]))) ok = false;
    });
    return ok;
  }
};

// Scaled-uniform fan-in initialization: weights ~ U(-a, a), a = 1/sqrt(fan_in);
// biases 0, layer-norm gains 1. Deterministic per rng state.
template <typename S>
ModelParams<S> init_params(const ModelConfig& cfg, Rng& rng) {
  ModelParams<S> p;
  p.setup(cfg);
  p.visit([&](const std::string& name, Eigen::Index r, Eigen::Index c, S* data) {
    if (name.size() >= 2 && name.compare(name.size() - 2, 2, ".w") == 0) {
      const double a = 1.0 / std::sqrt(double(c));
      for (Eigen::Index i = 0; i < r * c; ++i) data[i] = S(rng.uniform(-a, a));
    }
    // biases stay 0, gamma stays 1, beta stays 0
  });
  return p;
}

namespace detail_model {

template <typename S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;

// y = W x + b applied column-wise.
template <typename S>
MatX<S> linear(const LinearParams<S>& p, const MatX<S>& x) {
  return (p.w * x).colwise() + p.b;
}

template <typename S>
void linear_backward(const LinearParams<S>& p, const MatX<S>& x, const MatX<S>& dy,
                     LinearParams<S>& grad, MatX<S>& dx_accum) {
  grad.w.noalias() += dy * x.transpose();
  grad.b.noalias() += dy.rowwise().sum();
  dx_accum.noalias() += p.w.transpose() * dy;
}

template <typename S>
struct LnCache {
  MatX<S> xhat;        // normalized input
  VecX<S> inv_sigma;   // 1/sqrt(var + eps), per column
};

template <typename S>
MatX<S> layer_norm(const LayerNormParams<S>& p, const MatX<S>& x, LnCache<S>& cache) {
  const Eigen::Index d = x.rows(), n = x.cols();
  cache.xhat.resize(d, n);
  cache.inv_sigma.resize(n);
  MatX<S> y(d, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const S mu = x.col(j).mean();
    const VecX<S> cen = x.col(j).array() - mu;
    const S var = cen.squaredNorm() / S(d);
    const S inv = S(1) / std::sqrt(var + S(kLnEps));
    cache.inv_sigma[j] = inv;
    cache.xhat.col(j) = cen * inv;
    y.col(j) = (cache.xhat.col(j).array() * p.gamma.array() + p.beta.array()).matrix();
  }
  return y;
}

template <typename S>
void layer_norm_backward(const LayerNormParams<S>& p, const LnCache<S>& cache,
                         const MatX<S>& dy, LayerNormParams<S>& grad,
                         MatX<S>& dx_accum) {
  const Eigen::Index d = dy.rows(), n = dy.cols();
  for (Eigen::Index j = 0; j < n; ++j) {
    grad.gamma.array() += dy.col(j).array() * cache.xhat.col(j).array();
    grad.beta.array() += dy.col(j).array();
    const VecX<S> dxh = (dy.col(j).array() * p.gamma.array()).matrix();
    const S m1 = dxh.mean();
    const S m2 = (dxh.array() * cache.xhat.col(j).array()).mean();
    dx_accum.col(j).array() +=
        cache.inv_sigma[j] *
        (dxh.array() - m1 - cache.xhat.col(j).array() * m2);
  }
  (void)d;
}

template <typename S>
struct AttnCache {
  MatX<S> xq, xkv;            // layer inputs (already normalized)
  MatX<S> q, k, v;            // d x Lq / d x Lk projections
  std::vector<MatX<S>> prob;  // per head: Lk x Lq, one softmax per column
  MatX<S> concat;             // d x Lq head outputs before the output projection
};

// Multi-head scaled dot-product attention. key_mask[j] == 0 removes prompt
// column j from every softmax (additive large-negative logit). Attention
// weights are stored keys-by-queries so the softmax runs down contiguous
// columns.
template <typename S>
MatX<S> attention(const AttentionParams<S>& p, int n_heads, const MatX<S>& xq,
                  const MatX<S>& xkv, const Eigen::VectorXi& key_mask,
                  AttnCache<S>& cache) {
  const Eigen::Index d = xq.rows(), lq = xq.cols(), lk = xkv.cols();
  const Eigen::Index dk = d / n_heads;
  const S scale = S(1) / std::sqrt(S(double(dk)));
  cache.xq = xq;
  cache.xkv = xkv;
  cache.q = linear(p.q, xq);
  cache.k = linear(p.k, xkv);
  cache.v = linear(p.v, xkv);
  cache.prob.assign(std::size_t(n_heads), {});
  cache.concat.resize(d, lq);
  std::vector<Eigen::Index> masked;
  for (Eigen::Index j = 0; j < lk; ++j)
    if (!key_mask[j]) masked.push_back(j);
  for (int h = 0; h < n_heads; ++h) {
    const auto qh = cache.q.middleRows(h * dk, dk);
    const auto kh = cache.k.middleRows(h * dk, dk);
    const auto vh = cache.v.middleRows(h * dk, dk);
    MatX<S>& prob = cache.prob[std::size_t(h)];
    prob.noalias() = kh.transpose() * qh;  // Lk x Lq
    prob *= scale;
    for (Eigen::Index j : masked) prob.row(j).setConstant(S(kMaskNegative));
    for (Eigen::Index i = 0; i < lq; ++i) {
      auto col = prob.col(i);
      col.array() = (col.array() - col.maxCoeff()).exp();
      col /= col.sum();
    }
    cache.concat.middleRows(h * dk, dk).noalias() = vh * prob;
  }
  return linear(p.o, cache.concat);
}

template <typename S>
void attention_backward(const AttentionParams<S>& p, int n_heads,
                        const AttnCache<S>& cache, const MatX<S>& dy,
                        AttentionParams<S>& grad, MatX<S>& dxq_accum,
                        MatX<S>& dxkv_accum) {
  const Eigen::Index d = cache.xq.rows();
  const Eigen::Index dk = d / n_heads;
  const S scale = S(1) / std::sqrt(S(double(dk)));

  MatX<S> dconcat = MatX<S>::Zero(d, cache.xq.cols());
  linear_backward(p.o, cache.concat, dy, grad.o, dconcat);

  MatX<S> dq = MatX<S>::Zero(d, cache.xq.cols());
  MatX<S> dk_full = MatX<S>::Zero(d, cache.xkv.cols());
  MatX<S> dv = MatX<S>::Zero(d, cache.xkv.cols());
  for (int h = 0; h < n_heads; ++h) {
    const auto qh = cache.q.middleRows(h * dk, dk);
    const auto kh = cache.k.middleRows(h * dk, dk);
    const auto vh = cache.v.middleRows(h * dk, dk);
    const MatX<S>& prob = cache.prob[std::size_t(h)];
    const auto doh = dconcat.middleRows(h * dk, dk);

    dv.middleRows(h * dk, dk).noalias() += doh * prob.transpose();
    MatX<S> dprob(prob.rows(), prob.cols());  // Lk x Lq
    dprob.noalias() = vh.transpose() * doh;
    // softmax backward per column
    for (Eigen::Index i = 0; i < prob.cols(); ++i) {
      const S dot = prob.col(i).dot(dprob.col(i));
      dprob.col(i).array() = prob.col(i).array() * (dprob.col(i).array() - dot);
    }
    dprob *= scale;
    dq.middleRows(h * dk, dk).noalias() += kh * dprob;
    dk_full.middleRows(h * dk, dk).noalias() += qh * dprob.transpose();
  }
  linear_backward(p.q, cache.xq, dq, grad.q, dxq_accum);
  linear_backward(p.k, cache.xkv, dk_full, grad.k, dxkv_accum);
  linear_backward(p.v, cache.xkv, dv, grad.v, dxkv_accum);
}

template <typename S>
struct BlockCache {
  MatX<S> x_in;      // residual-stream input
  LnCache<S> ln1c, ln2c;
  MatX<S> n1;        // ln1 output
  AttnCache<S> attnc;
  MatX<S> x_mid;     // after attention residual
  MatX<S> n2;        // ln2 output
  MatX<S> ff_pre;    // ff1 output before ReLU
  MatX<S> ff_act;    // after ReLU
};

// Pre-norm residual block: x + Attn(LN(x)), then x + FFN(LN(x)).
// `memory == nullptr` means self-attention; otherwise cross-attention to
// `memory` (the encoded prompt), and key_mask masks memory columns.
template <typename S>
MatX<S> block_forward(const BlockParams<S>& p, int n_heads, const MatX<S>& x,
                      const MatX<S>* memory, const Eigen::VectorXi& key_mask,
                      BlockCache<S>& c) {
  c.x_in = x;
  c.n1 = layer_norm(p.ln1, x, c.ln1c);
  const MatX<S>& kv = memory ? *memory : c.n1;
  c.x_mid = x + attention(p.attn, n_heads, c.n1, kv, key_mask, c.attnc);
  c.n2 = layer_norm(p.ln2, c.x_mid, c.ln2c);
  c.ff_pre = linear(p.ff1, c.n2);
  c.ff_act = c.ff_pre.cwiseMax(S(0));
  return c.x_mid + linear(p.ff2, c.ff_act);
}

// Returns gradient w.r.t. the block input; accumulates into dmemory when
// cross-attending.
template <typename S>
MatX<S> block_backward(const BlockParams<S>& p, int n_heads, const BlockCache<S>& c,
                       const MatX<S>& dy, BlockParams<S>& grad, MatX<S>* dmemory) {
  // FFN sub-block
  MatX<S> dff_act = MatX<S>::Zero(c.ff_act.rows(), c.ff_act.cols());
  linear_backward(p.ff2, c.ff_act, dy, grad.ff2, dff_act);
  const MatX<S> dff_pre =
      (dff_act.array() * (c.ff_pre.array() > S(0)).template cast<S>()).matrix();
  MatX<S> dn2 = MatX<S>::Zero(c.n2.rows(), c.n2.cols());
  linear_backward(p.ff1, c.n2, dff_pre, grad.ff1, dn2);
  MatX<S> dx_mid = dy;  // residual path
  layer_norm_backward(p.ln2, c.ln2c, dn2, grad.ln2, dx_mid);

  // attention sub-block
  MatX<S> dn1 = MatX<S>::Zero(c.n1.rows(), c.n1.cols());
  MatX<S> dx = dx_mid;  // residual path
  if (dmemory) {
    attention_backward(p.attn, n_heads, c.attnc, dx_mid, grad.attn, dn1, *dmemory);
  } else {
    attention_backward(p.attn, n_heads, c.attnc, dx_mid, grad.attn, dn1, dn1);
  }
  layer_norm_backward(p.ln1, c.ln1c, dn1, grad.ln1, dx);
  return dx;
}

template <typename S>
struct ForwardCache {
  MatX<S> prompt_in, query_in;  // raw inputs
  std::vector<BlockCache<S>> enc, dec;
  MatX<S> enc_pre_norm;         // encoder stream before the final norm
  LnCache<S> enc_normc;
  MatX<S> memory;               // encoder output
  MatX<S> dec_pre_norm;
  LnCache<S> dec_normc;
  MatX<S> dec_out;              // decoder output after final norm
};

}  // namespace detail_model

// Forward pass for one (prompt, queries) element. Output is out_dim x Lq;
// masked query columns produce values that callers must ignore.
template <typename S>
detail_model::MatX<S> model_forward(const ModelConfig& cfg, ModelParams<S>& params,
                                    const detail_model::MatX<S>& prompt,
                                    const Eigen::VectorXi& prompt_mask,
                                    const detail_model::MatX<S>& queries,
                                    detail_model::ForwardCache<S>* cache_out = nullptr) {
  using namespace detail_model;
  if (prompt.rows() != cfg.prompt_rows)
    throw InvalidInputError("model_forward: prompt row count mismatch");
  if (queries.rows() != cfg.query_rows)
    throw InvalidInputError("model_forward: query row count mismatch");
  if (prompt_mask.size() != prompt.cols())
    throw InvalidInputError("model_forward: prompt mask length mismatch");
  if (prompt_mask.sum() == 0)
    throw InvalidInputError("model_forward: no valid prompt columns");

  ForwardCache<S> local;
  ForwardCache<S>& c = cache_out ? *cache_out : local;
  c.prompt_in = prompt;
  c.query_in = queries;
  c.enc.assign(params.enc.size(), {});
  c.dec.assign(params.dec.size(), {});

  MatX<S> x = linear(params.embed_prompt, prompt);
  for (std::size_t i = 0; i < params.enc.size(); ++i)
    x = block_forward(params.enc[i], cfg.n_heads, x, (const MatX<S>*)nullptr,
                      prompt_mask, c.enc[i]);
  c.enc_pre_norm = x;
  c.memory = layer_norm(params.enc_norm, x, c.enc_normc);

  MatX<S> y = linear(params.embed_query, queries);
  for (std::size_t i = 0; i < params.dec.size(); ++i)
    y = block_forward(params.dec[i], cfg.n_heads, y, &c.memory, prompt_mask, c.dec[i]);
  c.dec_pre_norm = y;
  c.dec_out = layer_norm(params.dec_norm, y, c.dec_normc);
  return linear(params.head, c.dec_out);
}

// Backward pass matching model_forward; accumulates into `grads`.
template <typename S>
void model_backward(const ModelConfig& cfg, ModelParams<S>& params,
                    const detail_model::ForwardCache<S>& c,
                    const detail_model::MatX<S>& dout, ModelParams<S>& grads) {
  using namespace detail_model;
  MatX<S> ddec_out = MatX<S>::Zero(cfg.d_model, c.dec_out.cols());
  linear_backward(params.head, c.dec_out, dout, grads.head, ddec_out);
  MatX<S> dy = MatX<S>::Zero(cfg.d_model, c.dec_out.cols());
  layer_norm_backward(params.dec_norm, c.dec_normc, ddec_out, grads.dec_norm, dy);

  MatX<S> dmemory = MatX<S>::Zero(c.memory.rows(), c.memory.cols());
  for (int i = int(params.dec.size()) - 1; i >= 0; --i)
    dy = block_backward(params.dec[std::size_t(i)], cfg.n_heads, c.dec[std::size_t(i)],
                        dy, grads.dec[std::size_t(i)], &dmemory);
  grads.embed_query.w.noalias() += dy * c.query_in.transpose();
  grads.embed_query.b.noalias() += dy.rowwise().sum();

  MatX<S> dx = MatX<S>::Zero(cfg.d_model, c.enc_pre_norm.cols());
  layer_norm_backward(params.enc_norm, c.enc_normc, dmemory, grads.enc_norm, dx);
  for (int i = int(params.enc.size()) - 1; i >= 0; --i)
    dx = block_backward(params.enc[std::size_t(i)], cfg.n_heads, c.enc[std::size_t(i)],
                        dx, grads.enc[std::size_t(i)], (MatX<S>*)nullptr);
  grads.embed_prompt.w.noalias() += dx * c.prompt_in.transpose();
  grads.embed_prompt.b.noalias() += dx.rowwise().sum();
}

// Padding columns produced by pad_and_batch form a suffix; returns the
// valid width if so (letting callers skip the padded tail entirely), or
// the full width when the mask has interior holes.
inline Eigen::Index suffix_padded_width(const Eigen::VectorXi& mask) {
  const Eigen::Index n = mask.sum();
  if (n > 0 && (mask.head(n).array() == 1).all()) return n;
  return mask.size();
}

// Batched forward over a padded Batch: returns one prediction row per
// element (length = padded query count; masked positions meaningless).
template <typename S>
std::vector<detail_model::VecX<S>> forward_batch(const ModelConfig& cfg,
                                                 ModelParams<S>& params,
                                                 const Batch& batch) {
  using namespace detail_model;
  std::vector<VecX<S>> out;
  out.reserve(std::size_t(batch.size()));
  for (int b = 0; b < batch.size(); ++b) {
    const std::size_t i = std::size_t(b);
    const Eigen::Index np = suffix_padded_width(batch.prompts[i].col_mask);
    const MatX<S> prompt = batch.prompts[i].data.leftCols(np).template cast<S>();
    const MatX<S> queries = batch.queries[i].data.template cast<S>();
    const MatX<S> pred = model_forward<S>(cfg, params, prompt,
                                          batch.prompts[i].col_mask.head(np), queries);
    out.push_back(pred.row(0).transpose());
  }
  return out;
}

// Masked MSE over the batch plus parameter gradients. Loss is the mean of
// squared errors over valid query positions pooled across the batch.
template <typename S>
S loss_and_gradients(const ModelConfig& cfg, ModelParams<S>& params, const Batch& batch,
                     ModelParams<S>& grads) {
  using namespace detail_model;
  long long denom = 0;
  for (const LabelVector& l : batch.labels) denom += l.mask.sum();
  if (denom == 0) throw InvalidInputError("loss_and_gradients: all labels masked");

  S loss = S(0);
  for (int b = 0; b < batch.size(); ++b) {
    const std::size_t i = std::size_t(b);
    const Eigen::Index np = suffix_padded_width(batch.prompts[i].col_mask);
    const Eigen::Index nq = suffix_padded_width(batch.labels[i].mask);
    const MatX<S> prompt = batch.prompts[i].data.leftCols(np).template cast<S>();
    const MatX<S> queries = batch.queries[i].data.leftCols(nq).template cast<S>();
    ForwardCache<S> cache;
    const MatX<S> pred = model_forward<S>(cfg, params, prompt,
                                          batch.prompts[i].col_mask.head(np), queries,
                                          &cache);
    MatX<S> dout = MatX<S>::Zero(pred.rows(), pred.cols());
    for (Eigen::Index q = 0; q < pred.cols(); ++q) {
      if (!batch.labels[i].mask[q]) continue;
      const S diff = pred(0, q) - S(batch.labels[i].values[q]);
      loss += diff * diff / S(double(denom));
      dout(0, q) = S(2) * diff / S(double(denom));
    }
    model_backward(cfg, params, cache, dout, grads);
  }
  return loss;
}

}  // namespace icon
