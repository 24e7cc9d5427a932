#include "storystyle/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "json.hpp"
#include "storystyle/layers.hpp"

namespace storystyle {

using nlohmann::json;
using namespace layers;

static_assert(std::numeric_limits<double>::is_iec559,
              "checkpoint format requires IEEE-754 doubles");

namespace {
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

void ModelConfig::validate() const {
  if (vocab_size <= 0 || d_model <= 0 || n_layers_enc <= 0 ||
      n_layers_dec <= 0 || n_heads <= 0 || d_ff <= 0 || d_r <= 0)
    throw ConfigError("model config: all dimensions must be positive");
  if (d_model % n_heads != 0)
    throw ConfigError("model config: d_model must be divisible by n_heads");
  if (max_len < 120)
    throw ConfigError("model config: max_len must be >= 120");
  if (vocab_size < kNumReserved)
    throw ConfigError("model config: vocab_size below reserved token count");
}

std::string ModelConfig::to_json() const {
  json j;
  j["vocab_size"] = vocab_size;
  j["d_model"] = d_model;
  j["n_layers_enc"] = n_layers_enc;
  j["n_layers_dec"] = n_layers_dec;
  j["n_heads"] = n_heads;
  j["d_ff"] = d_ff;
  j["d_r"] = d_r;
  j["max_len"] = max_len;
  return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& json_text) {
  json j = json::parse(json_text);
  ModelConfig c;
  c.vocab_size = j.at("vocab_size").get<int>();
  c.d_model = j.at("d_model").get<int>();
  c.n_layers_enc = j.at("n_layers_enc").get<int>();
  c.n_layers_dec = j.at("n_layers_dec").get<int>();
  c.n_heads = j.at("n_heads").get<int>();
  c.d_ff = j.at("d_ff").get<int>();
  c.d_r = j.at("d_r").get<int>();
  c.max_len = j.at("max_len").get<int>();
  return c;
}

ModelParameters::ModelParameters(const ModelConfig& config) : cfg(config) {
  cfg.validate();
  const int d = cfg.d_model;
  tok_emb.setup("tok_emb", cfg.vocab_size, d);
  enc_pos.setup("enc_pos", cfg.max_len, d);
  dec_pos.setup("dec_pos", cfg.max_len, d);
  enc_layers.resize(static_cast<std::size_t>(cfg.n_layers_enc));
  for (int l = 0; l < cfg.n_layers_enc; ++l) {
    auto& layer = enc_layers[static_cast<std::size_t>(l)];
    const std::string p = "enc." + std::to_string(l);
    setup_layernorm(layer.ln1, p + ".ln1", d);
    setup_layernorm(layer.ln2, p + ".ln2", d);
    setup_attention(layer.attn, p + ".attn", d);
    setup_ff(layer.ff, p + ".ff", d, cfg.d_ff);
  }
  setup_layernorm(enc_ln_f, "enc.ln_f", d);
  dec_layers.resize(static_cast<std::size_t>(cfg.n_layers_dec));
  for (int l = 0; l < cfg.n_layers_dec; ++l) {
    auto& layer = dec_layers[static_cast<std::size_t>(l)];
    const std::string p = "dec." + std::to_string(l);
    setup_layernorm(layer.ln1, p + ".ln1", d);
    setup_layernorm(layer.ln2, p + ".ln2", d);
    setup_layernorm(layer.ln3, p + ".ln3", d);
    setup_attention(layer.self_attn, p + ".self_attn", d);
    setup_attention(layer.cross_attn, p + ".cross_attn", d);
    setup_ff(layer.ff, p + ".ff", d, cfg.d_ff);
  }
  setup_layernorm(dec_ln_f, "dec.ln_f", d);
  setup_linear(plan_head, "plan_head", cfg.vocab_size, d);
  setup_linear(out_head, "out_head", cfg.vocab_size, d);
  setup_linear(kw_proj, "kw_proj", cfg.d_r, cfg.vocab_size);
  setup_linear(gate, "gate", cfg.vocab_size, cfg.d_r + d);
}

std::vector<const Tensor*> ModelParameters::all() const {
  std::vector<const Tensor*> out;
  out.push_back(&tok_emb);
  out.push_back(&enc_pos);
  out.push_back(&dec_pos);
  for (const auto& l : enc_layers) {
    collect(l.ln1, out);
    collect(l.attn, out);
    collect(l.ln2, out);
    collect(l.ff, out);
  }
  collect(enc_ln_f, out);
  for (const auto& l : dec_layers) {
    collect(l.ln1, out);
    collect(l.self_attn, out);
    collect(l.ln2, out);
    collect(l.cross_attn, out);
    collect(l.ln3, out);
    collect(l.ff, out);
  }
  collect(dec_ln_f, out);
  collect(plan_head, out);
  collect(out_head, out);
  collect(kw_proj, out);
  collect(gate, out);
  return out;
}

std::vector<Tensor*> ModelParameters::all() {
  std::vector<Tensor*> out;
  for (const Tensor* t : static_cast<const ModelParameters*>(this)->all())
    out.push_back(const_cast<Tensor*>(t));
  return out;
}

std::size_t ModelParameters::num_parameters() const {
  std::size_t n = 0;
  for (const Tensor* t : all()) n += t->v.size();
  return n;
}

void ModelParameters::zero_grad() {
  for (Tensor* t : all()) t->g.fill(0.0);
}

void ModelParameters::init(Rng& rng) {
  init_normal(tok_emb.v, rng, 0.1);
  init_normal(enc_pos.v, rng, 0.02);
  init_normal(dec_pos.v, rng, 0.02);
  for (auto& l : enc_layers) {
    init_layernorm(l.ln1);
    init_layernorm(l.ln2);
    init_attention(l.attn, rng);
    init_ff(l.ff, rng);
  }
  init_layernorm(enc_ln_f);
  for (auto& l : dec_layers) {
    init_layernorm(l.ln1);
    init_layernorm(l.ln2);
    init_layernorm(l.ln3);
    init_attention(l.self_attn, rng);
    init_attention(l.cross_attn, rng);
    init_ff(l.ff, rng);
  }
  init_layernorm(dec_ln_f);
  init_linear(plan_head, rng);
  init_linear(out_head, rng);
  init_linear(kw_proj, rng);
  init_linear(gate, rng);
}

// --- primitives --------------------------------------------------------------

void softmax_inplace(double* x, int n) {
  double max_v = x[0];
  for (int i = 1; i < n; ++i) max_v = std::max(max_v, x[i]);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    x[i] = std::exp(x[i] - max_v);
    sum += x[i];
  }
  const double inv = 1.0 / sum;
  for (int i = 0; i < n; ++i) x[i] *= inv;
}

double gelu(double x) { return x * normal_cdf(x); }

double gelu_derivative(double x) {
  const double inv_sqrt_2pi = 0.39894228040143267793994605993438;
  return normal_cdf(x) + x * inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

double fuse_distributions(const double* p_l, const double* p_k,
                          const double* g, int n, double* p_tilde) {
  double z = 0.0;
  for (int i = 0; i < n; ++i) {
    p_tilde[i] = p_l[i] * (1.0 - g[i]) + p_k[i] * g[i];
    z += p_tilde[i];
  }
  return z;
}

// --- encoder -----------------------------------------------------------------

EncodeCache encode(const ModelParameters& params, StyleToken style,
                   const std::vector<int>& leading_ids) {
  const ModelConfig& cfg = params.cfg;
  if (static_cast<int>(leading_ids.size()) > cfg.max_len - 1)
    throw DataError("leading context length " +
                    std::to_string(leading_ids.size()) + " exceeds max_len-1");
  EncodeCache cache;
  cache.ids.reserve(leading_ids.size() + 1);
  cache.ids.push_back(style_token_id(style));
  cache.ids.insert(cache.ids.end(), leading_ids.begin(), leading_ids.end());

  Matrix x = embed_rows(params.tok_emb, params.enc_pos, cache.ids,
                        cfg.vocab_size, cfg.max_len);
  cache.layers.resize(params.enc_layers.size());
  for (std::size_t l = 0; l < params.enc_layers.size(); ++l) {
    const EncLayerP& lp = params.enc_layers[l];
    EncLayerCache& lc = cache.layers[l];
    Matrix n1 = layernorm_fwd(x, lp.ln1, lc.ln1);
    Matrix a = attention_fwd(n1, n1, lp.attn, cfg.n_heads, false, lc.attn);
    add_into(x, a);
    Matrix n2 = layernorm_fwd(x, lp.ln2, lc.ln2);
    Matrix f = ff_fwd(n2, lp.ff, lc.ff);
    add_into(x, f);
  }
  cache.h = layernorm_fwd(x, params.enc_ln_f, cache.ln_f);
  return cache;
}

namespace {

// Backward through the encoder stack given d(enc.h); accumulates embeddings.
void encode_bwd(ModelParameters& params, const EncodeCache& cache,
                const Matrix& dh) {
  const ModelConfig& cfg = params.cfg;
  Matrix dx(dh.rows(), dh.cols());
  layernorm_bwd(dh, params.enc_ln_f, cache.ln_f, dx);
  for (int l = static_cast<int>(params.enc_layers.size()) - 1; l >= 0; --l) {
    EncLayerP& lp = params.enc_layers[static_cast<std::size_t>(l)];
    const EncLayerCache& lc = cache.layers[static_cast<std::size_t>(l)];
    Matrix dn2(dx.rows(), dx.cols());
    ff_bwd(dx, lp.ff, lc.ff, dn2);
    layernorm_bwd(dn2, lp.ln2, lc.ln2, dx);
    Matrix dn1(dx.rows(), dx.cols());
    attention_bwd(dx, lp.attn, lc.attn, cfg.n_heads, dn1, dn1);
    layernorm_bwd(dn1, lp.ln1, lc.ln1, dx);
  }
  embed_bwd(params.tok_emb, params.enc_pos, cache.ids, dx);
}

}  // namespace

// --- planning ----------------------------------------------------------------

PlanDistribution plan_distribution(const ModelParameters& params,
                                   const EncodeCache& enc) {
  const int v = params.cfg.vocab_size;
  Matrix h0(1, enc.h.cols());
  for (int j = 0; j < enc.h.cols(); ++j) h0(0, j) = enc.h(0, j);
  Matrix logits = linear_fwd(h0, params.plan_head);
  softmax_inplace(logits.row(0), v);
  PlanDistribution plan;
  plan.p_k.assign(logits.row(0), logits.row(0) + v);
  return plan;
}

double keyword_loss(const PlanDistribution& plan,
                    const std::vector<int>& target_ids) {
  std::vector<int> unique(target_ids);
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  if (unique.empty())
    throw DataError("keyword_loss: empty target set (skip this term)");
  const double w = 1.0 / static_cast<double>(unique.size());
  double loss = 0.0;
  for (int id : unique)
    loss -= w * std::log(plan.p_k[static_cast<std::size_t>(id)]);
  return loss;
}

double total_loss(double l_st, double l_k, double alpha) {
  if (alpha < 0) throw ConfigError("total_loss: alpha must be >= 0");
  return l_st + alpha * l_k;
}

double story_loss(const Matrix& fused_p, const std::vector<int>& gold) {
  if (static_cast<int>(gold.size()) != fused_p.rows())
    throw DataError("story_loss: gold length does not match step count");
  double loss = 0.0;
  for (int t = 0; t < fused_p.rows(); ++t)
    loss -= std::log(fused_p(t, gold[static_cast<std::size_t>(t)]));
  return loss;
}

// --- teacher-forced forward ---------------------------------------------------

SequenceForward forward_sequence(const ModelParameters& params,
                                 StyleToken style,
                                 const std::vector<int>& leading_ids,
                                 const std::vector<int>& dec_input) {
  const ModelConfig& cfg = params.cfg;
  if (dec_input.empty() || dec_input.front() != kBosId)
    throw DataError("decoder input must start with <bos>");
  SequenceForward fwd;
  fwd.enc = encode(params, style, leading_ids);
  fwd.plan = plan_distribution(params, fwd.enc);
  fwd.dec_ids = dec_input;

  const int m = static_cast<int>(dec_input.size());
  const int v = cfg.vocab_size;

  Matrix x = embed_rows(params.tok_emb, params.dec_pos, dec_input,
                        cfg.vocab_size, cfg.max_len);
  fwd.dec_layers.resize(params.dec_layers.size());
  for (std::size_t l = 0; l < params.dec_layers.size(); ++l) {
    const DecLayerP& lp = params.dec_layers[l];
    DecLayerCache& lc = fwd.dec_layers[l];
    Matrix n1 = layernorm_fwd(x, lp.ln1, lc.ln1);
    Matrix a = attention_fwd(n1, n1, lp.self_attn, cfg.n_heads, true,
                             lc.self_attn);
    add_into(x, a);
    Matrix n2 = layernorm_fwd(x, lp.ln2, lc.ln2);
    Matrix c = attention_fwd(n2, fwd.enc.h, lp.cross_attn, cfg.n_heads, false,
                             lc.cross_attn);
    add_into(x, c);
    Matrix n3 = layernorm_fwd(x, lp.ln3, lc.ln3);
    Matrix f = ff_fwd(n3, lp.ff, lc.ff);
    add_into(x, f);
  }
  fwd.s = layernorm_fwd(x, params.dec_ln_f, fwd.dec_ln_f);

  // Language-model head.
  fwd.p_l = linear_fwd(fwd.s, params.out_head);
  for (int t = 0; t < m; ++t) softmax_inplace(fwd.p_l.row(t), v);

  // Keyword projection r = w_r p_k + b_r, constant across steps.
  Matrix plan_row(1, v);
  for (int i = 0; i < v; ++i)
    plan_row(0, i) = fwd.plan.p_k[static_cast<std::size_t>(i)];
  fwd.r = linear_fwd(plan_row, params.kw_proj);

  // Gate g_t = sigmoid(w_g [r; s_t] + b_g), via column split of w_g.
  const int d_r = cfg.d_r;
  const int d = cfg.d_model;
  const Matrix w_g_r = slice_cols(params.gate.w.v, 0, d_r);
  const Matrix w_g_s = slice_cols(params.gate.w.v, d_r, d);
  std::vector<double> gate_bias(static_cast<std::size_t>(v));
  for (int i = 0; i < v; ++i) {
    double acc = 0.0;
    const double* wr = w_g_r.row(i);
    for (int j = 0; j < d_r; ++j) acc += wr[j] * fwd.r(0, j);
    gate_bias[static_cast<std::size_t>(i)] = acc + params.gate.b.v(0, i);
  }
  Matrix g_pre;
  kernels::matmul_nt(fwd.s, w_g_s, g_pre);
  fwd.g.resize(m, v);
  for (int t = 0; t < m; ++t)
    for (int i = 0; i < v; ++i)
      fwd.g(t, i) =
          sigmoid(g_pre(t, i) + gate_bias[static_cast<std::size_t>(i)]);

  // Fuse and renormalize.
  fwd.p.resize(m, v);
  fwd.z.assign(static_cast<std::size_t>(m), 0.0);
  for (int t = 0; t < m; ++t) {
    const double z = fuse_distributions(fwd.p_l.row(t), fwd.plan.p_k.data(),
                                        fwd.g.row(t), v, fwd.p.row(t));
    fwd.z[static_cast<std::size_t>(t)] = z;
    const double inv = 1.0 / z;
    for (int i = 0; i < v; ++i) fwd.p(t, i) *= inv;
  }
  return fwd;
}

LossBreakdown sequence_loss(const SequenceForward& fwd,
                            const std::vector<int>& targets,
                            const std::vector<int>& keyword_ids) {
  LossBreakdown out;
  out.l_st = story_loss(fwd.p, targets);
  if (!keyword_ids.empty()) {
    out.l_k = keyword_loss(fwd.plan, keyword_ids);
    out.has_keyword_loss = true;
  }
  return out;
}

// --- backward ------------------------------------------------------------------

void backward_sequence(ModelParameters& params, const SequenceForward& fwd,
                       const std::vector<int>& targets,
                       const std::vector<int>& keyword_ids, double alpha) {
  const ModelConfig& cfg = params.cfg;
  const int m = fwd.s.rows();
  const int v = cfg.vocab_size;
  const int d = cfg.d_model;
  const int d_r = cfg.d_r;

  // d(loss)/d(fused p) through the renormalization p = ptilde / z, then the
  // fusion into d p_l, d g and d p_k.
  Matrix dp_l(m, v), dg(m, v);
  std::vector<double> dpk(static_cast<std::size_t>(v), 0.0);
  for (int t = 0; t < m; ++t) {
    const int gold = targets[static_cast<std::size_t>(t)];
    const double p_gold = fwd.p(t, gold);
    const double z = fwd.z[static_cast<std::size_t>(t)];
    // dP has one entry -1/p_gold, so sum_j dP_j P_j = -1.
    const double row_dot = -1.0;
    for (int i = 0; i < v; ++i) {
      const double dp = (i == gold) ? -1.0 / p_gold : 0.0;
      const double dptilde = (dp - row_dot) / z;
      const double g = fwd.g(t, i);
      dp_l(t, i) = dptilde * (1.0 - g);
      dg(t, i) = dptilde * (fwd.plan.p_k[static_cast<std::size_t>(i)] -
                            fwd.p_l(t, i));
      dpk[static_cast<std::size_t>(i)] += dptilde * g;
    }
  }

  // Gate backward: da = dg * g * (1 - g).
  Matrix da(m, v);
  for (int t = 0; t < m; ++t)
    for (int i = 0; i < v; ++i) {
      const double g = fwd.g(t, i);
      da(t, i) = dg(t, i) * g * (1.0 - g);
    }

  std::vector<double> da_colsum(static_cast<std::size_t>(v), 0.0);
  for (int t = 0; t < m; ++t)
    for (int i = 0; i < v; ++i)
      da_colsum[static_cast<std::size_t>(i)] += da(t, i);

  const Matrix w_g_r = slice_cols(params.gate.w.v, 0, d_r);
  const Matrix w_g_s = slice_cols(params.gate.w.v, d_r, d);

  // d w_g[:, :d_r] += colsum(da) (x) r ; dr = w_g_r^T colsum(da)
  Matrix dw_g_r(v, d_r);
  Matrix dr(1, d_r);
  for (int i = 0; i < v; ++i) {
    const double c = da_colsum[static_cast<std::size_t>(i)];
    const double* wr = w_g_r.row(i);
    double* dwr = dw_g_r.row(i);
    for (int j = 0; j < d_r; ++j) {
      dwr[j] = c * fwd.r(0, j);
      dr(0, j) += c * wr[j];
    }
  }
  add_cols(params.gate.w.g, dw_g_r, 0);
  for (int i = 0; i < v; ++i)
    params.gate.b.g(0, i) += da_colsum[static_cast<std::size_t>(i)];

  // d w_g[:, d_r:] += da^T s ; ds += da w_g_s
  Matrix dw_g_s;
  kernels::matmul_tn(da, fwd.s, dw_g_s);
  add_cols(params.gate.w.g, dw_g_s, d_r);
  Matrix ds;
  kernels::matmul(da, w_g_s, ds);

  // Output head backward through row-wise softmax.
  Matrix dlogits_l(m, v);
  for (int t = 0; t < m; ++t) {
    double dot = 0.0;
    for (int i = 0; i < v; ++i) dot += dp_l(t, i) * fwd.p_l(t, i);
    for (int i = 0; i < v; ++i)
      dlogits_l(t, i) = fwd.p_l(t, i) * (dp_l(t, i) - dot);
  }
  linear_bwd(dlogits_l, fwd.s, params.out_head, ds);

  // Decoder stack backward; cross-attention feeds gradient into enc.h.
  Matrix dh(fwd.enc.h.rows(), fwd.enc.h.cols());
  Matrix dx(m, d);
  layernorm_bwd(ds, params.dec_ln_f, fwd.dec_ln_f, dx);
  for (int l = static_cast<int>(params.dec_layers.size()) - 1; l >= 0; --l) {
    DecLayerP& lp = params.dec_layers[static_cast<std::size_t>(l)];
    const DecLayerCache& lc = fwd.dec_layers[static_cast<std::size_t>(l)];
    Matrix dn3(m, d);
    ff_bwd(dx, lp.ff, lc.ff, dn3);
    layernorm_bwd(dn3, lp.ln3, lc.ln3, dx);
    Matrix dn2(m, d);
    attention_bwd(dx, lp.cross_attn, lc.cross_attn, cfg.n_heads, dn2, dh);
    layernorm_bwd(dn2, lp.ln2, lc.ln2, dx);
    Matrix dn1(m, d);
    attention_bwd(dx, lp.self_attn, lc.self_attn, cfg.n_heads, dn1, dn1);
    layernorm_bwd(dn1, lp.ln1, lc.ln1, dx);
  }
  embed_bwd(params.tok_emb, params.dec_pos, fwd.dec_ids, dx);

  // Keyword-loss gradient joins the accumulated d p_k.
  if (!keyword_ids.empty() && alpha != 0.0) {
    std::vector<int> unique(keyword_ids);
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    const double w = alpha / static_cast<double>(unique.size());
    for (int id : unique)
      dpk[static_cast<std::size_t>(id)] -=
          w / fwd.plan.p_k[static_cast<std::size_t>(id)];
  }

  // Keyword projection backward: r = w_r p_k + b_r.
  Matrix plan_row(1, v);
  for (int i = 0; i < v; ++i)
    plan_row(0, i) = fwd.plan.p_k[static_cast<std::size_t>(i)];
  Matrix dpk_row(1, v);
  for (int i = 0; i < v; ++i) dpk_row(0, i) = dpk[static_cast<std::size_t>(i)];
  linear_bwd(dr, plan_row, params.kw_proj, dpk_row);

  // Plan softmax backward into w_k and h_0.
  double dot = 0.0;
  for (int i = 0; i < v; ++i)
    dot += dpk_row(0, i) * fwd.plan.p_k[static_cast<std::size_t>(i)];
  Matrix dlogits_k(1, v);
  for (int i = 0; i < v; ++i)
    dlogits_k(0, i) =
        fwd.plan.p_k[static_cast<std::size_t>(i)] * (dpk_row(0, i) - dot);
  Matrix h0(1, d);
  for (int j = 0; j < d; ++j) h0(0, j) = fwd.enc.h(0, j);
  Matrix dh0(1, d);
  linear_bwd(dlogits_k, h0, params.plan_head, dh0);
  for (int j = 0; j < d; ++j) dh(0, j) += dh0(0, j);

  encode_bwd(params, fwd.enc, dh);
}

// --- incremental decoding ------------------------------------------------------

DecodeSession::DecodeSession(const ModelParameters& params,
                             const EncodeCache& enc,
                             const PlanDistribution& plan)
    : params_(params), enc_(enc), plan_(plan) {
  const ModelConfig& cfg = params.cfg;
  const int v = cfg.vocab_size;
  plan_row_.resize(1, v);
  for (int i = 0; i < v; ++i)
    plan_row_(0, i) = plan_.p_k[static_cast<std::size_t>(i)];
  r_ = linear_fwd(plan_row_, params.kw_proj);
  gate_bias_.assign(static_cast<std::size_t>(v), 0.0);
  for (int i = 0; i < v; ++i) {
    double acc = 0.0;
    const double* wr = params.gate.w.v.row(i);
    for (int j = 0; j < cfg.d_r; ++j) acc += wr[j] * r_(0, j);
    gate_bias_[static_cast<std::size_t>(i)] = acc + params.gate.b.v(0, i);
  }
  kv_.resize(params.dec_layers.size());
  for (std::size_t l = 0; l < params.dec_layers.size(); ++l) {
    const DecLayerP& lp = params.dec_layers[l];
    kv_[l].cross_k = linear_fwd(enc.h, lp.cross_attn.k);
    kv_[l].cross_v = linear_fwd(enc.h, lp.cross_attn.v);
    kv_[l].self_k.resize(cfg.max_len, cfg.d_model);
    kv_[l].self_v.resize(cfg.max_len, cfg.d_model);
  }
}

StepOutput DecodeSession::step(int token_id) {
  const ModelConfig& cfg = params_.cfg;
  const int d = cfg.d_model;
  const int v = cfg.vocab_size;
  const int d_k = d / cfg.n_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d_k));
  const int t = static_cast<int>(inputs_.size());
  if (t >= cfg.max_len) throw DataError("decode step past max_len");
  if (t == 0 && token_id != kBosId)
    throw DataError("decode prefix must start with <bos>");
  if (token_id < 0 || token_id >= v)
    throw DataError("token id out of range: " + std::to_string(token_id));
  inputs_.push_back(token_id);

  std::vector<double> x(static_cast<std::size_t>(d));
  {
    const double* e = params_.tok_emb.v.row(token_id);
    const double* pr = params_.dec_pos.v.row(t);
    for (int j = 0; j < d; ++j) x[static_cast<std::size_t>(j)] = e[j] + pr[j];
  }

  std::vector<double> n(static_cast<std::size_t>(d)),
      q(static_cast<std::size_t>(d)), attn_out(static_cast<std::size_t>(d)),
      proj(static_cast<std::size_t>(d));
  std::vector<double> ff_pre(static_cast<std::size_t>(cfg.d_ff)),
      ff_out(static_cast<std::size_t>(d));
  for (std::size_t l = 0; l < params_.dec_layers.size(); ++l) {
    const DecLayerP& lp = params_.dec_layers[l];
    LayerKV& kv = kv_[l];
    // causal self-attention over cached rows 0..t
    layernorm_row(x.data(), lp.ln1, d, n.data());
    linear_row(n.data(), lp.self_attn.q, d, q.data());
    linear_row(n.data(), lp.self_attn.k, d, kv.self_k.row(t));
    linear_row(n.data(), lp.self_attn.v, d, kv.self_v.row(t));
    for (int h = 0; h < cfg.n_heads; ++h) {
      std::vector<double> scores(static_cast<std::size_t>(t + 1));
      const double* qh = q.data() + h * d_k;
      for (int j = 0; j <= t; ++j) {
        const double* kj = kv.self_k.row(j) + h * d_k;
        double s = 0.0;
        for (int c = 0; c < d_k; ++c) s += qh[c] * kj[c];
        scores[static_cast<std::size_t>(j)] = s * scale;
      }
      softmax_inplace(scores.data(), t + 1);
      double* ctx = attn_out.data() + h * d_k;
      for (int c = 0; c < d_k; ++c) ctx[c] = 0.0;
      for (int j = 0; j <= t; ++j) {
        const double pj = scores[static_cast<std::size_t>(j)];
        const double* vj = kv.self_v.row(j) + h * d_k;
        for (int c = 0; c < d_k; ++c) ctx[c] += pj * vj[c];
      }
    }
    linear_row(attn_out.data(), lp.self_attn.o, d, proj.data());
    for (int j = 0; j < d; ++j) x[static_cast<std::size_t>(j)] += proj[j];

    // cross-attention over the encoder states
    layernorm_row(x.data(), lp.ln2, d, n.data());
    linear_row(n.data(), lp.cross_attn.q, d, q.data());
    const int tk = kv.cross_k.rows();
    for (int h = 0; h < cfg.n_heads; ++h) {
      std::vector<double> scores(static_cast<std::size_t>(tk));
      const double* qh = q.data() + h * d_k;
      for (int j = 0; j < tk; ++j) {
        const double* kj = kv.cross_k.row(j) + h * d_k;
        double s = 0.0;
        for (int c = 0; c < d_k; ++c) s += qh[c] * kj[c];
        scores[static_cast<std::size_t>(j)] = s * scale;
      }
      softmax_inplace(scores.data(), tk);
      double* ctx = attn_out.data() + h * d_k;
      for (int c = 0; c < d_k; ++c) ctx[c] = 0.0;
      for (int j = 0; j < tk; ++j) {
        const double pj = scores[static_cast<std::size_t>(j)];
        const double* vj = kv.cross_v.row(j) + h * d_k;
        for (int c = 0; c < d_k; ++c) ctx[c] += pj * vj[c];
      }
    }
    linear_row(attn_out.data(), lp.cross_attn.o, d, proj.data());
    for (int j = 0; j < d; ++j) x[static_cast<std::size_t>(j)] += proj[j];

    // feed-forward
    layernorm_row(x.data(), lp.ln3, d, n.data());
    linear_row(n.data(), lp.ff.fc1, d, ff_pre.data());
    for (int j = 0; j < cfg.d_ff; ++j)
      ff_pre[static_cast<std::size_t>(j)] =
          gelu(ff_pre[static_cast<std::size_t>(j)]);
    linear_row(ff_pre.data(), lp.ff.fc2, cfg.d_ff, ff_out.data());
    for (int j = 0; j < d; ++j) x[static_cast<std::size_t>(j)] += ff_out[j];
  }

  StepOutput out;
  out.s_t.assign(static_cast<std::size_t>(d), 0.0);
  layernorm_row(x.data(), params_.dec_ln_f, d, out.s_t.data());

  out.p_l.assign(static_cast<std::size_t>(v), 0.0);
  linear_row(out.s_t.data(), params_.out_head, d, out.p_l.data());
  softmax_inplace(out.p_l.data(), v);

  out.g_t.assign(static_cast<std::size_t>(v), 0.0);
  for (int i = 0; i < v; ++i) {
    const double* wg = params_.gate.w.v.row(i) + cfg.d_r;
    double acc = 0.0;
    for (int j = 0; j < d; ++j)
      acc += wg[j] * out.s_t[static_cast<std::size_t>(j)];
    out.g_t[static_cast<std::size_t>(i)] =
        sigmoid(acc + gate_bias_[static_cast<std::size_t>(i)]);
  }

  out.p.assign(static_cast<std::size_t>(v), 0.0);
  const double z = fuse_distributions(out.p_l.data(), plan_.p_k.data(),
                                      out.g_t.data(), v, out.p.data());
  const double inv = 1.0 / z;
  for (int i = 0; i < v; ++i) out.p[static_cast<std::size_t>(i)] *= inv;
  return out;
}

StepOutput decode_step(const ModelParameters& params, const EncodeCache& enc,
                       const PlanDistribution& plan,
                       const std::vector<int>& prefix) {
  if (prefix.empty() || prefix.front() != kBosId)
    throw DataError("decode prefix must start with <bos>");
  if (static_cast<int>(prefix.size()) > params.cfg.max_len)
    throw DataError("decode prefix exceeds max_len");
  DecodeSession session(params, enc, plan);
  StepOutput out;
  for (int id : prefix) out = session.step(id);
  return out;
}

// --- checkpointing --------------------------------------------------------------

void save_checkpoint(const std::string& path, const ModelParameters& params,
                     std::uint64_t vocab_hash) {
  json header;
  header["version"] = 1;
  header["config"] = json::parse(params.cfg.to_json());
  header["vocab_hash"] = to_hex(vocab_hash);
  json tensors = json::array();
  for (const Tensor* t : params.all()) {
    json jt;
    jt["name"] = t->name;
    jt["rows"] = t->v.rows();
    jt["cols"] = t->v.cols();
    tensors.push_back(jt);
  }
  header["tensors"] = tensors;
  const std::string header_text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  const char magic[8] = {'S', 'S', 'G', 'C', 'K', 'P', 'T', '\x01'};
  out.write(magic, 8);
  const std::uint64_t hlen = header_text.size();
  out.write(reinterpret_cast<const char*>(&hlen), 8);
  out.write(header_text.data(), static_cast<std::streamsize>(hlen));
  for (const Tensor* t : params.all())
    out.write(reinterpret_cast<const char*>(t->v.data()),
              static_cast<std::streamsize>(t->v.size() * sizeof(double)));
  if (!out) throw IoError("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  const char expect[8] = {'S', 'S', 'G', 'C', 'K', 'P', 'T', '\x01'};
  if (!in || std::memcmp(magic, expect, 8) != 0)
    throw FormatError("not a checkpoint file: " + path);
  std::uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), 8);
  std::string header_text(hlen, '\0');
  in.read(header_text.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw FormatError("truncated checkpoint header: " + path);
  json header = json::parse(header_text);
  if (header.at("version").get<int>() != 1)
    throw FormatError("unsupported checkpoint version");

  ModelConfig cfg = ModelConfig::from_json(header.at("config").dump());
  Checkpoint ckpt{ModelParameters(cfg), 0};
  ckpt.vocab_hash =
      std::stoull(header.at("vocab_hash").get<std::string>(), nullptr, 16);

  const auto& tensors = header.at("tensors");
  auto regs = ckpt.params.all();
  if (tensors.size() != regs.size())
    throw FormatError("checkpoint tensor count mismatch");
  for (std::size_t i = 0; i < regs.size(); ++i) {
    const auto& jt = tensors[i];
    if (jt.at("name").get<std::string>() != regs[i]->name ||
        jt.at("rows").get<int>() != regs[i]->v.rows() ||
        jt.at("cols").get<int>() != regs[i]->v.cols())
      throw FormatError("checkpoint tensor layout mismatch at " +
                        regs[i]->name);
    in.read(reinterpret_cast<char*>(regs[i]->v.data()),
            static_cast<std::streamsize>(regs[i]->v.size() * sizeof(double)));
  }
  if (!in) throw FormatError("truncated checkpoint data: " + path);
  return ckpt;
}

}  // namespace storystyle
