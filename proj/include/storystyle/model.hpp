#ifndef STORYSTYLE_MODEL_HPP
#define STORYSTYLE_MODEL_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "storystyle/corpus.hpp"
#include "storystyle/kernels.hpp"
#include "storystyle/matrix.hpp"

namespace storystyle {

struct ModelConfig {
  int vocab_size = 0;
  int d_model = 128;
  int n_layers_enc = 2;
  int n_layers_dec = 2;
  int n_heads = 4;
  int d_ff = 256;
  int d_r = 64;
  int max_len = 120;

  void validate() const;
  std::string to_json() const;
  static ModelConfig from_json(const std::string& json_text);
};

/// A named parameter tensor and its gradient accumulator.
struct Tensor {
  std::string name;
  Matrix v;
  Matrix g;

  void setup(const std::string& n, int rows, int cols) {
    name = n;
    v.resize(rows, cols);
    g.resize(rows, cols);
  }
};

struct LinearP {
  Tensor w;  // out x in; y = x w^T + b
  Tensor b;  // 1 x out
};

struct LayerNormP {
  Tensor gamma;  // 1 x d
  Tensor beta;   // 1 x d
};

struct AttentionP {
  LinearP q, k, v, o;
};

struct FeedForwardP {
  LinearP fc1, fc2;
};

struct EncLayerP {
  LayerNormP ln1, ln2;
  AttentionP attn;
  FeedForwardP ff;
};

struct DecLayerP {
  LayerNormP ln1, ln2, ln3;
  AttentionP self_attn, cross_attn;
  FeedForwardP ff;
};

/// All trainable parameters. Pre-LN transformer encoder/decoder plus the
/// planning head (w_k), output head (w_s), keyword projection (w_r) and the
/// per-vocabulary gate (w_g over the concatenation [r_t; s_t]).
struct ModelParameters {
  ModelConfig cfg;
  Tensor tok_emb;   // |V| x d, shared by encoder and decoder inputs
  Tensor enc_pos;   // max_len x d
  Tensor dec_pos;   // max_len x d
  std::vector<EncLayerP> enc_layers;
  LayerNormP enc_ln_f;
  std::vector<DecLayerP> dec_layers;
  LayerNormP dec_ln_f;
  LinearP plan_head;  // w_k: |V| x d
  LinearP out_head;   // w_s: |V| x d
  LinearP kw_proj;    // w_r: d_r x |V|
  LinearP gate;       // w_g: |V| x (d_r + d)

  explicit ModelParameters(const ModelConfig& config);

  void init(Rng& rng);
  void zero_grad();

  /// Fixed-order registry; checkpointing and the optimizer iterate it.
  std::vector<Tensor*> all();
  std::vector<const Tensor*> all() const;

  std::size_t num_parameters() const;
};

// --- forward caches ---------------------------------------------------------

struct LayerNormCache {
  Matrix x;     // input
  Matrix xhat;  // normalized
  std::vector<double> rstd;
};

struct AttentionCache {
  Matrix xq, xkv;  // inputs as fed to the projections
  Matrix q, k, v;  // T x d, heads packed
  std::vector<Matrix> probs;  // per head, Tq x Tk (lower-triangular if causal)
  Matrix ctx;      // Tq x d, pre-output-projection
  bool causal = false;
};

struct FeedForwardCache {
  Matrix x, pre, act;
};

struct EncLayerCache {
  LayerNormCache ln1, ln2;
  AttentionCache attn;
  FeedForwardCache ff;
};

struct DecLayerCache {
  LayerNormCache ln1, ln2, ln3;
  AttentionCache self_attn, cross_attn;
  FeedForwardCache ff;
};

struct EncodeCache {
  std::vector<int> ids;  // [style; leading]
  std::vector<EncLayerCache> layers;
  LayerNormCache ln_f;
  Matrix h;  // (n+1) x d final states
};

/// Softmaxed keyword distribution over the vocabulary (Eq.-2-style head).
struct PlanDistribution {
  std::vector<double> p_k;
};

/// One decoding position: decoder state, language-model distribution, gate,
/// and the fused, renormalized distribution actually used for loss/sampling.
struct StepOutput {
  std::vector<double> s_t;
  std::vector<double> p_l;
  std::vector<double> g_t;
  std::vector<double> p;
};

struct SequenceForward {
  EncodeCache enc;
  PlanDistribution plan;
  std::vector<int> dec_ids;  // [bos; y_<m]
  std::vector<DecLayerCache> dec_layers;
  LayerNormCache dec_ln_f;
  Matrix s;        // m x d decoder states
  Matrix p_l;      // m x |V|
  Matrix g;        // m x |V|
  Matrix p;        // m x |V| fused + renormalized
  std::vector<double> z;  // per-row fused mass before renormalization
  Matrix r;        // 1 x d_r keyword projection
};

// --- operations -------------------------------------------------------------

/// Bidirectional self-attention over [l; x]; returns n+1 states.
EncodeCache encode(const ModelParameters& params, StyleToken style,
                   const std::vector<int>& leading_ids);

PlanDistribution plan_distribution(const ModelParameters& params,
                                   const EncodeCache& enc);

/// Cross-entropy of the plan against a uniform distribution over the unique
/// target ids. Throws DataError when targets are empty (callers skip the term).
double keyword_loss(const PlanDistribution& plan,
                    const std::vector<int>& target_ids);

/// Stateless single-step decode of the next-token distribution after prefix.
/// prefix must start with <bos> and be shorter than max_len.
StepOutput decode_step(const ModelParameters& params, const EncodeCache& enc,
                       const PlanDistribution& plan,
                       const std::vector<int>& prefix);

/// Teacher-forced full-sequence forward. dec_input = [<bos>; y_1..y_{m-1}].
SequenceForward forward_sequence(const ModelParameters& params,
                                 StyleToken style,
                                 const std::vector<int>& leading_ids,
                                 const std::vector<int>& dec_input);

/// Sum of -log p_t[gold_t] over the sequence.
double story_loss(const Matrix& fused_p, const std::vector<int>& gold);

double total_loss(double l_st, double l_k, double alpha);

struct LossBreakdown {
  double l_st = 0.0;
  double l_k = 0.0;  // 0 when skipped
  bool has_keyword_loss = false;
  double total(double alpha) const {
    return has_keyword_loss ? total_loss(l_st, l_k, alpha) : l_st;
  }
};

LossBreakdown sequence_loss(const SequenceForward& fwd,
                            const std::vector<int>& targets,
                            const std::vector<int>& keyword_ids);

/// Accumulates gradients of total loss into params; forward state from fwd.
void backward_sequence(ModelParameters& params, const SequenceForward& fwd,
                       const std::vector<int>& targets,
                       const std::vector<int>& keyword_ids, double alpha);

/// Incremental decoder with per-layer KV caches; bit-identical to the
/// teacher-forced path position by position.
class DecodeSession {
 public:
  DecodeSession(const ModelParameters& params, const EncodeCache& enc,
                const PlanDistribution& plan);

  /// Feeds one more input token (first call must pass <bos>) and returns the
  /// distribution over the next token.
  StepOutput step(int token_id);

  int length() const { return static_cast<int>(inputs_.size()); }

 private:
  const ModelParameters& params_;
  const EncodeCache& enc_;
  PlanDistribution plan_;
  Matrix plan_row_;  // 1 x |V|
  Matrix r_;         // 1 x d_r
  std::vector<double> gate_bias_;  // w_g[:, :d_r] r + b_g, per vocab entry
  std::vector<int> inputs_;
  struct LayerKV {
    Matrix self_k, self_v;    // grows one row per step
    Matrix cross_k, cross_v;  // fixed
  };
  std::vector<LayerKV> kv_;
};

// --- numerically stable primitives (shared with tests) -----------------------

/// Max-subtracting softmax over a contiguous range.
void softmax_inplace(double* x, int n);

/// p_tilde[i] = p_l[i] * (1 - g[i]) + p_k[i] * g[i]; returns sum(p_tilde).
/// Both decode paths and the tests share this exact fusion arithmetic.
double fuse_distributions(const double* p_l, const double* p_k,
                          const double* g, int n, double* p_tilde);

/// Exact GELU: x * Phi(x).
double gelu(double x);
double gelu_derivative(double x);

// --- checkpointing -----------------------------------------------------------

/// Versioned binary container: magic+version, JSON header (config, vocabulary
/// hash, named tensor shapes), then raw little-endian float64 data.
void save_checkpoint(const std::string& path, const ModelParameters& params,
                     std::uint64_t vocab_hash);

struct Checkpoint {
  ModelParameters params;
  std::uint64_t vocab_hash;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace storystyle

#endif
