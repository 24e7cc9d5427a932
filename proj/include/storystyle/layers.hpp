#ifndef STORYSTYLE_LAYERS_HPP
#define STORYSTYLE_LAYERS_HPP

#include "storystyle/model.hpp"

namespace storystyle::layers {

// Transformer building blocks shared by the generation model and the
// SSC-lite classifier. Forward functions fill caches; backward functions
// accumulate parameter gradients and add input gradients into dx.

Matrix linear_fwd(const Matrix& x, const LinearP& lin);
void linear_bwd(const Matrix& dy, const Matrix& x, LinearP& lin, Matrix& dx);

Matrix layernorm_fwd(const Matrix& x, const LayerNormP& ln,
                     LayerNormCache& cache);
void layernorm_bwd(const Matrix& dy, LayerNormP& ln,
                   const LayerNormCache& cache, Matrix& dx);

Matrix attention_fwd(const Matrix& xq, const Matrix& xkv, const AttentionP& p,
                     int n_heads, bool causal, AttentionCache& cache);
void attention_bwd(const Matrix& dy, AttentionP& p, const AttentionCache& cache,
                   int n_heads, Matrix& dxq, Matrix& dxkv);

Matrix ff_fwd(const Matrix& x, const FeedForwardP& p, FeedForwardCache& cache);
void ff_bwd(const Matrix& dy, FeedForwardP& p, const FeedForwardCache& cache,
            Matrix& dx);

Matrix embed_rows(const Tensor& tok_emb, const Tensor& pos,
                  const std::vector<int>& ids, int vocab_size, int max_len);
void embed_bwd(Tensor& tok_emb, Tensor& pos, const std::vector<int>& ids,
               const Matrix& dx);

void add_into(Matrix& dst, const Matrix& src);
Matrix slice_cols(const Matrix& m, int col_begin, int n_cols);
void add_cols(Matrix& dst, const Matrix& src, int col_begin);

/// Single-row variants matching the batched summation order bit for bit.
void layernorm_row(const double* x, const LayerNormP& ln, int d, double* y);
void linear_row(const double* x, const LinearP& lin, int in, double* y);

void setup_linear(LinearP& lin, const std::string& name, int out, int in);
void setup_layernorm(LayerNormP& ln, const std::string& name, int d);
void setup_attention(AttentionP& a, const std::string& name, int d);
void setup_ff(FeedForwardP& ff, const std::string& name, int d, int d_ff);

void init_normal(Matrix& m, Rng& rng, double stddev);
void init_linear(LinearP& lin, Rng& rng);
void init_layernorm(LayerNormP& ln);
void init_attention(AttentionP& a, Rng& rng);
void init_ff(FeedForwardP& ff, Rng& rng);

void collect(const LinearP& lin, std::vector<const Tensor*>& out);
void collect(const LayerNormP& ln, std::vector<const Tensor*>& out);
void collect(const AttentionP& a, std::vector<const Tensor*>& out);
void collect(const FeedForwardP& ff, std::vector<const Tensor*>& out);

}  // namespace storystyle::layers

#endif
