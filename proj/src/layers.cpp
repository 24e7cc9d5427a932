#include "storystyle/layers.hpp"

#include <cmath>

namespace storystyle::layers {

namespace {
constexpr double kLnEps = 1e-5;
}

void setup_linear(LinearP& lin, const std::string& name, int out, int in) {
  lin.w.setup(name + ".w", out, in);
  lin.b.setup(name + ".b", 1, out);
}

void setup_layernorm(LayerNormP& ln, const std::string& name, int d) {
  ln.gamma.setup(name + ".gamma", 1, d);
  ln.beta.setup(name + ".beta", 1, d);
}

void setup_attention(AttentionP& a, const std::string& name, int d) {
  setup_linear(a.q, name + ".q", d, d);
  setup_linear(a.k, name + ".k", d, d);
  setup_linear(a.v, name + ".v", d, d);
  setup_linear(a.o, name + ".o", d, d);
}

void setup_ff(FeedForwardP& ff, const std::string& name, int d, int d_ff) {
  setup_linear(ff.fc1, name + ".fc1", d_ff, d);
  setup_linear(ff.fc2, name + ".fc2", d, d_ff);
}

void init_normal(Matrix& m, Rng& rng, double stddev) {
  for (std::size_t i = 0; i < m.size(); ++i)
    m.data()[i] = rng.normal() * stddev;
}

void init_linear(LinearP& lin, Rng& rng) {
  const double stddev =
      std::sqrt(2.0 / static_cast<double>(lin.w.v.rows() + lin.w.v.cols()));
  init_normal(lin.w.v, rng, stddev);
  lin.b.v.fill(0.0);
}

void init_layernorm(LayerNormP& ln) {
  ln.gamma.v.fill(1.0);
  ln.beta.v.fill(0.0);
}

void init_attention(AttentionP& a, Rng& rng) {
  init_linear(a.q, rng);
  init_linear(a.k, rng);
  init_linear(a.v, rng);
  init_linear(a.o, rng);
}

void init_ff(FeedForwardP& ff, Rng& rng) {
  init_linear(ff.fc1, rng);
  init_linear(ff.fc2, rng);
}

void collect(const LinearP& lin, std::vector<const Tensor*>& out) {
  out.push_back(&lin.w);
  out.push_back(&lin.b);
}
void collect(const LayerNormP& ln, std::vector<const Tensor*>& out) {
  out.push_back(&ln.gamma);
  out.push_back(&ln.beta);
}
void collect(const AttentionP& a, std::vector<const Tensor*>& out) {
  collect(a.q, out);
  collect(a.k, out);
  collect(a.v, out);
  collect(a.o, out);
}
void collect(const FeedForwardP& ff, std::vector<const Tensor*>& out) {
  collect(ff.fc1, out);
  collect(ff.fc2, out);
}

Matrix linear_fwd(const Matrix& x, const LinearP& lin) {
  Matrix y;
  kernels::matmul_nt(x, lin.w.v, y);
  for (int i = 0; i < y.rows(); ++i) {
    double* row = y.row(i);
    const double* b = lin.b.v.row(0);
    for (int j = 0; j < y.cols(); ++j) row[j] += b[j];
  }
  return y;
}

void linear_bwd(const Matrix& dy, const Matrix& x, LinearP& lin, Matrix& dx) {
  kernels::matmul_tn_acc(dy, x, lin.w.g);
  for (int i = 0; i < dy.rows(); ++i) {
    const double* row = dy.row(i);
    double* bg = lin.b.g.row(0);
    for (int j = 0; j < dy.cols(); ++j) bg[j] += row[j];
  }
  Matrix d;
  kernels::matmul(dy, lin.w.v, d);
  for (std::size_t i = 0; i < d.size(); ++i) dx.data()[i] += d.data()[i];
}

Matrix layernorm_fwd(const Matrix& x, const LayerNormP& ln,
                     LayerNormCache& cache) {
  const int t_len = x.rows();
  const int d = x.cols();
  cache.x = x;
  cache.xhat.resize(t_len, d);
  cache.rstd.assign(static_cast<std::size_t>(t_len), 0.0);
  Matrix y(t_len, d);
  const double* gamma = ln.gamma.v.row(0);
  const double* beta = ln.beta.v.row(0);
  for (int i = 0; i < t_len; ++i) {
    const double* xr = x.row(i);
    double mean = 0.0;
    for (int j = 0; j < d; ++j) mean += xr[j];
    mean /= d;
    double var = 0.0;
    for (int j = 0; j < d; ++j) var += (xr[j] - mean) * (xr[j] - mean);
    var /= d;
    const double rstd = 1.0 / std::sqrt(var + kLnEps);
    cache.rstd[static_cast<std::size_t>(i)] = rstd;
    double* xh = cache.xhat.row(i);
    double* yr = y.row(i);
    for (int j = 0; j < d; ++j) {
      xh[j] = (xr[j] - mean) * rstd;
      yr[j] = xh[j] * gamma[j] + beta[j];
    }
  }
  return y;
}

void layernorm_bwd(const Matrix& dy, LayerNormP& ln,
                   const LayerNormCache& cache, Matrix& dx) {
  const int t_len = dy.rows();
  const int d = dy.cols();
  const double* gamma = ln.gamma.v.row(0);
  double* dgamma = ln.gamma.g.row(0);
  double* dbeta = ln.beta.g.row(0);
  for (int i = 0; i < t_len; ++i) {
    const double* dyr = dy.row(i);
    const double* xh = cache.xhat.row(i);
    const double rstd = cache.rstd[static_cast<std::size_t>(i)];
    double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
    for (int j = 0; j < d; ++j) {
      dgamma[j] += dyr[j] * xh[j];
      dbeta[j] += dyr[j];
      const double dxhat = dyr[j] * gamma[j];
      mean_dxhat += dxhat;
      mean_dxhat_xhat += dxhat * xh[j];
    }
    mean_dxhat /= d;
    mean_dxhat_xhat /= d;
    double* dxr = dx.row(i);
    for (int j = 0; j < d; ++j) {
      const double dxhat = dyr[j] * gamma[j];
      dxr[j] += rstd * (dxhat - mean_dxhat - xh[j] * mean_dxhat_xhat);
    }
  }
}

Matrix attention_fwd(const Matrix& xq, const Matrix& xkv, const AttentionP& p,
                     int n_heads, bool causal, AttentionCache& cache) {
  const int d = xq.cols();
  const int d_k = d / n_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d_k));
  cache.xq = xq;
  cache.xkv = xkv;
  cache.causal = causal;
  cache.q = linear_fwd(xq, p.q);
  cache.k = linear_fwd(xkv, p.k);
  cache.v = linear_fwd(xkv, p.v);
  const int tq = xq.rows();
  const int tk = xkv.rows();
  cache.ctx.resize(tq, d);
  cache.probs.assign(static_cast<std::size_t>(n_heads), Matrix());
  for (int h = 0; h < n_heads; ++h) {
    Matrix& probs = cache.probs[static_cast<std::size_t>(h)];
    probs.resize(tq, tk);
    for (int i = 0; i < tq; ++i) {
      const int limit = causal ? i + 1 : tk;
      const double* qi = cache.q.row(i) + h * d_k;
      double* pr = probs.row(i);
      for (int j = 0; j < limit; ++j) {
        const double* kj = cache.k.row(j) + h * d_k;
        double s = 0.0;
        for (int c = 0; c < d_k; ++c) s += qi[c] * kj[c];
        pr[j] = s * scale;
      }
      softmax_inplace(pr, limit);
      double* ctx = cache.ctx.row(i) + h * d_k;
      for (int c = 0; c < d_k; ++c) ctx[c] = 0.0;
      for (int j = 0; j < limit; ++j) {
        const double pj = pr[j];
        const double* vj = cache.v.row(j) + h * d_k;
        for (int c = 0; c < d_k; ++c) ctx[c] += pj * vj[c];
      }
    }
  }
  return linear_fwd(cache.ctx, p.o);
}

void attention_bwd(const Matrix& dy, AttentionP& p, const AttentionCache& cache,
                   int n_heads, Matrix& dxq, Matrix& dxkv) {
  const int d = cache.xq.cols();
  const int d_k = d / n_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d_k));
  const int tq = cache.xq.rows();
  const int tk = cache.xkv.rows();

  Matrix dctx(tq, d);
  linear_bwd(dy, cache.ctx, p.o, dctx);

  Matrix dq(tq, d), dk(tk, d), dv(tk, d);
  for (int h = 0; h < n_heads; ++h) {
    const Matrix& probs = cache.probs[static_cast<std::size_t>(h)];
    for (int i = 0; i < tq; ++i) {
      const int limit = cache.causal ? i + 1 : tk;
      const double* dctx_i = dctx.row(i) + h * d_k;
      const double* pr = probs.row(i);
      double dot = 0.0;
      std::vector<double> dprobs(static_cast<std::size_t>(limit));
      for (int j = 0; j < limit; ++j) {
        const double* vj = cache.v.row(j) + h * d_k;
        double s = 0.0;
        for (int c = 0; c < d_k; ++c) s += dctx_i[c] * vj[c];
        dprobs[static_cast<std::size_t>(j)] = s;
        dot += s * pr[j];
      }
      double* dq_i = dq.row(i) + h * d_k;
      const double* q_i = cache.q.row(i) + h * d_k;
      for (int j = 0; j < limit; ++j) {
        const double ds =
            pr[j] * (dprobs[static_cast<std::size_t>(j)] - dot) * scale;
        const double* kj = cache.k.row(j) + h * d_k;
        double* dk_j = dk.row(j) + h * d_k;
        double* dv_j = dv.row(j) + h * d_k;
        const double pj = pr[j];
        for (int c = 0; c < d_k; ++c) {
          dq_i[c] += ds * kj[c];
          dk_j[c] += ds * q_i[c];
          dv_j[c] += pj * dctx_i[c];
        }
      }
    }
  }
  linear_bwd(dq, cache.xq, p.q, dxq);
  linear_bwd(dk, cache.xkv, p.k, dxkv);
  linear_bwd(dv, cache.xkv, p.v, dxkv);
}

Matrix ff_fwd(const Matrix& x, const FeedForwardP& p, FeedForwardCache& cache) {
  cache.x = x;
  cache.pre = linear_fwd(x, p.fc1);
  cache.act = cache.pre;
  for (std::size_t i = 0; i < cache.act.size(); ++i)
    cache.act.data()[i] = gelu(cache.pre.data()[i]);
  return linear_fwd(cache.act, p.fc2);
}

void ff_bwd(const Matrix& dy, FeedForwardP& p, const FeedForwardCache& cache,
            Matrix& dx) {
  Matrix dact(cache.act.rows(), cache.act.cols());
  linear_bwd(dy, cache.act, p.fc2, dact);
  for (std::size_t i = 0; i < dact.size(); ++i)
    dact.data()[i] *= gelu_derivative(cache.pre.data()[i]);
  linear_bwd(dact, cache.x, p.fc1, dx);
}

Matrix embed_rows(const Tensor& tok_emb, const Tensor& pos,
                  const std::vector<int>& ids, int vocab_size, int max_len) {
  if (static_cast<int>(ids.size()) > max_len)
    throw DataError("sequence length " + std::to_string(ids.size()) +
                    " exceeds max_len " + std::to_string(max_len));
  Matrix x(static_cast<int>(ids.size()), tok_emb.v.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const int id = ids[i];
    if (id < 0 || id >= vocab_size)
      throw DataError("token id out of range: " + std::to_string(id));
    const double* e = tok_emb.v.row(id);
    const double* pr = pos.v.row(static_cast<int>(i));
    double* xr = x.row(static_cast<int>(i));
    for (int j = 0; j < x.cols(); ++j) xr[j] = e[j] + pr[j];
  }
  return x;
}

void embed_bwd(Tensor& tok_emb, Tensor& pos, const std::vector<int>& ids,
               const Matrix& dx) {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const double* dr = dx.row(static_cast<int>(i));
    double* eg = tok_emb.g.row(ids[i]);
    double* pg = pos.g.row(static_cast<int>(i));
    for (int j = 0; j < dx.cols(); ++j) {
      eg[j] += dr[j];
      pg[j] += dr[j];
    }
  }
}

void add_into(Matrix& dst, const Matrix& src) {
  for (std::size_t i = 0; i < dst.size(); ++i)
    dst.data()[i] += src.data()[i];
}

Matrix slice_cols(const Matrix& m, int col_begin, int n_cols) {
  Matrix out(m.rows(), n_cols);
  for (int i = 0; i < m.rows(); ++i) {
    const double* src = m.row(i) + col_begin;
    double* dst = out.row(i);
    for (int j = 0; j < n_cols; ++j) dst[j] = src[j];
  }
  return out;
}

void add_cols(Matrix& dst, const Matrix& src, int col_begin) {
  for (int i = 0; i < src.rows(); ++i) {
    double* d = dst.row(i) + col_begin;
    const double* s = src.row(i);
    for (int j = 0; j < src.cols(); ++j) d[j] += s[j];
  }
}

void layernorm_row(const double* x, const LayerNormP& ln, int d, double* y) {
  double mean = 0.0;
  for (int j = 0; j < d; ++j) mean += x[j];
  mean /= d;
  double var = 0.0;
  for (int j = 0; j < d; ++j) var += (x[j] - mean) * (x[j] - mean);
  var /= d;
  const double rstd = 1.0 / std::sqrt(var + kLnEps);
  const double* gamma = ln.gamma.v.row(0);
  const double* beta = ln.beta.v.row(0);
  for (int j = 0; j < d; ++j) y[j] = (x[j] - mean) * rstd * gamma[j] + beta[j];
}

void linear_row(const double* x, const LinearP& lin, int in, double* y) {
  const int out = lin.w.v.rows();
  for (int i = 0; i < out; ++i) {
    const double* w = lin.w.v.row(i);
    double acc = 0.0;
    for (int j = 0; j < in; ++j) acc += x[j] * w[j];
    y[i] = acc + lin.b.v(0, i);
  }
}

}  // namespace storystyle::layers
