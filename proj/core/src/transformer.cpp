#include "mmrec/transformer.hpp"

#include <cmath>
#include <string>

#include "mmrec/errors.hpp"

namespace mmrec {

TransformerBlockParams TransformerBlockParams::zeros(int d, int heads_, int ff_width) {
  TransformerBlockParams p;
  p.heads = heads_;
  p.wq = Matrix(d, d);
  p.wk = Matrix(d, d);
  p.wv = Matrix(d, d);
  p.wo = Matrix(d, d);
  p.ln1_gain = Vec(d, 1.0);
  p.ln1_bias = Vec(d, 0.0);
  p.ff1 = Matrix(ff_width, d);
  p.ff1_bias = Vec(ff_width, 0.0);
  p.ff2 = Matrix(d, ff_width);
  p.ff2_bias = Vec(d, 0.0);
  p.ln2_gain = Vec(d, 1.0);
  p.ln2_bias = Vec(d, 0.0);
  return p;
}

void TransformerBlockParams::validate() const {
  int d = width();
  if (heads <= 0 || d % heads != 0) {
    throw DimensionError("transformer block: head count " + std::to_string(heads) + " must divide width " +
                         std::to_string(d));
  }
  auto square = [&](const Matrix& m, const char* name) {
    if (m.rows != d || m.cols != d) {
      throw DimensionError(std::string("transformer block: ") + name + " must be " + std::to_string(d) + "x" +
                           std::to_string(d));
    }
  };
  square(wq, "wq");
  square(wk, "wk");
  square(wv, "wv");
  square(wo, "wo");
  if (ff1.cols != d || ff2.rows != d || ff1.rows != ff2.cols ||
      static_cast<int>(ff1_bias.size()) != ff1.rows || static_cast<int>(ff2_bias.size()) != d) {
    throw DimensionError("transformer block: feed-forward shapes inconsistent with width " + std::to_string(d));
  }
  if (static_cast<int>(ln1_gain.size()) != d || static_cast<int>(ln1_bias.size()) != d ||
      static_cast<int>(ln2_gain.size()) != d || static_cast<int>(ln2_bias.size()) != d) {
    throw DimensionError("transformer block: layer-norm parameter length must equal width " + std::to_string(d));
  }
}

Matrix sinusoidal_positions(int n, int d) {
  if (n < 1) throw ArgumentError("sinusoidal_positions: sequence length must be >= 1");
  if (d < 2 || d % 2 != 0) throw ArgumentError("sinusoidal_positions: model width must be even, got " + std::to_string(d));
  Matrix table(n, d);
  for (int pos = 0; pos < n; ++pos) {
    for (int i = 0; i < d; i += 2) {
      double freq = std::pow(10000.0, static_cast<double>(i) / d);
      table.at(pos, i) = std::sin(pos / freq);
      table.at(pos, i + 1) = std::cos(pos / freq);
    }
  }
  return table;
}

namespace {

int count_valid(const std::vector<char>& valid) {
  int c = 0;
  for (char v : valid) c += v ? 1 : 0;
  return c;
}

}  // namespace

Matrix self_attention(const Matrix& x, const TransformerBlockParams& params, const std::vector<char>& valid,
                      AttentionCache* cache) {
  params.validate();
  int n = x.rows;
  int d = x.cols;
  if (d != params.width()) {
    throw DimensionError("self_attention: input width " + std::to_string(d) + " != block width " +
                         std::to_string(params.width()));
  }
  if (static_cast<int>(valid.size()) != n) {
    throw DimensionError("self_attention: mask length " + std::to_string(valid.size()) + " != rows " +
                         std::to_string(n));
  }
  if (count_valid(valid) == 0) throw ArgumentError("self_attention: all positions masked");

  int heads = params.heads;
  int dh = d / heads;
  double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  AttentionCache local;
  AttentionCache& c = cache != nullptr ? *cache : local;
  c.q = Matrix(n, d);
  c.k = Matrix(n, d);
  c.v = Matrix(n, d);
  c.probs.assign(static_cast<std::size_t>(heads), Matrix(n, n));
  c.concat = Matrix(n, d);

  // Projections are only needed (and only computed) for valid rows, which
  // keeps valid outputs bit-independent of masked-row content.
  for (int i = 0; i < n; ++i) {
    if (!valid[static_cast<std::size_t>(i)]) continue;
    linear_map_into(params.wq, x.row(i), c.q.row(i));
    linear_map_into(params.wk, x.row(i), c.k.row(i));
    linear_map_into(params.wv, x.row(i), c.v.row(i));
  }

  Vec logits(static_cast<std::size_t>(n));
  for (int h = 0; h < heads; ++h) {
    int off = h * dh;
    Matrix& probs = c.probs[static_cast<std::size_t>(h)];
    for (int i = 0; i < n; ++i) {
      if (!valid[static_cast<std::size_t>(i)]) continue;
      double maxlogit = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < n; ++j) {
        if (!valid[static_cast<std::size_t>(j)]) continue;
        double s = 0.0;
        const double* qi = c.q.data.data() + static_cast<std::size_t>(i) * d + off;
        const double* kj = c.k.data.data() + static_cast<std::size_t>(j) * d + off;
        for (int t = 0; t < dh; ++t) s += qi[t] * kj[t];
        logits[static_cast<std::size_t>(j)] = s * scale;
        maxlogit = std::max(maxlogit, logits[static_cast<std::size_t>(j)]);
      }
      double total = 0.0;
      for (int j = 0; j < n; ++j) {
        if (!valid[static_cast<std::size_t>(j)]) continue;
        double e = std::exp(logits[static_cast<std::size_t>(j)] - maxlogit);
        probs.at(i, j) = e;
        total += e;
      }
      double* out = c.concat.data.data() + static_cast<std::size_t>(i) * d + off;
      for (int j = 0; j < n; ++j) {
        if (!valid[static_cast<std::size_t>(j)]) continue;
        double a = probs.at(i, j) / total;
        probs.at(i, j) = a;
        const double* vj = c.v.data.data() + static_cast<std::size_t>(j) * d + off;
        for (int t = 0; t < dh; ++t) out[t] += a * vj[t];
      }
    }
  }

  Matrix out(n, d);
  for (int i = 0; i < n; ++i) {
    if (!valid[static_cast<std::size_t>(i)]) continue;  // masked rows stay zero
    linear_map_into(params.wo, c.concat.row(i), out.row(i));
  }
  return out;
}

Matrix transformer_block(const Matrix& x, const TransformerBlockParams& params, const std::vector<char>& valid,
                         BlockCache* cache) {
  int n = x.rows;
  int d = x.cols;
  BlockCache local;
  BlockCache& c = cache != nullptr ? *cache : local;
  c.input = x;
  c.attn_out = self_attention(x, params, valid, &c.attn);

  c.r1 = Matrix(n, d);
  c.y1 = Matrix(n, d);
  c.ln1.assign(static_cast<std::size_t>(n), LayerNormCache{});
  for (int i = 0; i < n; ++i) {
    for (int t = 0; t < d; ++t) c.r1.at(i, t) = x.at(i, t) + c.attn_out.at(i, t);
    layer_norm_row(c.r1.row(i), params.ln1_gain, params.ln1_bias, c.y1.row(i), &c.ln1[static_cast<std::size_t>(i)]);
  }

  int fw = params.ff_width();
  c.ff_hidden = Matrix(n, fw);
  c.r2 = Matrix(n, d);
  for (int i = 0; i < n; ++i) {
    linear_map_into(params.ff1, c.y1.row(i), c.ff_hidden.row(i));
    for (int t = 0; t < fw; ++t) c.ff_hidden.at(i, t) += params.ff1_bias[static_cast<std::size_t>(t)];
    for (int t = 0; t < d; ++t) {
      double s = params.ff2_bias[static_cast<std::size_t>(t)];
      const double* w = params.ff2.data.data() + static_cast<std::size_t>(t) * fw;
      const double* h = c.ff_hidden.data.data() + static_cast<std::size_t>(i) * fw;
      for (int u = 0; u < fw; ++u) {
        double a = h[u] > 0.0 ? h[u] : 0.0;
        s += w[u] * a;
      }
      c.r2.at(i, t) = c.y1.at(i, t) + s;
    }
  }

  Matrix out(n, d);
  c.ln2.assign(static_cast<std::size_t>(n), LayerNormCache{});
  for (int i = 0; i < n; ++i) {
    layer_norm_row(c.r2.row(i), params.ln2_gain, params.ln2_bias, out.row(i), &c.ln2[static_cast<std::size_t>(i)]);
  }
  return out;
}

Matrix transformer_block_backward(const Matrix& dout, const TransformerBlockParams& params, const BlockCache& cache,
                                  const std::vector<char>& valid, TransformerBlockParams& grads) {
  int n = dout.rows;
  int d = dout.cols;
  int fw = params.ff_width();
  int heads = params.heads;
  int dh = d / heads;
  double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  // Second layer norm.
  Matrix dr2(n, d);
  for (int i = 0; i < n; ++i) {
    layer_norm_row_backward(dout.row(i), params.ln2_gain, cache.ln2[static_cast<std::size_t>(i)], dr2.row(i),
                            grads.ln2_gain, grads.ln2_bias);
  }

  // Feed-forward sublayer; dy1 collects both the residual path and W1^T.
  Matrix dy1(n, d);
  Vec dhidden(static_cast<std::size_t>(fw));
  for (int i = 0; i < n; ++i) {
    auto dr2_i = dr2.row(i);
    for (int t = 0; t < d; ++t) dy1.at(i, t) = dr2_i[static_cast<std::size_t>(t)];
    // d(activated hidden) then through the relu mask.
    for (int u = 0; u < fw; ++u) dhidden[static_cast<std::size_t>(u)] = 0.0;
    for (int t = 0; t < d; ++t) {
      double g = dr2_i[static_cast<std::size_t>(t)];
      if (g == 0.0) continue;
      const double* w = params.ff2.data.data() + static_cast<std::size_t>(t) * fw;
      for (int u = 0; u < fw; ++u) dhidden[static_cast<std::size_t>(u)] += g * w[u];
      grads.ff2_bias[static_cast<std::size_t>(t)] += g;
      double* gw = grads.ff2.data.data() + static_cast<std::size_t>(t) * fw;
      const double* h = cache.ff_hidden.data.data() + static_cast<std::size_t>(i) * fw;
      for (int u = 0; u < fw; ++u) gw[u] += g * (h[u] > 0.0 ? h[u] : 0.0);
    }
    const double* h = cache.ff_hidden.data.data() + static_cast<std::size_t>(i) * fw;
    for (int u = 0; u < fw; ++u) {
      if (h[u] <= 0.0) dhidden[static_cast<std::size_t>(u)] = 0.0;
    }
    accumulate_outer(grads.ff1, dhidden, cache.y1.row(i));
    for (int u = 0; u < fw; ++u) grads.ff1_bias[static_cast<std::size_t>(u)] += dhidden[static_cast<std::size_t>(u)];
    accumulate_transpose_mul(params.ff1, dhidden, dy1.row(i));
  }

  // First layer norm.
  Matrix dr1(n, d);
  for (int i = 0; i < n; ++i) {
    layer_norm_row_backward(dy1.row(i), params.ln1_gain, cache.ln1[static_cast<std::size_t>(i)], dr1.row(i),
                            grads.ln1_gain, grads.ln1_bias);
  }

  // Residual split: dx gets dr1 directly, the attention path only at valid rows.
  Matrix dx = dr1;
  Matrix dconcat(n, d);
  for (int i = 0; i < n; ++i) {
    if (!valid[static_cast<std::size_t>(i)]) continue;
    accumulate_outer(grads.wo, dr1.row(i), cache.attn.concat.row(i));
    accumulate_transpose_mul(params.wo, dr1.row(i), dconcat.row(i));
  }

  Matrix dq(n, d), dk(n, d), dv(n, d);
  Vec dprob(static_cast<std::size_t>(n));
  Vec dlogit(static_cast<std::size_t>(n));
  for (int h = 0; h < heads; ++h) {
    int off = h * dh;
    const Matrix& probs = cache.attn.probs[static_cast<std::size_t>(h)];
    for (int i = 0; i < n; ++i) {
      if (!valid[static_cast<std::size_t>(i)]) continue;
      const double* doi = dconcat.data.data() + static_cast<std::size_t>(i) * d + off;
      double inner = 0.0;
      for (int j = 0; j < n; ++j) {
        if (!valid[static_cast<std::size_t>(j)]) continue;
        const double* vj = cache.attn.v.data.data() + static_cast<std::size_t>(j) * d + off;
        double s = 0.0;
        for (int t = 0; t < dh; ++t) s += doi[t] * vj[t];
        dprob[static_cast<std::size_t>(j)] = s;
        inner += s * probs.at(i, j);
        double a = probs.at(i, j);
        double* dvj = dv.data.data() + static_cast<std::size_t>(j) * d + off;
        for (int t = 0; t < dh; ++t) dvj[t] += a * doi[t];
      }
      // Softmax backward restricted to valid keys.
      for (int j = 0; j < n; ++j) {
        if (!valid[static_cast<std::size_t>(j)]) continue;
        dlogit[static_cast<std::size_t>(j)] = probs.at(i, j) * (dprob[static_cast<std::size_t>(j)] - inner);
      }
      double* dqi = dq.data.data() + static_cast<std::size_t>(i) * d + off;
      const double* qi = cache.attn.q.data.data() + static_cast<std::size_t>(i) * d + off;
      for (int j = 0; j < n; ++j) {
        if (!valid[static_cast<std::size_t>(j)]) continue;
        double g = dlogit[static_cast<std::size_t>(j)] * scale;
        const double* kj = cache.attn.k.data.data() + static_cast<std::size_t>(j) * d + off;
        double* dkj = dk.data.data() + static_cast<std::size_t>(j) * d + off;
        for (int t = 0; t < dh; ++t) {
          dqi[t] += g * kj[t];
          dkj[t] += g * qi[t];
        }
      }
    }
  }

  for (int i = 0; i < n; ++i) {
    if (!valid[static_cast<std::size_t>(i)]) continue;
    accumulate_outer(grads.wq, dq.row(i), cache.input.row(i));
    accumulate_outer(grads.wk, dk.row(i), cache.input.row(i));
    accumulate_outer(grads.wv, dv.row(i), cache.input.row(i));
    accumulate_transpose_mul(params.wq, dq.row(i), dx.row(i));
    accumulate_transpose_mul(params.wk, dk.row(i), dx.row(i));
    accumulate_transpose_mul(params.wv, dv.row(i), dx.row(i));
  }
  return dx;
}

}  // namespace mmrec
