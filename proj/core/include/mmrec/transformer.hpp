#pragma once

#include <vector>

#include "mmrec/linalg.hpp"

namespace mmrec {

// Post-norm encoder block: y = LN(x + Attn(x)); out = LN(y + FFN(y)).
struct TransformerBlockParams {
  int heads = 2;
  Matrix wq, wk, wv, wo;     // d x d
  Vec ln1_gain, ln1_bias;    // d
  Matrix ff1;                // ff_width x d
  Vec ff1_bias;              // ff_width
  Matrix ff2;                // d x ff_width
  Vec ff2_bias;              // d
  Vec ln2_gain, ln2_bias;    // d

  int width() const { return wq.rows; }
  int ff_width() const { return ff1.rows; }

  static TransformerBlockParams zeros(int d, int heads, int ff_width);
  void validate() const;  // head count divides d, shapes consistent
};

// Standard sine/cosine positional table, n x d, d even.
Matrix sinusoidal_positions(int n, int d);

struct AttentionCache {
  Matrix q, k, v;                  // n x d
  std::vector<Matrix> probs;       // per head, n x n (rows for masked queries are zero)
  Matrix concat;                   // n x d, per-head weighted values before the output projection
};

struct BlockCache {
  Matrix input;                    // n x d
  AttentionCache attn;
  Matrix attn_out;                 // n x d (zero rows at masked positions)
  Matrix r1;                       // residual sum before the first LN
  std::vector<LayerNormCache> ln1; // per row
  Matrix y1;                       // after first LN
  Matrix ff_hidden;                // n x ff_width, pre-activation
  Matrix r2;                       // residual sum before the second LN
  std::vector<LayerNormCache> ln2;
};

// Scaled dot-product self-attention with masked positions excluded from the
// softmax; output rows at masked positions are zero. Throws ArgumentError
// when no position is valid.
Matrix self_attention(const Matrix& x, const TransformerBlockParams& params, const std::vector<char>& valid,
                      AttentionCache* cache = nullptr);

Matrix transformer_block(const Matrix& x, const TransformerBlockParams& params, const std::vector<char>& valid,
                         BlockCache* cache = nullptr);

// Accumulates parameter gradients into `grads` and returns dL/dx.
Matrix transformer_block_backward(const Matrix& dout, const TransformerBlockParams& params, const BlockCache& cache,
                                  const std::vector<char>& valid, TransformerBlockParams& grads);

}  // namespace mmrec
