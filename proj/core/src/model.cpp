#include "mmrec/model.hpp"

#include <algorithm>
#include <cmath>

#include "mmrec/errors.hpp"
#include "mmrec/rng.hpp"

namespace mmrec {

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::full: return "FULL";
    case Variant::no_audio: return "NO_AUDIO";
    case Variant::no_seq: return "NO_SEQ";
    case Variant::no_static: return "NO_STATIC";
    case Variant::text_only: return "TEXT_ONLY";
  }
  return "FULL";
}

Variant variant_from_name(const std::string& name) {
  std::string up;
  for (char c : name) up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  for (Variant v : all_variants()) {
    if (up == variant_name(v)) return v;
  }
  throw ConfigError("unknown variant '" + name + "' (expected FULL, NO_AUDIO, NO_SEQ, NO_STATIC or TEXT_ONLY)");
}

std::vector<Variant> all_variants() {
  return {Variant::full, Variant::no_audio, Variant::no_seq, Variant::no_static, Variant::text_only};
}

ModelParams ModelParams::zeros(const ModelConfig& cfg) {
  ModelParams p;
  p.fusion.w_visual = Matrix(cfg.d, cfg.d_visual);
  p.fusion.w_textual = Matrix(cfg.d, cfg.d_textual);
  p.fusion.w_audio = Matrix(cfg.d, cfg.d_audio);
  p.fusion.u = Vec(static_cast<std::size_t>(cfg.d), 0.0);
  p.encoder.assign(static_cast<std::size_t>(cfg.blocks),
                   TransformerBlockParams::zeros(cfg.d, cfg.heads, cfg.ff_mult * cfg.d));
  p.interest.w_combine = Matrix(cfg.d, 2 * cfg.d);
  p.interest.bias = Vec(static_cast<std::size_t>(cfg.d), 0.0);
  p.interest.h0 = Vec(static_cast<std::size_t>(cfg.d), 0.0);
  p.interest.emb_gender = Matrix(1 + static_cast<int>(cfg.vocab.genders.size()), cfg.d);
  p.interest.emb_region = Matrix(1 + static_cast<int>(cfg.vocab.regions.size()), cfg.d);
  p.interest.emb_regbucket = Matrix(1 + static_cast<int>(cfg.vocab.registration_buckets.size()), cfg.d);
  return p;
}

ModelParams ModelParams::glorot(const ModelConfig& cfg, std::uint64_t seed) {
  ModelParams p = zeros(cfg);
  Rng rng(seed, 0x6d6f64656cull);  // independent stream for initialization
  glorot_fill(p.fusion.w_visual, rng);
  glorot_fill(p.fusion.w_textual, rng);
  glorot_fill(p.fusion.w_audio, rng);
  glorot_fill(p.fusion.u, cfg.d, 1, rng);
  for (auto& block : p.encoder) {
    glorot_fill(block.wq, rng);
    glorot_fill(block.wk, rng);
    glorot_fill(block.wv, rng);
    glorot_fill(block.wo, rng);
    glorot_fill(block.ff1, rng);
    glorot_fill(block.ff2, rng);
  }
  glorot_fill(p.interest.w_combine, rng);
  glorot_fill(p.interest.h0, cfg.d, 1, rng);
  glorot_fill(p.interest.emb_gender, rng);
  glorot_fill(p.interest.emb_region, rng);
  glorot_fill(p.interest.emb_regbucket, rng);
  return p;
}

namespace {

template <class Params, class Fn>
void visit_blocks(Params& p, Fn&& fn) {
  fn("fusion.w_visual", p.fusion.w_visual.rows, p.fusion.w_visual.cols, p.fusion.w_visual.data);
  fn("fusion.w_textual", p.fusion.w_textual.rows, p.fusion.w_textual.cols, p.fusion.w_textual.data);
  fn("fusion.w_audio", p.fusion.w_audio.rows, p.fusion.w_audio.cols, p.fusion.w_audio.data);
  fn("fusion.u", static_cast<int>(p.fusion.u.size()), 1, p.fusion.u);
  for (std::size_t b = 0; b < p.encoder.size(); ++b) {
    auto& blk = p.encoder[b];
    std::string prefix = "encoder." + std::to_string(b) + ".";
    fn(prefix + "wq", blk.wq.rows, blk.wq.cols, blk.wq.data);
    fn(prefix + "wk", blk.wk.rows, blk.wk.cols, blk.wk.data);
    fn(prefix + "wv", blk.wv.rows, blk.wv.cols, blk.wv.data);
    fn(prefix + "wo", blk.wo.rows, blk.wo.cols, blk.wo.data);
    fn(prefix + "ln1_gain", static_cast<int>(blk.ln1_gain.size()), 1, blk.ln1_gain);
    fn(prefix + "ln1_bias", static_cast<int>(blk.ln1_bias.size()), 1, blk.ln1_bias);
    fn(prefix + "ff1", blk.ff1.rows, blk.ff1.cols, blk.ff1.data);
    fn(prefix + "ff1_bias", static_cast<int>(blk.ff1_bias.size()), 1, blk.ff1_bias);
    fn(prefix + "ff2", blk.ff2.rows, blk.ff2.cols, blk.ff2.data);
    fn(prefix + "ff2_bias", static_cast<int>(blk.ff2_bias.size()), 1, blk.ff2_bias);
    fn(prefix + "ln2_gain", static_cast<int>(blk.ln2_gain.size()), 1, blk.ln2_gain);
    fn(prefix + "ln2_bias", static_cast<int>(blk.ln2_bias.size()), 1, blk.ln2_bias);
  }
  fn("interest.w_combine", p.interest.w_combine.rows, p.interest.w_combine.cols, p.interest.w_combine.data);
  fn("interest.bias", static_cast<int>(p.interest.bias.size()), 1, p.interest.bias);
  fn("interest.h0", static_cast<int>(p.interest.h0.size()), 1, p.interest.h0);
  fn("interest.emb_gender", p.interest.emb_gender.rows, p.interest.emb_gender.cols, p.interest.emb_gender.data);
  fn("interest.emb_region", p.interest.emb_region.rows, p.interest.emb_region.cols, p.interest.emb_region.data);
  fn("interest.emb_regbucket", p.interest.emb_regbucket.rows, p.interest.emb_regbucket.cols,
     p.interest.emb_regbucket.data);
}

}  // namespace

void for_each_param_block(ModelParams& p, const std::function<void(ParamBlockRef)>& fn) {
  visit_blocks(p, [&](const std::string& name, int rows, int cols, Vec& values) {
    fn(ParamBlockRef{name, rows, cols, std::span<double>(values)});
  });
}

void for_each_param_block(const ModelParams& p,
                          const std::function<void(const std::string&, int, int, std::span<const double>)>& fn) {
  visit_blocks(const_cast<ModelParams&>(p), [&](const std::string& name, int rows, int cols, Vec& values) {
    fn(name, rows, cols, std::span<const double>(values));
  });
}

std::size_t ModelParams::parameter_count() const {
  std::size_t total = 0;
  for_each_param_block(*this, [&](const std::string&, int, int, std::span<const double> v) { total += v.size(); });
  return total;
}

Vec ModelParams::flatten() const {
  Vec flat;
  flat.reserve(parameter_count());
  for_each_param_block(*this, [&](const std::string&, int, int, std::span<const double> v) {
    flat.insert(flat.end(), v.begin(), v.end());
  });
  return flat;
}

void ModelParams::unflatten(std::span<const double> flat) {
  std::size_t offset = 0;
  for_each_param_block(*this, [&](ParamBlockRef ref) {
    if (offset + ref.values.size() > flat.size()) {
      throw DimensionError("unflatten: flat vector too short for parameter layout");
    }
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(offset),
              flat.begin() + static_cast<std::ptrdiff_t>(offset + ref.values.size()), ref.values.begin());
    offset += ref.values.size();
  });
  if (offset != flat.size()) throw DimensionError("unflatten: flat vector length does not match parameter layout");
}

ModalityFeatures variant_view(const ModalityFeatures& feats, Variant variant) {
  ModalityFeatures out = feats;
  if (variant == Variant::no_audio) {
    out.present[2] = false;
    out.features[2].clear();
  } else if (variant == Variant::text_only) {
    out.present[0] = false;
    out.features[0].clear();
    out.present[2] = false;
    out.features[2].clear();
  }
  return out;
}

namespace {

constexpr double kProbClamp = 1e-12;

double bce_clamped(double p, double y) {
  double q = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
  return -(y * std::log(q) + (1.0 - y) * std::log(1.0 - q));
}

// Positional tables are deterministic per (n, d); memoize up to max_len.
const Matrix& positions_for(ModelWorkspace& ws, int max_len, int d, Matrix& storage) {
  if (storage.rows < max_len || storage.cols != d) storage = sinusoidal_positions(max_len, d);
  (void)ws;
  return storage;
}

}  // namespace

double example_loss(const Model& model, const ResolvedExample& ex, ModelParams* grads, ModelWorkspace& ws,
                    double* click_prob_out) {
  const ModelConfig& cfg = model.config;
  const ModelParams& p = model.params;
  int d = cfg.d;

  // Window of the most recent max_len history items.
  std::size_t total = ex.history.size();
  std::size_t start = total > static_cast<std::size_t>(cfg.max_len) ? total - static_cast<std::size_t>(cfg.max_len) : 0;
  int n = static_cast<int>(total - start);

  // Variant feature views.
  bool needs_mask = cfg.variant == Variant::no_audio || cfg.variant == Variant::text_only;
  ws.masked.clear();
  std::vector<const ModalityFeatures*> window(static_cast<std::size_t>(n));
  const ModalityFeatures* target = ex.target;
  if (needs_mask) {
    ws.masked.reserve(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i < n; ++i) {
      ws.masked.push_back(variant_view(*ex.history[start + static_cast<std::size_t>(i)], cfg.variant));
    }
    ws.masked.push_back(variant_view(*ex.target, cfg.variant));
    for (int i = 0; i < n; ++i) window[static_cast<std::size_t>(i)] = &ws.masked[static_cast<std::size_t>(i)];
    target = &ws.masked.back();
  } else {
    for (int i = 0; i < n; ++i) window[static_cast<std::size_t>(i)] = ex.history[start + static_cast<std::size_t>(i)];
  }

  // Fuse each history item.
  ws.history_fusion.resize(static_cast<std::size_t>(n));
  std::vector<Vec> fused(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    fused[static_cast<std::size_t>(i)] =
        fuse_features(*window[static_cast<std::size_t>(i)], p.fusion, &ws.history_fusion[static_cast<std::size_t>(i)])
            .vector;
  }

  // Dynamic interest vector.
  static thread_local Matrix position_table;
  Vec h(static_cast<std::size_t>(d), 0.0);
  std::vector<char> valid(static_cast<std::size_t>(n), 1);
  bool empty_history = n == 0;
  if (empty_history) {
    h = p.interest.h0;
  } else if (!cfg.use_encoder()) {
    for (int i = 0; i < n; ++i) axpy(1.0 / n, fused[static_cast<std::size_t>(i)], h);
  } else {
    const Matrix& pe = positions_for(ws, cfg.max_len, d, position_table);
    ws.x = Matrix(n, d);
    // recency-anchored positions: newest item takes row 0
    for (int i = 0; i < n; ++i) {
      for (int t = 0; t < d; ++t) {
        ws.x.at(i, t) = fused[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)] + pe.at(n - 1 - i, t);
      }
    }
    ws.block_caches.resize(p.encoder.size());
    Matrix cur = ws.x;
    for (std::size_t b = 0; b < p.encoder.size(); ++b) {
      cur = transformer_block(cur, p.encoder[b], valid, &ws.block_caches[b]);
    }
    if (cfg.pooling == SequencePooling::last) {
      for (int t = 0; t < d; ++t) h[static_cast<std::size_t>(t)] = cur.at(n - 1, t);
    } else {
      for (int i = 0; i < n; ++i) axpy(1.0 / n, cur.row(i), h);
    }
  }

  // Static profile vector.
  int row_gender = 0, row_region = 0, row_bucket = 0;
  Vec s(static_cast<std::size_t>(d), 0.0);
  if (cfg.use_static()) {
    row_gender = ProfileVocab::row_of(cfg.vocab.genders, ex.profile->gender);
    row_region = ProfileVocab::row_of(cfg.vocab.regions, ex.profile->region);
    row_bucket = ProfileVocab::row_of(cfg.vocab.registration_buckets, ex.profile->registration_bucket);
    axpy(1.0, p.interest.emb_gender.row(row_gender), s);
    axpy(1.0, p.interest.emb_region.row(row_region), s);
    axpy(1.0, p.interest.emb_regbucket.row(row_bucket), s);
  }

  // z = relu(W_c [h; s] + b).
  Vec concat(static_cast<std::size_t>(2 * d));
  std::copy(h.begin(), h.end(), concat.begin());
  std::copy(s.begin(), s.end(), concat.begin() + d);
  Vec z_pre = linear_map(p.interest.w_combine, concat, p.interest.bias);
  Vec z = relu(z_pre);

  // Target fusion and score.
  Vec f_target = fuse_features(*target, p.fusion, &ws.target_fusion).vector;
  double score = dot(z, f_target);
  double prob = sigmoid(score);
  if (click_prob_out != nullptr) *click_prob_out = prob;
  double loss = bce_clamped(prob, ex.label);

  if (grads == nullptr) return loss;

  // ---- Reverse pass ----
  double dscore = prob - ex.label;

  Vec dz(static_cast<std::size_t>(d), 0.0);
  axpy(dscore, f_target, dz);
  Vec df_target(static_cast<std::size_t>(d), 0.0);
  axpy(dscore, z, df_target);
  fuse_features_backward(df_target, *target, p.fusion, ws.target_fusion, grads->fusion);

  for (int t = 0; t < d; ++t) {
    if (z_pre[static_cast<std::size_t>(t)] <= 0.0) dz[static_cast<std::size_t>(t)] = 0.0;
  }
  accumulate_outer(grads->interest.w_combine, dz, concat);
  axpy(1.0, dz, grads->interest.bias);
  Vec dconcat(static_cast<std::size_t>(2 * d), 0.0);
  accumulate_transpose_mul(p.interest.w_combine, dz, dconcat);
  std::span<const double> dh(dconcat.data(), static_cast<std::size_t>(d));
  std::span<const double> ds(dconcat.data() + d, static_cast<std::size_t>(d));

  if (cfg.use_static()) {
    axpy(1.0, ds, grads->interest.emb_gender.row(row_gender));
    axpy(1.0, ds, grads->interest.emb_region.row(row_region));
    axpy(1.0, ds, grads->interest.emb_regbucket.row(row_bucket));
  }

  if (empty_history) {
    axpy(1.0, dh, grads->interest.h0);
    return loss;
  }

  std::vector<Vec> dfused(static_cast<std::size_t>(n), Vec(static_cast<std::size_t>(d), 0.0));
  if (!cfg.use_encoder()) {
    for (int i = 0; i < n; ++i) axpy(1.0 / n, dh, dfused[static_cast<std::size_t>(i)]);
  } else {
    Matrix dcur(n, d);
    if (cfg.pooling == SequencePooling::last) {
      for (int t = 0; t < d; ++t) dcur.at(n - 1, t) = dh[static_cast<std::size_t>(t)];
    } else {
      for (int i = 0; i < n; ++i) {
        for (int t = 0; t < d; ++t) dcur.at(i, t) = dh[static_cast<std::size_t>(t)] / n;
      }
    }
    for (std::size_t b = p.encoder.size(); b-- > 0;) {
      dcur = transformer_block_backward(dcur, p.encoder[b], ws.block_caches[b], valid, grads->encoder[b]);
    }
    for (int i = 0; i < n; ++i) {
      for (int t = 0; t < d; ++t) dfused[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)] = dcur.at(i, t);
    }
  }

  for (int i = 0; i < n; ++i) {
    fuse_features_backward(dfused[static_cast<std::size_t>(i)], *window[static_cast<std::size_t>(i)], p.fusion,
                           ws.history_fusion[static_cast<std::size_t>(i)], grads->fusion);
  }
  return loss;
}

Vec user_vector(const Model& model, const BehaviorSequence& seq, const StaticProfile& profile,
                AttentionTrace* trace_out) {
  const ModelConfig& cfg = model.config;
  const ModelParams& p = model.params;
  int d = cfg.d;

  Vec h;
  if (seq.items.empty()) {
    h = p.interest.h0;
  } else if (!cfg.use_encoder()) {
    std::size_t total = seq.items.size();
    std::size_t start = total > static_cast<std::size_t>(cfg.max_len) ? total - static_cast<std::size_t>(cfg.max_len) : 0;
    int n = static_cast<int>(total - start);
    h.assign(static_cast<std::size_t>(d), 0.0);
    for (int i = 0; i < n; ++i) axpy(1.0 / n, seq.items[start + static_cast<std::size_t>(i)].embedding.vector, h);
  } else {
    EncodeOptions opts;
    opts.max_len = cfg.max_len;
    opts.pooling = cfg.pooling;
    opts.capture_trace = trace_out != nullptr;
    DynamicInterestVector div = encode_sequence(seq, p.encoder, p.interest.h0, opts);
    h = std::move(div.vector);
    if (trace_out != nullptr && div.trace.has_value()) *trace_out = std::move(*div.trace);
  }

  Vec s(static_cast<std::size_t>(d), 0.0);
  if (cfg.use_static()) s = embed_profile(profile, cfg.vocab, p.interest);
  return user_representation(h, s, p.interest).vector;
}

FusedEmbedding fuse_video(const Model& model, const ModalityFeatures& feats) {
  if (model.config.variant == Variant::no_audio || model.config.variant == Variant::text_only) {
    return fuse_features(variant_view(feats, model.config.variant), model.params.fusion);
  }
  return fuse_features(feats, model.params.fusion);
}

}  // namespace mmrec
