#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mmrec/fusion.hpp"
#include "mmrec/interest.hpp"
#include "mmrec/linalg.hpp"
#include "mmrec/transformer.hpp"

namespace mmrec {

enum class Variant { full, no_audio, no_seq, no_static, text_only };

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);  // ConfigError on unknown
std::vector<Variant> all_variants();                 // ablation table order

struct ModelConfig {
  int d = 16;
  int d_visual = 16;
  int d_textual = 16;
  int d_audio = 16;
  int heads = 2;
  int blocks = 1;
  int ff_mult = 4;
  int max_len = 50;
  SequencePooling pooling = SequencePooling::mean;
  Variant variant = Variant::full;
  ProfileVocab vocab;

  bool use_encoder() const { return variant != Variant::no_seq; }
  bool use_static() const { return variant != Variant::no_static; }
};

struct ModelParams {
  FusionParams fusion;
  std::vector<TransformerBlockParams> encoder;
  InterestFusionParams interest;

  static ModelParams zeros(const ModelConfig& cfg);
  static ModelParams glorot(const ModelConfig& cfg, std::uint64_t seed);

  std::size_t parameter_count() const;
  Vec flatten() const;
  void unflatten(std::span<const double> flat);
};

// Visits every parameter block in a fixed order shared by the optimizer,
// the gradient flattener and the model file.
struct ParamBlockRef {
  std::string name;
  int rows;
  int cols;  // 1 for vectors
  std::span<double> values;
};
void for_each_param_block(ModelParams& p, const std::function<void(ParamBlockRef)>& fn);
void for_each_param_block(const ModelParams& p, const std::function<void(const std::string&, int, int, std::span<const double>)>& fn);

struct Model {
  ModelConfig config;
  ModelParams params;
};

// Masks a video's features according to the variant before any fusion:
// no_audio drops the audio channel, text_only keeps only text.
ModalityFeatures variant_view(const ModalityFeatures& feats, Variant variant);

// One training example resolved to feature pointers.
struct ResolvedExample {
  const ModalityFeatures* target = nullptr;
  std::vector<const ModalityFeatures*> history;  // oldest first, already truncated by the caller or not
  const StaticProfile* profile = nullptr;
  double label = 0.0;
};

// Scratch space reused across examples to avoid allocation churn.
struct ModelWorkspace {
  std::vector<FusionCache> history_fusion;
  FusionCache target_fusion;
  std::vector<BlockCache> block_caches;
  Matrix x;  // encoder input
  std::vector<ModalityFeatures> masked;  // variant views of history + target
};

// Forward + BCE loss for one example; when `grads` is non-null the full
// reverse pass accumulates into it. Returns the loss.
double example_loss(const Model& model, const ResolvedExample& ex, ModelParams* grads, ModelWorkspace& ws,
                    double* click_prob_out = nullptr);

// Inference path shared by ranking and evaluation.
Vec user_vector(const Model& model, const BehaviorSequence& seq, const StaticProfile& profile,
                AttentionTrace* trace_out = nullptr);

FusedEmbedding fuse_video(const Model& model, const ModalityFeatures& feats);

}  // namespace mmrec
