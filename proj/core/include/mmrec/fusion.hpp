#pragma once

#include <array>
#include <string>

#include "mmrec/linalg.hpp"

namespace mmrec {

enum class Modality : int { visual = 0, textual = 1, audio = 2 };
inline constexpr int kModalityCount = 3;
inline constexpr std::array<const char*, kModalityCount> kModalityNames = {"visual", "textual", "audio"};

// Raw per-modality feature vectors with a presence mask. Absent modalities
// carry an empty/zero vector and present=false; at least one must be present.
struct ModalityFeatures {
  std::array<Vec, kModalityCount> features;
  std::array<bool, kModalityCount> present = {false, false, false};

  const Vec& visual() const { return features[0]; }
  const Vec& textual() const { return features[1]; }
  const Vec& audio() const { return features[2]; }
  int present_count() const { return (present[0] ? 1 : 0) + (present[1] ? 1 : 0) + (present[2] ? 1 : 0); }
};

// Projection maps into the common space plus the learned preference query.
struct FusionParams {
  Matrix w_visual, w_textual, w_audio;
  Vec u;

  const Matrix& projection(int m) const { return m == 0 ? w_visual : (m == 1 ? w_textual : w_audio); }
  Matrix& projection(int m) { return m == 0 ? w_visual : (m == 1 ? w_textual : w_audio); }
  int common_dim() const { return static_cast<int>(u.size()); }
};

// Convex weights over modalities; absent modalities carry exactly zero.
struct AttentionWeights {
  std::array<double, kModalityCount> alpha = {0.0, 0.0, 0.0};

  double visual() const { return alpha[0]; }
  double textual() const { return alpha[1]; }
  double audio() const { return alpha[2]; }
  double sum() const { return alpha[0] + alpha[1] + alpha[2]; }
};

struct ProjectedModalities {
  std::array<Vec, kModalityCount> e;  // zero vector of the common width when absent
};

struct FusedEmbedding {
  Vec vector;
  AttentionWeights weights;
};

// e_i = w_i x_i for present modalities; absent ones yield the zero vector.
// Throws DimensionError naming the offending modality.
ProjectedModalities project_modalities(const ModalityFeatures& feats, const FusionParams& params);

// logit_i = u . e_i over present modalities, softmax over those only.
AttentionWeights attention_weights(const Vec& u, const ProjectedModalities& projected,
                                   const std::array<bool, kModalityCount>& present);

// f = sum_i alpha_i e_i; the weights ride along for explainability.
FusedEmbedding fuse(const AttentionWeights& weights, const ProjectedModalities& projected);

// One-call fusion of a video's features, used by catalog building, scoring
// and the training forward pass.
struct FusionCache {
  ProjectedModalities projected;
  std::array<bool, kModalityCount> present = {false, false, false};
  AttentionWeights weights;
};

FusedEmbedding fuse_features(const ModalityFeatures& feats, const FusionParams& params, FusionCache* cache = nullptr);

// Reverse pass for fuse_features: consumes dL/df, accumulates gradients for
// the projections and u.
void fuse_features_backward(const Vec& dfused, const ModalityFeatures& feats, const FusionParams& params,
                            const FusionCache& cache, FusionParams& grads);

}  // namespace mmrec
