#include "mmrec/fusion.hpp"

#include <cmath>
#include <limits>

#include "mmrec/errors.hpp"

namespace mmrec {

ProjectedModalities project_modalities(const ModalityFeatures& feats, const FusionParams& params) {
  if (feats.present_count() == 0) throw ArgumentError("project_modalities: no modality present");
  int d = params.common_dim();
  ProjectedModalities out;
  for (int m = 0; m < kModalityCount; ++m) {
    if (!feats.present[static_cast<std::size_t>(m)]) {
      out.e[static_cast<std::size_t>(m)] = Vec(static_cast<std::size_t>(d), 0.0);
      continue;
    }
    const Matrix& w = params.projection(m);
    if (w.cols != static_cast<int>(feats.features[static_cast<std::size_t>(m)].size()) || w.rows != d) {
      throw DimensionError(std::string("project_modalities: ") + kModalityNames[static_cast<std::size_t>(m)] +
                           " projection " + std::to_string(w.rows) + "x" + std::to_string(w.cols) +
                           " incompatible with feature length " +
                           std::to_string(feats.features[static_cast<std::size_t>(m)].size()));
    }
    out.e[static_cast<std::size_t>(m)] = linear_map(w, feats.features[static_cast<std::size_t>(m)]);
  }
  return out;
}

AttentionWeights attention_weights(const Vec& u, const ProjectedModalities& projected,
                                   const std::array<bool, kModalityCount>& present) {
  int n_present = 0;
  for (bool p : present) n_present += p ? 1 : 0;
  if (n_present == 0) throw ArgumentError("attention_weights: no modality present");

  std::array<double, kModalityCount> logits{};
  double maxlogit = -std::numeric_limits<double>::infinity();
  for (int m = 0; m < kModalityCount; ++m) {
    if (!present[static_cast<std::size_t>(m)]) continue;
    logits[static_cast<std::size_t>(m)] = dot(u, projected.e[static_cast<std::size_t>(m)]);
    maxlogit = std::max(maxlogit, logits[static_cast<std::size_t>(m)]);
  }
  double total = 0.0;
  AttentionWeights w;
  for (int m = 0; m < kModalityCount; ++m) {
    if (!present[static_cast<std::size_t>(m)]) continue;
    w.alpha[static_cast<std::size_t>(m)] = std::exp(logits[static_cast<std::size_t>(m)] - maxlogit);
    total += w.alpha[static_cast<std::size_t>(m)];
  }
  for (int m = 0; m < kModalityCount; ++m) {
    if (!present[static_cast<std::size_t>(m)]) continue;
    w.alpha[static_cast<std::size_t>(m)] /= total;
  }
  return w;
}

FusedEmbedding fuse(const AttentionWeights& weights, const ProjectedModalities& projected) {
  std::size_t d = 0;
  for (const auto& e : projected.e) d = std::max(d, e.size());
  FusedEmbedding out;
  out.vector.assign(d, 0.0);
  out.weights = weights;
  for (int m = 0; m < kModalityCount; ++m) {
    double a = weights.alpha[static_cast<std::size_t>(m)];
    if (a == 0.0) continue;
    axpy(a, projected.e[static_cast<std::size_t>(m)], out.vector);
  }
  return out;
}

FusedEmbedding fuse_features(const ModalityFeatures& feats, const FusionParams& params, FusionCache* cache) {
  FusionCache local;
  FusionCache& c = cache != nullptr ? *cache : local;
  c.projected = project_modalities(feats, params);
  c.present = feats.present;
  c.weights = attention_weights(params.u, c.projected, c.present);
  return fuse(c.weights, c.projected);
}

void fuse_features_backward(const Vec& dfused, const ModalityFeatures& feats, const FusionParams& params,
                            const FusionCache& cache, FusionParams& grads) {
  // f = sum alpha_m e_m with alpha = softmax over present logits l_m = u.e_m.
  std::array<double, kModalityCount> dalpha{};
  std::array<Vec, kModalityCount> de;
  for (int m = 0; m < kModalityCount; ++m) {
    if (!cache.present[static_cast<std::size_t>(m)]) continue;
    const Vec& e = cache.projected.e[static_cast<std::size_t>(m)];
    dalpha[static_cast<std::size_t>(m)] = dot(dfused, e);
    de[static_cast<std::size_t>(m)].assign(e.size(), 0.0);
    axpy(cache.weights.alpha[static_cast<std::size_t>(m)], dfused, de[static_cast<std::size_t>(m)]);
  }

  double inner = 0.0;
  for (int m = 0; m < kModalityCount; ++m) {
    if (!cache.present[static_cast<std::size_t>(m)]) continue;
    inner += dalpha[static_cast<std::size_t>(m)] * cache.weights.alpha[static_cast<std::size_t>(m)];
  }
  for (int m = 0; m < kModalityCount; ++m) {
    if (!cache.present[static_cast<std::size_t>(m)]) continue;
    double dlogit = cache.weights.alpha[static_cast<std::size_t>(m)] * (dalpha[static_cast<std::size_t>(m)] - inner);
    if (dlogit != 0.0) {
      axpy(dlogit, cache.projected.e[static_cast<std::size_t>(m)], grads.u);
      axpy(dlogit, params.u, de[static_cast<std::size_t>(m)]);
    }
  }

  for (int m = 0; m < kModalityCount; ++m) {
    if (!cache.present[static_cast<std::size_t>(m)]) continue;
    accumulate_outer(grads.projection(m), de[static_cast<std::size_t>(m)], feats.features[static_cast<std::size_t>(m)]);
  }
}

}  // namespace mmrec
