#include "mmrec/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "mmrec/errors.hpp"

namespace mmrec {

namespace {

void fnv_mix(std::uint64_t& h, const double* data, std::size_t count) {
  const unsigned char* bytes = reinterpret_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < count * sizeof(double); ++i) {
    h ^= bytes[i];
    h *= 1099511628211ull;
  }
}

}  // namespace

std::uint64_t fusion_fingerprint(const FusionParams& params, Variant variant) {
  std::uint64_t h = 1469598103934665603ull;
  fnv_mix(h, params.w_visual.data.data(), params.w_visual.data.size());
  fnv_mix(h, params.w_textual.data.data(), params.w_textual.data.size());
  fnv_mix(h, params.w_audio.data.data(), params.w_audio.data.size());
  fnv_mix(h, params.u.data(), params.u.size());
  h ^= static_cast<std::uint64_t>(variant);
  h *= 1099511628211ull;
  return h;
}

Catalog Catalog::build(const std::vector<VideoRecord>& videos, const FusionParams& params, Variant variant) {
  Catalog catalog;
  catalog.entries_.reserve(videos.size());
  for (const auto& video : videos) {
    CatalogEntry entry;
    entry.id = video.id;
    entry.features = variant_view(video.features, variant);
    entry.projected = project_modalities(entry.features, params);
    // Uniform weights over present modalities give the user-agnostic
    // retrieval index vector.
    AttentionWeights uniform;
    int n_present = entry.features.present_count();
    for (int m = 0; m < kModalityCount; ++m) {
      if (entry.features.present[static_cast<std::size_t>(m)]) {
        uniform.alpha[static_cast<std::size_t>(m)] = 1.0 / n_present;
      }
    }
    entry.index_vector = fuse(uniform, entry.projected).vector;
    catalog.entries_.push_back(std::move(entry));
  }
  std::sort(catalog.entries_.begin(), catalog.entries_.end(),
            [](const CatalogEntry& a, const CatalogEntry& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < catalog.entries_.size(); ++i) {
    if (catalog.entries_[i].id == catalog.entries_[i - 1].id) {
      throw CatalogError("duplicate video id " + std::to_string(catalog.entries_[i].id));
    }
  }
  catalog.fingerprint_ = fusion_fingerprint(params, variant);
  return catalog;
}

const CatalogEntry* Catalog::find(VideoId id) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), id,
                             [](const CatalogEntry& e, VideoId v) { return e.id < v; });
  if (it == entries_.end() || it->id != id) return nullptr;
  return &*it;
}

const CatalogEntry& Catalog::at(VideoId id) const {
  const CatalogEntry* e = find(id);
  if (e == nullptr) throw LookupError("video id " + std::to_string(id) + " not in catalog");
  return *e;
}

std::vector<Candidate> retrieve(const Vec& z, const Catalog& catalog, int m, const std::set<VideoId>& exclude,
                                std::uint64_t params_fingerprint) {
  if (m < 1) throw ArgumentError("retrieve: M must be >= 1");
  if (params_fingerprint != catalog.fingerprint()) {
    throw ConsistencyError("retrieve: catalog fingerprint is stale; rebuild the catalog for the current parameters");
  }
  std::vector<Candidate> scored;
  scored.reserve(catalog.size());
  for (const auto& entry : catalog.entries()) {
    if (exclude.count(entry.id) > 0) continue;
    scored.push_back({entry.id, dot(entry.index_vector, z)});
  }
  auto better = [](const Candidate& a, const Candidate& b) {
    if (a.coarse_score != b.coarse_score) return a.coarse_score > b.coarse_score;
    return a.id < b.id;
  };
  std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(m), scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(), better);
  scored.resize(keep);
  return scored;
}

std::pair<double, AttentionWeights> score_pair(const Vec& z, const CatalogEntry& entry, const FusionParams& params) {
  AttentionWeights weights = attention_weights(params.u, entry.projected, entry.features.present);
  FusedEmbedding fused = fuse(weights, entry.projected);
  return {dot(z, fused.vector), weights};
}

std::pair<double, AttentionWeights> score_pair(const Vec& z, const VideoRecord& video, const FusionParams& params,
                                               Variant variant) {
  ModalityFeatures feats = variant_view(video.features, variant);
  FusionCache cache;
  FusedEmbedding fused = fuse_features(feats, params, &cache);
  return {dot(z, fused.vector), fused.weights};
}

double predict_click(double fine_score) {
  if (!std::isfinite(fine_score)) throw NumericError("predict_click: non-finite score");
  return sigmoid(fine_score);
}

BehaviorSequence sequence_from_history(const UserState& user, const Model& model, const Catalog& catalog) {
  BehaviorSequence seq;
  seq.items.reserve(user.consumed.size());
  for (const auto& [video, ts] : user.consumed) {
    const CatalogEntry* entry = catalog.find(video);
    if (entry == nullptr) continue;
    BehaviorItem item;
    item.video = video;
    item.ts = ts;
    // Catalog entries already carry the variant view and the projections
    // under the current parameters.
    item.embedding = fuse(attention_weights(model.params.fusion.u, entry->projected, entry->features.present),
                          entry->projected);
    seq.items.push_back(std::move(item));
  }
  return seq;
}

std::vector<Recommendation> recommend(const UserState& user, const Model& model, const Catalog& catalog, int k, int m,
                                      AttentionTrace* trace_out) {
  if (k > m) throw ArgumentError("recommend: K = " + std::to_string(k) + " must not exceed M = " + std::to_string(m));
  std::uint64_t fp = fusion_fingerprint(model.params.fusion, model.config.variant);
  if (fp != catalog.fingerprint()) {
    throw ConsistencyError("recommend: catalog was built for different fusion parameters; rebuild it");
  }

  BehaviorSequence seq = sequence_from_history(user, model, catalog);
  Vec z = user_vector(model, seq, user.profile, trace_out);

  std::set<VideoId> exclude;
  for (const auto& [video, ts] : user.consumed) exclude.insert(video);

  std::vector<Candidate> coarse = retrieve(z, catalog, m, exclude, fp);
  std::vector<Recommendation> fine;
  fine.reserve(coarse.size());
  for (const auto& candidate : coarse) {
    const CatalogEntry& entry = catalog.at(candidate.id);
    auto [score, weights] = score_pair(z, entry, model.params.fusion);
    fine.push_back({candidate.id, score, predict_click(score), weights});
  }
  std::sort(fine.begin(), fine.end(), [](const Recommendation& a, const Recommendation& b) {
    if (a.fine_score != b.fine_score) return a.fine_score > b.fine_score;
    return a.id < b.id;
  });
  if (static_cast<int>(fine.size()) > k) fine.resize(static_cast<std::size_t>(k));
  return fine;
}

}  // namespace mmrec
