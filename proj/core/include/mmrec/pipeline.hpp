#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <vector>

#include "mmrec/fusion.hpp"
#include "mmrec/interest.hpp"
#include "mmrec/model.hpp"

namespace mmrec {

struct VideoRecord {
  VideoId id = 0;
  ModalityFeatures features;
  // Simulator ground truth; carried for the harness, never read by the model.
  std::optional<Vec> truth_topics;
};

struct CatalogEntry {
  VideoId id = 0;
  ModalityFeatures features;      // after the model's variant view
  ProjectedModalities projected;  // e_v, e_t, e_a under the catalog's FusionParams
  Vec index_vector;               // uniform-weight fusion over present modalities
};

// Immutable after build; index vectors are tied to a FusionParams
// fingerprint and must be rebuilt when the parameters change.
class Catalog {
 public:
  static Catalog build(const std::vector<VideoRecord>& videos, const FusionParams& params,
                       Variant variant = Variant::full);

  const std::vector<CatalogEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::uint64_t fingerprint() const { return fingerprint_; }

  const CatalogEntry* find(VideoId id) const;          // nullptr when missing
  const CatalogEntry& at(VideoId id) const;            // LookupError when missing

 private:
  std::vector<CatalogEntry> entries_;  // ascending id
  std::uint64_t fingerprint_ = 0;
};

std::uint64_t fusion_fingerprint(const FusionParams& params, Variant variant);

struct Candidate {
  VideoId id = 0;
  double coarse_score = 0.0;
};

struct Recommendation {
  VideoId id = 0;
  double fine_score = 0.0;
  double click_prob = 0.0;
  AttentionWeights weights;
};

// Top-M by dot(index vector, z), excluding `exclude`; ties break by
// ascending id. Throws ConsistencyError when the fingerprint is stale.
std::vector<Candidate> retrieve(const Vec& z, const Catalog& catalog, int m, const std::set<VideoId>& exclude,
                                std::uint64_t params_fingerprint);

// Fine score: recompute the user-conditioned attention weights, fuse, then
// dot with z. Weights are returned for explainability.
std::pair<double, AttentionWeights> score_pair(const Vec& z, const CatalogEntry& entry, const FusionParams& params);
std::pair<double, AttentionWeights> score_pair(const Vec& z, const VideoRecord& video, const FusionParams& params,
                                               Variant variant = Variant::full);

double predict_click(double fine_score);

struct UserState {
  UserId id = 0;
  StaticProfile profile;
  std::vector<std::pair<VideoId, Timestamp>> consumed;  // clicked history, time-ordered
};

// Two-stage recommendation: retrieve M coarse candidates, fine-rank, return
// top-K with click probabilities and attention weights.
std::vector<Recommendation> recommend(const UserState& user, const Model& model, const Catalog& catalog, int k, int m,
                                      AttentionTrace* trace_out = nullptr);

// The user's behavior sequence resolved against the catalog (videos missing
// from the catalog are skipped).
BehaviorSequence sequence_from_history(const UserState& user, const Model& model, const Catalog& catalog);

}  // namespace mmrec
