#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mmrec/fusion.hpp"
#include "mmrec/linalg.hpp"
#include "mmrec/transformer.hpp"

namespace mmrec {

using UserId = std::int64_t;
using VideoId = std::int64_t;
using Timestamp = std::int64_t;

struct StaticProfile {
  std::string gender;
  std::string region;
  std::string registration_bucket;
};

// Declared vocabularies; unknown values map to the reserved UNK row 0.
struct ProfileVocab {
  std::vector<std::string> genders;
  std::vector<std::string> regions;
  std::vector<std::string> registration_buckets;

  // Row index into the corresponding embedding table (0 = UNK).
  static int row_of(const std::vector<std::string>& vocab, const std::string& value);
};

struct InterestFusionParams {
  Matrix w_combine;   // d x 2d
  Vec bias;           // d
  Vec h0;             // learned empty-history vector
  Matrix emb_gender;  // (1 + |genders|) x d, row 0 is UNK
  Matrix emb_region;
  Matrix emb_regbucket;
};

struct BehaviorAnnotations {
  double watch_time_s = 0.0;
  bool liked = false;
  bool commented = false;
};

struct BehaviorItem {
  VideoId video = 0;
  Timestamp ts = 0;
  FusedEmbedding embedding;
  BehaviorAnnotations annotations;
};

// Time-ordered consumed-video list (nondecreasing timestamps).
struct BehaviorSequence {
  std::vector<BehaviorItem> items;
};

struct AttentionTrace {
  // Per block, per head: attention rows over the encoded window.
  std::vector<std::vector<Matrix>> block_head_probs;
  std::vector<VideoId> window_videos;  // ids of the encoded (possibly truncated) window
};

struct DynamicInterestVector {
  Vec vector;
  std::optional<AttentionTrace> trace;
};

struct UserRepresentation {
  Vec vector;  // elementwise nonnegative
};

enum class SequencePooling { mean, last };

struct EncodeOptions {
  int max_len = 50;
  SequencePooling pooling = SequencePooling::mean;
  bool capture_trace = false;
};

// s_u = sum of the three field embeddings.
Vec embed_profile(const StaticProfile& profile, const ProfileVocab& vocab, const InterestFusionParams& params);

// Truncates to the most recent max_len items, adds sinusoidal positions,
// runs the encoder blocks with an all-valid mask and pools over positions.
// Empty history returns h0 exactly.
DynamicInterestVector encode_sequence(const BehaviorSequence& seq, const std::vector<TransformerBlockParams>& blocks,
                                      const Vec& h0, const EncodeOptions& options);

// z_u = relu(W_c [h; s] + b).
UserRepresentation user_representation(const Vec& h, const Vec& s, const InterestFusionParams& params);

}  // namespace mmrec
