#include "mmrec/interest.hpp"

#include <algorithm>
#include <string>

#include "mmrec/errors.hpp"

namespace mmrec {

int ProfileVocab::row_of(const std::vector<std::string>& vocab, const std::string& value) {
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    if (vocab[i] == value) return static_cast<int>(i) + 1;
  }
  return 0;  // UNK absorbs unknowns
}

Vec embed_profile(const StaticProfile& profile, const ProfileVocab& vocab, const InterestFusionParams& params) {
  int d = params.emb_gender.cols;
  Vec s(static_cast<std::size_t>(d), 0.0);
  axpy(1.0, params.emb_gender.row(ProfileVocab::row_of(vocab.genders, profile.gender)), s);
  axpy(1.0, params.emb_region.row(ProfileVocab::row_of(vocab.regions, profile.region)), s);
  axpy(1.0, params.emb_regbucket.row(ProfileVocab::row_of(vocab.registration_buckets, profile.registration_bucket)), s);
  return s;
}

DynamicInterestVector encode_sequence(const BehaviorSequence& seq, const std::vector<TransformerBlockParams>& blocks,
                                      const Vec& h0, const EncodeOptions& options) {
  DynamicInterestVector out;
  if (seq.items.empty()) {
    out.vector = h0;
    return out;
  }
  int d = static_cast<int>(h0.size());
  std::size_t start = seq.items.size() > static_cast<std::size_t>(options.max_len)
                          ? seq.items.size() - static_cast<std::size_t>(options.max_len)
                          : 0;
  int n = static_cast<int>(seq.items.size() - start);

  // Positions are anchored at the present: the newest item reads row 0 of
  // the table so that recency has the same code for every sequence length.
  Matrix positions = sinusoidal_positions(n, d);
  Matrix x(n, d);
  for (int i = 0; i < n; ++i) {
    const Vec& f = seq.items[start + static_cast<std::size_t>(i)].embedding.vector;
    if (static_cast<int>(f.size()) != d) {
      throw DimensionError("encode_sequence: item embedding length " + std::to_string(f.size()) +
                           " != model width " + std::to_string(d));
    }
    for (int t = 0; t < d; ++t) x.at(i, t) = f[static_cast<std::size_t>(t)] + positions.at(n - 1 - i, t);
  }

  std::vector<char> valid(static_cast<std::size_t>(n), 1);
  if (options.capture_trace) {
    out.trace.emplace();
    for (std::size_t i = start; i < seq.items.size(); ++i) out.trace->window_videos.push_back(seq.items[i].video);
  }
  for (const auto& block : blocks) {
    BlockCache cache;
    x = transformer_block(x, block, valid, options.capture_trace ? &cache : nullptr);
    if (options.capture_trace) out.trace->block_head_probs.push_back(cache.attn.probs);
  }

  out.vector.assign(static_cast<std::size_t>(d), 0.0);
  if (options.pooling == SequencePooling::last) {
    for (int t = 0; t < d; ++t) out.vector[static_cast<std::size_t>(t)] = x.at(n - 1, t);
  } else {
    for (int i = 0; i < n; ++i) axpy(1.0 / n, x.row(i), out.vector);
  }
  return out;
}

UserRepresentation user_representation(const Vec& h, const Vec& s, const InterestFusionParams& params) {
  int d = params.w_combine.rows;
  if (static_cast<int>(h.size()) != d || static_cast<int>(s.size()) != d || params.w_combine.cols != 2 * d) {
    throw DimensionError("user_representation: expected vectors of length " + std::to_string(d) +
                         " and combine matrix " + std::to_string(d) + "x" + std::to_string(2 * d));
  }
  Vec concat(static_cast<std::size_t>(2 * d));
  std::copy(h.begin(), h.end(), concat.begin());
  std::copy(s.begin(), s.end(), concat.begin() + d);
  Vec z = linear_map(params.w_combine, concat, params.bias);
  UserRepresentation out;
  out.vector = relu(z);
  return out;
}

}  // namespace mmrec
