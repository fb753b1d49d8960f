#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mmrec/interest.hpp"
#include "mmrec/pipeline.hpp"

namespace mmrec {

// Abstract time axis shared by the generator and the batch pipeline.
inline constexpr Timestamp kTimeHorizon = 1'000'000;
inline constexpr double kHistoryFraction = 0.8;  // events before this are history
inline constexpr double kDriftFraction = 0.6;    // drifted users switch affinity here

inline constexpr Timestamp history_cutoff() { return static_cast<Timestamp>(kHistoryFraction * kTimeHorizon); }
inline constexpr Timestamp drift_time() { return static_cast<Timestamp>(kDriftFraction * kTimeHorizon); }

struct WorldConfig {
  int n_users = 2000;
  int n_videos = 5000;
  int n_topics = 5;
  int d_visual = 16;
  int d_textual = 16;
  int d_audio = 16;
  double cross_modal_correlation = 0.35;  // rho: how faithfully a modality expresses the topics
  double modality_noise = 0.35;           // sigma on raw features
  double audio_missing_fraction = 0.0;    // 1.0 reproduces an audio-free corpus
  double cold_fraction = 0.12;
  double drift_fraction = 0.40;
  int sessions_per_user = 15;
  int impressions_per_session = 10;
  double click_steepness = 26.0;  // kappa
  std::uint64_t seed = 1;

  void validate() const;  // fractions in [0,1], counts >= 1
};

struct LatentVideo {
  Vec topic_mixture;                       // sums to 1
  std::array<Vec, kModalityCount> views;   // topic content expressed through each modality
  std::array<bool, kModalityCount> present = {true, true, true};
};

struct LatentUser {
  Vec affinity_pre;
  Vec affinity_post;  // equals affinity_pre unless drifted
  std::array<double, kModalityCount> reliance = {0.0, 0.0, 0.0};  // beta, sums to 1
  bool drifted = false;
  bool cold = false;
  StaticProfile profile;
};

struct World {
  WorldConfig config;
  std::vector<VideoRecord> videos;        // model-visible features (+ truth topics for the harness)
  std::vector<LatentVideo> video_latents; // aligned with videos, harness only
  std::vector<LatentUser> users;          // index == user id
  double click_bias = 0.0;
};

enum class EventKind { impression, click, like, comment };
const char* event_kind_name(EventKind k);
EventKind event_kind_from_name(const std::string& name);

struct EventContext {
  int hour_bucket = 0;
  std::string device;
  std::string network;
};

struct Event {
  UserId user = 0;
  VideoId video = 0;
  Timestamp ts = 0;
  EventKind kind = EventKind::impression;
  double watch_time_s = 0.0;
  EventContext context;
};

// Declared profile vocabularies for the generated population.
ProfileVocab world_vocab();

World generate_world(const WorldConfig& config);

// Ground-truth click probability; affinity switches at the drift point for
// drifted users, absent modalities are excluded with the reliance weights
// renormalized.
double true_click_probability(const LatentUser& user, const LatentVideo& video, Timestamp t, double steepness,
                              double bias);
double true_click_probability(const World& world, UserId user, VideoId video, Timestamp t);

// One Bernoulli click draw, exposed so tests can replay a pair many times.
bool draw_click(const World& world, UserId user, VideoId video, Timestamp t, Rng& rng);

struct EventLog {
  std::vector<Event> events;  // globally time-ordered; strictly increasing per user
};

EventLog simulate_logs(const World& world);

}  // namespace mmrec
