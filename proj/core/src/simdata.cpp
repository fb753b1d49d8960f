#include "mmrec/simdata.hpp"

#include <algorithm>
#include <cmath>

#include "mmrec/errors.hpp"
#include "mmrec/rng.hpp"

namespace mmrec {

namespace {

// Population shape knobs; the WorldConfig carries the scale parameters.
constexpr double kTopicConcentration = 0.3;     // spiky video topic mixtures
constexpr double kBalancedReliance = 6.0;       // Dirichlet concentration for non-specialist users
constexpr double kSpecialistFraction = 0.45;    // one third of these per modality
constexpr double kSpecialistWeight = 0.8;
constexpr double kProfileAnchorWeight = 0.60;
constexpr double kDriftAnchorWeight = 0.0;    // post-drift interests mostly leave the profile prior   // affinity share explained by the static profile
constexpr double kClickBias = -3.1;
constexpr double kFeatureScale = 6.0;      // keeps content above the positional table
constexpr double kLikeProb = 0.25;
constexpr double kCommentProb = 0.08;

Vec normalized(Vec v) {
  double n = norm2(v);
  if (n > 0.0) {
    for (auto& x : v) x /= n;
  }
  return v;
}

Vec gaussian_vec(int len, Rng& rng) {
  Vec v(static_cast<std::size_t>(len));
  for (auto& x : v) x = rng.normal();
  return v;
}

}  // namespace

void WorldConfig::validate() const {
  auto frac = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw ArgumentError(std::string("WorldConfig: ") + name + " must lie in [0,1]");
  };
  frac(cross_modal_correlation, "cross_modal_correlation");
  frac(audio_missing_fraction, "audio_missing_fraction");
  frac(cold_fraction, "cold_fraction");
  frac(drift_fraction, "drift_fraction");
  if (n_users < 1 || n_videos < 1 || n_topics < 1 || sessions_per_user < 1 || impressions_per_session < 1 ||
      d_visual < 1 || d_textual < 1 || d_audio < 1) {
    throw ArgumentError("WorldConfig: all counts must be >= 1");
  }
  if (modality_noise < 0.0) throw ArgumentError("WorldConfig: modality_noise must be >= 0");
}

const char* event_kind_name(EventKind k) {
  switch (k) {
    case EventKind::impression: return "impression";
    case EventKind::click: return "click";
    case EventKind::like: return "like";
    case EventKind::comment: return "comment";
  }
  return "impression";
}

EventKind event_kind_from_name(const std::string& name) {
  if (name == "impression") return EventKind::impression;
  if (name == "click") return EventKind::click;
  if (name == "like") return EventKind::like;
  if (name == "comment") return EventKind::comment;
  throw ParseError("unknown event kind '" + name + "'");
}

ProfileVocab world_vocab() {
  ProfileVocab v;
  v.genders = {"f", "m", "x"};
  v.regions = {"r0", "r1", "r2", "r3", "r4", "r5", "r6", "r7"};
  v.registration_buckets = {"b0", "b1", "b2", "b3", "b4"};
  return v;
}

World generate_world(const WorldConfig& config) {
  config.validate();
  World world;
  world.config = config;
  world.click_bias = kClickBias;
  ProfileVocab vocab = world_vocab();
  int k = config.n_topics;

  // Modality loading matrices and per-profile-value topic anchors.
  Rng struct_rng(config.seed, 0x73747275ull);
  std::array<Matrix, kModalityCount> loading;
  std::array<int, kModalityCount> dims = {config.d_visual, config.d_textual, config.d_audio};
  for (int m = 0; m < kModalityCount; ++m) {
    loading[static_cast<std::size_t>(m)] = Matrix(dims[static_cast<std::size_t>(m)], k);
    for (auto& v : loading[static_cast<std::size_t>(m)].data) v = kFeatureScale * struct_rng.normal();
  }
  auto anchors_for = [&](std::size_t count) {
    std::vector<Vec> anchors;
    anchors.reserve(count);
    for (std::size_t i = 0; i < count; ++i) anchors.push_back(gaussian_vec(k, struct_rng));
    return anchors;
  };
  std::vector<Vec> anchor_gender = anchors_for(vocab.genders.size());
  std::vector<Vec> anchor_region = anchors_for(vocab.regions.size());
  std::vector<Vec> anchor_bucket = anchors_for(vocab.registration_buckets.size());

  // Videos: spiky topic mixture, per-modality views pulled toward it by rho.
  Rng video_rng(config.seed, 0x766964656full);
  world.videos.reserve(static_cast<std::size_t>(config.n_videos));
  world.video_latents.reserve(static_cast<std::size_t>(config.n_videos));
  for (int i = 0; i < config.n_videos; ++i) {
    LatentVideo latent;
    latent.topic_mixture = video_rng.dirichlet(k, kTopicConcentration);
    bool audio_present = !(video_rng.uniform01() < config.audio_missing_fraction);
    latent.present = {true, true, audio_present};

    VideoRecord record;
    record.id = i;
    record.truth_topics = latent.topic_mixture;
    for (int m = 0; m < kModalityCount; ++m) {
      Vec eta = video_rng.dirichlet(k, kTopicConcentration);
      Vec view(static_cast<std::size_t>(k));
      for (int t = 0; t < k; ++t) {
        view[static_cast<std::size_t>(t)] = config.cross_modal_correlation * latent.topic_mixture[static_cast<std::size_t>(t)] +
                                            (1.0 - config.cross_modal_correlation) * eta[static_cast<std::size_t>(t)];
      }
      latent.views[static_cast<std::size_t>(m)] = view;
      if (!latent.present[static_cast<std::size_t>(m)]) continue;
      Vec feats = linear_map(loading[static_cast<std::size_t>(m)], view);
      for (auto& v : feats) v += config.modality_noise * video_rng.normal();
      record.features.features[static_cast<std::size_t>(m)] = std::move(feats);
      record.features.present[static_cast<std::size_t>(m)] = true;
    }
    world.videos.push_back(std::move(record));
    world.video_latents.push_back(std::move(latent));
  }

  // Users: profile-anchored affinity plus a personal component.
  Rng user_rng(config.seed, 0x75736572ull);
  world.users.reserve(static_cast<std::size_t>(config.n_users));
  for (int i = 0; i < config.n_users; ++i) {
    LatentUser user;
    std::size_t gi = static_cast<std::size_t>(user_rng.uniform_int(vocab.genders.size()));
    std::size_t ri = static_cast<std::size_t>(user_rng.uniform_int(vocab.regions.size()));
    std::size_t bi = static_cast<std::size_t>(user_rng.uniform_int(vocab.registration_buckets.size()));
    user.profile = {vocab.genders[gi], vocab.regions[ri], vocab.registration_buckets[bi]};

    Vec anchor(static_cast<std::size_t>(k), 0.0);
    axpy(1.0, anchor_gender[gi], anchor);
    axpy(1.0, anchor_region[ri], anchor);
    axpy(1.0, anchor_bucket[bi], anchor);
    anchor = normalized(std::move(anchor));

    auto make_affinity = [&](const Vec& personal, double anchor_weight) {
      Vec aff(static_cast<std::size_t>(k), 0.0);
      axpy(anchor_weight, anchor, aff);
      axpy(1.0 - anchor_weight, personal, aff);
      return normalized(std::move(aff));
    };
    user.affinity_pre = make_affinity(normalized(gaussian_vec(k, user_rng)), kProfileAnchorWeight);

    user.cold = user_rng.uniform01() < config.cold_fraction;
    user.drifted = !user.cold && user_rng.uniform01() < config.drift_fraction;
    if (user.drifted) {
      user.affinity_post = make_affinity(normalized(gaussian_vec(k, user_rng)), kDriftAnchorWeight);
    } else {
      user.affinity_post = user.affinity_pre;
    }

    if (user_rng.uniform01() < kSpecialistFraction) {
      int m = static_cast<int>(user_rng.uniform_int(kModalityCount));
      for (int j = 0; j < kModalityCount; ++j) {
        user.reliance[static_cast<std::size_t>(j)] = j == m ? kSpecialistWeight : (1.0 - kSpecialistWeight) / 2.0;
      }
    } else {
      Vec beta = user_rng.dirichlet(kModalityCount, kBalancedReliance);
      for (int j = 0; j < kModalityCount; ++j) user.reliance[static_cast<std::size_t>(j)] = beta[static_cast<std::size_t>(j)];
    }
    world.users.push_back(std::move(user));
  }
  return world;
}

double true_click_probability(const LatentUser& user, const LatentVideo& video, Timestamp t, double steepness,
                              double bias) {
  const Vec& affinity = (user.drifted && t >= drift_time()) ? user.affinity_post : user.affinity_pre;
  double total_reliance = 0.0;
  for (int m = 0; m < kModalityCount; ++m) {
    if (video.present[static_cast<std::size_t>(m)]) total_reliance += user.reliance[static_cast<std::size_t>(m)];
  }
  double alignment = 0.0;
  if (total_reliance > 0.0) {
    for (int m = 0; m < kModalityCount; ++m) {
      if (!video.present[static_cast<std::size_t>(m)]) continue;
      double weight = user.reliance[static_cast<std::size_t>(m)] / total_reliance;
      alignment += weight * dot(affinity, video.views[static_cast<std::size_t>(m)]);
    }
  }
  return sigmoid(steepness * alignment + bias);
}

double true_click_probability(const World& world, UserId user, VideoId video, Timestamp t) {
  return true_click_probability(world.users[static_cast<std::size_t>(user)],
                                world.video_latents[static_cast<std::size_t>(video)], t,
                                world.config.click_steepness, world.click_bias);
}

bool draw_click(const World& world, UserId user, VideoId video, Timestamp t, Rng& rng) {
  return rng.bernoulli(true_click_probability(world, user, video, t));
}

EventLog simulate_logs(const World& world) {
  const WorldConfig& cfg = world.config;
  EventLog log;
  log.events.reserve(static_cast<std::size_t>(cfg.n_users) * cfg.sessions_per_user * cfg.impressions_per_session * 2);

  const char* devices[3] = {"ios", "android", "web"};
  const char* networks[3] = {"wifi", "4g", "5g"};
  // Events within a session advance in fixed small steps; the span keeps
  // sessions inside one window.
  const Timestamp step = 8;
  const Timestamp span = static_cast<Timestamp>(cfg.impressions_per_session) * step + step;
  const Timestamp cutoff = history_cutoff();

  std::vector<int> pool(static_cast<std::size_t>(cfg.n_videos));
  for (UserId uid = 0; uid < cfg.n_users; ++uid) {
    Rng rng(cfg.seed, 0x6c6f6700ull + static_cast<std::uint64_t>(uid));
    const LatentUser& user = world.users[static_cast<std::size_t>(uid)];

    // Leave tail room so that separating overlapping sessions cannot run
    // past the horizon.
    Timestamp tail = span * static_cast<Timestamp>(cfg.sessions_per_user + 1);
    std::vector<Timestamp> starts(static_cast<std::size_t>(cfg.sessions_per_user));
    for (auto& s : starts) {
      if (user.cold) {
        s = cutoff + static_cast<Timestamp>(rng.uniform_int(static_cast<std::uint64_t>(kTimeHorizon - cutoff - tail)));
      } else {
        s = static_cast<Timestamp>(rng.uniform_int(static_cast<std::uint64_t>(kTimeHorizon - tail)));
      }
    }
    std::sort(starts.begin(), starts.end());
    Timestamp prev_end = -span;
    for (auto& s : starts) {
      s = std::max(s, prev_end + step);
      if (!user.cold && s < cutoff && s + span > cutoff) s = cutoff;  // straddlers become test sessions
      prev_end = s + span;
    }

    // Each user sees each video at most once across the horizon, so a
    // clicked target can never occur inside its own prefix.
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = static_cast<int>(i);
    std::size_t taken = 0;
    auto draw_video = [&]() {
      std::size_t remaining = pool.size() - taken;
      std::size_t j = taken + static_cast<std::size_t>(rng.uniform_int(remaining));
      std::swap(pool[taken], pool[j]);
      return static_cast<VideoId>(pool[taken++]);
    };

    Timestamp last_ts = -1;
    auto emit = [&](VideoId video, Timestamp ts, EventKind kind, double watch, const EventContext& ctx) {
      if (ts <= last_ts) ts = last_ts + 1;
      last_ts = ts;
      log.events.push_back({uid, video, ts, kind, watch, ctx});
    };

    for (Timestamp start : starts) {
      EventContext ctx;
      ctx.hour_bucket = static_cast<int>((start * 24) / kTimeHorizon) % 24;
      ctx.device = devices[rng.uniform_int(3)];
      ctx.network = networks[rng.uniform_int(3)];
      for (int imp = 0; imp < cfg.impressions_per_session; ++imp) {
        if (taken >= pool.size()) break;
        VideoId video = draw_video();
        Timestamp ts = start + static_cast<Timestamp>(imp) * step;
        emit(video, ts, EventKind::impression, 0.0, ctx);
        double p = true_click_probability(world, uid, video, ts);
        if (rng.uniform01() < p) {
          double watch = std::round(5.0 + 115.0 * p * (0.5 + 0.5 * rng.uniform01()));
          emit(video, ts + 1, EventKind::click, watch, ctx);
          if (rng.uniform01() < kLikeProb) emit(video, ts + 2, EventKind::like, 0.0, ctx);
          if (rng.uniform01() < kCommentProb) emit(video, ts + 3, EventKind::comment, 0.0, ctx);
        }
      }
    }
  }

  std::sort(log.events.begin(), log.events.end(), [](const Event& a, const Event& b) {
    if (a.ts != b.ts) return a.ts < b.ts;
    if (a.user != b.user) return a.user < b.user;
    if (a.video != b.video) return a.video < b.video;
    return static_cast<int>(a.kind) < static_cast<int>(b.kind);
  });
  return log;
}

}  // namespace mmrec
