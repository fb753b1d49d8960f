#include "mmrec/training.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "mmrec/errors.hpp"
#include "mmrec/rng.hpp"

namespace mmrec {

UserSplit split_users(const std::vector<UserId>& users, const std::array<double, 3>& ratios, std::uint64_t seed) {
  double total = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(total - 1.0) > 1e-9) throw ArgumentError("split_users: ratios must sum to 1");
  if (users.size() < 3) throw ArgumentError("split_users: need at least 3 users");

  std::vector<UserId> shuffled(users);
  std::sort(shuffled.begin(), shuffled.end());
  Rng rng(seed, 0x73706c6974ull);
  rng.shuffle(shuffled);

  std::size_t n = shuffled.size();
  std::size_t n_train = static_cast<std::size_t>(std::llround(ratios[0] * static_cast<double>(n)));
  std::size_t n_val = static_cast<std::size_t>(std::llround(ratios[1] * static_cast<double>(n)));
  n_train = std::min(n_train, n);
  n_val = std::min(n_val, n - n_train);

  UserSplit split;
  for (std::size_t i = 0; i < n; ++i) {
    if (i < n_train) split.train.insert(shuffled[i]);
    else if (i < n_train + n_val) split.val.insert(shuffled[i]);
    else split.test.insert(shuffled[i]);
  }
  return split;
}

std::vector<LabeledExample> build_examples(const EventLog& log, const std::set<UserId>& users,
                                           const std::vector<VideoRecord>& catalog_videos, int negative_ratio,
                                           std::uint64_t seed) {
  if (negative_ratio < 0) throw ArgumentError("build_examples: negative_ratio must be >= 0");

  // Group the relevant events per user, preserving time order.
  std::unordered_map<UserId, std::vector<const Event*>> per_user;
  for (const auto& event : log.events) {
    if (users.count(event.user) == 0) continue;
    per_user[event.user].push_back(&event);
  }

  std::vector<UserId> ordered_users;
  ordered_users.reserve(per_user.size());
  for (const auto& [uid, events] : per_user) ordered_users.push_back(uid);
  std::sort(ordered_users.begin(), ordered_users.end());

  std::vector<LabeledExample> examples;
  for (UserId uid : ordered_users) {
    const auto& events = per_user[uid];
    Rng rng(seed, 0x6578616dull + static_cast<std::uint64_t>(uid));

    std::unordered_set<VideoId> clicked_ever;
    for (const Event* e : events) {
      if (e->kind == EventKind::click) clicked_ever.insert(e->video);
    }

    // Sessions are runs of impressions sharing a context; for sampling we
    // only need, per click, the other impressions near it. Group by the
    // impression gaps: a new session starts when the time step jumps.
    std::vector<std::vector<const Event*>> sessions;
    std::vector<const Event*> current;
    Timestamp last_ts = -1;
    for (const Event* e : events) {
      if (e->kind != EventKind::impression) continue;
      if (last_ts >= 0 && e->ts - last_ts > 64) {
        sessions.push_back(std::move(current));
        current.clear();
      }
      current.push_back(e);
      last_ts = e->ts;
    }
    if (!current.empty()) sessions.push_back(std::move(current));

    std::unordered_map<VideoId, std::size_t> session_of;
    std::unordered_set<VideoId> clicked_session;  // rebuilt per session below
    std::vector<std::vector<VideoId>> session_negatives(sessions.size());
    for (std::size_t s = 0; s < sessions.size(); ++s) {
      for (const Event* e : sessions[s]) session_of[e->video] = s;
    }
    for (const Event* e : events) {
      if (e->kind != EventKind::click) continue;
      clicked_session.insert(e->video);
    }
    for (std::size_t s = 0; s < sessions.size(); ++s) {
      for (const Event* e : sessions[s]) {
        if (clicked_session.count(e->video) == 0) session_negatives[s].push_back(e->video);
      }
    }

    // Prefix of clicked videos strictly before each target timestamp.
    std::vector<VideoId> prefix;
    std::size_t click_cursor = 0;
    std::vector<const Event*> clicks;
    for (const Event* e : events) {
      if (e->kind == EventKind::click) clicks.push_back(e);
    }

    for (const Event* click : clicks) {
      while (click_cursor < clicks.size() && clicks[click_cursor]->ts < click->ts) {
        prefix.push_back(clicks[click_cursor]->video);
        ++click_cursor;
      }
      LabeledExample positive;
      positive.user = uid;
      positive.target = click->video;
      positive.label = 1;
      positive.prefix = prefix;
      examples.push_back(positive);

      // Negatives: uniform over the session's non-clicked impressions,
      // falling back to the catalog minus the user's clicked set.
      std::vector<VideoId> pool;
      auto it = session_of.find(click->video);
      if (it != session_of.end()) pool = session_negatives[it->second];
      rng.shuffle(pool);
      for (int nneg = 0; nneg < negative_ratio; ++nneg) {
        VideoId negative = -1;
        if (static_cast<std::size_t>(nneg) < pool.size()) {
          negative = pool[static_cast<std::size_t>(nneg)];
        } else {
          for (int attempt = 0; attempt < 64; ++attempt) {
            VideoId candidate = catalog_videos[static_cast<std::size_t>(rng.uniform_int(catalog_videos.size()))].id;
            if (clicked_ever.count(candidate) == 0) {
              negative = candidate;
              break;
            }
          }
        }
        if (negative < 0) continue;
        LabeledExample neg;
        neg.user = uid;
        neg.target = negative;
        neg.label = 0;
        neg.prefix = prefix;
        examples.push_back(neg);
      }
    }
  }
  return examples;
}

double bce(double p, double y) {
  double q = std::clamp(p, 1e-12, 1.0 - 1e-12);
  return -(y * std::log(q) + (1.0 - y) * std::log(1.0 - q));
}

std::vector<EvalUser> assemble_eval_users(const EventLog& log, const std::set<UserId>& users,
                                          const std::map<UserId, StaticProfile>& profiles, Timestamp cutoff) {
  std::map<UserId, EvalUser> by_user;
  for (UserId uid : users) {
    EvalUser u;
    u.id = uid;
    auto it = profiles.find(uid);
    if (it != profiles.end()) u.profile = it->second;
    by_user[uid] = std::move(u);
  }
  std::map<std::pair<UserId, VideoId>, std::size_t> impression_index;
  for (const auto& event : log.events) {
    auto it = by_user.find(event.user);
    if (it == by_user.end()) continue;
    EvalUser& u = it->second;
    if (event.ts < cutoff) {
      if (event.kind == EventKind::click) u.history.emplace_back(event.video, event.ts);
    } else {
      if (event.kind == EventKind::impression) {
        impression_index[{event.user, event.video}] = u.test_impressions.size();
        u.test_impressions.emplace_back(event.video, 0);
      } else if (event.kind == EventKind::click) {
        auto idx = impression_index.find({event.user, event.video});
        if (idx != impression_index.end()) u.test_impressions[idx->second].second = 1;
      }
    }
  }
  std::vector<EvalUser> out;
  out.reserve(by_user.size());
  for (auto& [uid, u] : by_user) out.push_back(std::move(u));
  return out;
}

namespace {

struct AdamState {
  Vec m;
  Vec v;
  long step = 0;
};

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, double lr) {
  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double eps = 1e-8;
  Vec flat_grads = grads.flatten();
  Vec flat = params.flatten();
  if (state.m.empty()) {
    state.m.assign(flat.size(), 0.0);
    state.v.assign(flat.size(), 0.0);
  }
  ++state.step;
  double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < flat.size(); ++i) {
    double g = flat_grads[i];
    state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g;
    state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g * g;
    double mhat = state.m[i] / bc1;
    double vhat = state.v[i] / bc2;
    flat[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
  params.unflatten(flat);
}

void zero_params(ModelParams& p) {
  for_each_param_block(p, [](ParamBlockRef ref) { std::fill(ref.values.begin(), ref.values.end(), 0.0); });
}

}  // namespace

double impression_auc(const Model& model, const Catalog& catalog, const std::vector<EvalUser>& users) {
  std::vector<std::pair<double, int>> scored;
  for (const auto& user : users) {
    if (user.test_impressions.empty()) continue;
    UserState state{user.id, user.profile, user.history};
    BehaviorSequence seq = sequence_from_history(state, model, catalog);
    Vec z = user_vector(model, seq, user.profile);
    for (const auto& [video, label] : user.test_impressions) {
      const CatalogEntry* entry = catalog.find(video);
      if (entry == nullptr) continue;
      auto [score, weights] = score_pair(z, *entry, model.params.fusion);
      scored.emplace_back(predict_click(score), label);
    }
  }
  return auc(scored);
}

TrainResult train(const std::vector<LabeledExample>& examples, const std::vector<EvalUser>& val_users,
                  const std::vector<VideoRecord>& videos, const std::map<UserId, StaticProfile>& profiles,
                  const TrainConfig& config, const ModelConfig& model_config) {
  if (examples.empty()) throw ArgumentError("train: empty training example set");
  bool have_val = false;
  for (const auto& u : val_users) have_val = have_val || !u.test_impressions.empty();
  if (config.max_epochs > 0 && !have_val) throw ArgumentError("train: empty validation example set");

  TrainResult result;
  result.model.config = model_config;
  result.model.config.max_len = config.max_len;
  result.model.params = ModelParams::glorot(model_config, config.seed);

  // Feature lookups by video id; examples reference catalog videos.
  std::unordered_map<VideoId, const ModalityFeatures*> features;
  features.reserve(videos.size());
  for (const auto& v : videos) features[v.id] = &v.features;
  std::unordered_map<UserId, const StaticProfile*> profile_of;
  for (const auto& [uid, profile] : profiles) profile_of[uid] = &profile;
  static const StaticProfile kEmptyProfile;

  auto resolve = [&](const LabeledExample& ex, ResolvedExample& out) {
    auto target = features.find(ex.target);
    if (target == features.end()) return false;
    out.target = target->second;
    out.history.clear();
    std::size_t start = ex.prefix.size() > static_cast<std::size_t>(config.max_len)
                            ? ex.prefix.size() - static_cast<std::size_t>(config.max_len)
                            : 0;
    for (std::size_t i = start; i < ex.prefix.size(); ++i) {
      auto it = features.find(ex.prefix[i]);
      if (it != features.end()) out.history.push_back(it->second);
    }
    auto prof = profile_of.find(ex.user);
    out.profile = prof != profile_of.end() ? prof->second : &kEmptyProfile;
    out.label = ex.label;
    return true;
  };

  if (config.max_epochs == 0) {
    result.history.stop_reason = "no_training";
    result.history.best_epoch = 0;
    return result;
  }

  ModelParams grads = ModelParams::zeros(model_config);
  AdamState adam;
  ModelWorkspace ws;
  Rng shuffle_rng(config.seed, 0x736875ull);

  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  ModelParams best_params = result.model.params;
  double best_auc = -1.0;
  int best_epoch = 0;
  int since_best = 0;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(config.batch_size)) {
      std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(config.batch_size));
      zero_params(grads);
      double batch_loss = 0.0;
      std::size_t batch_n = 0;
      ResolvedExample resolved;
      for (std::size_t i = begin; i < end; ++i) {
        if (!resolve(examples[order[i]], resolved)) continue;
        batch_loss += example_loss(result.model, resolved, &grads, ws);
        ++batch_n;
      }
      if (batch_n == 0) continue;
      if (!std::isfinite(batch_loss)) {
        throw NumericError("train: non-finite loss in batch " + std::to_string(batch_index) + " of epoch " +
                           std::to_string(epoch));
      }
      // Mean-reduced gradients.
      for_each_param_block(grads, [&](ParamBlockRef ref) {
        for (double& g : ref.values) g /= static_cast<double>(batch_n);
      });
      adam_step(result.model.params, grads, adam, config.learning_rate);
      loss_sum += batch_loss;
      loss_count += batch_n;
      ++batch_index;
    }

    Catalog catalog = Catalog::build(videos, result.model.params.fusion, model_config.variant);
    double val_auc = impression_auc(result.model, catalog, val_users);
    result.history.epochs.push_back({epoch, loss_count > 0 ? loss_sum / static_cast<double>(loss_count) : 0.0, val_auc});

    if (val_auc > best_auc) {
      best_auc = val_auc;
      best_epoch = epoch;
      best_params = result.model.params;
      since_best = 0;
    } else {
      ++since_best;
      if (since_best >= config.patience) {
        result.history.stop_reason = "patience";
        break;
      }
    }
  }
  if (result.history.stop_reason.empty()) result.history.stop_reason = "max_epochs";
  result.history.best_epoch = best_epoch;
  result.model.params = best_params;
  return result;
}

EvalResult evaluate(const Model& model, const Catalog& catalog, const std::vector<EvalUser>& test_users,
                    const EvalOptions& options) {
  EvalResult out;
  std::vector<std::pair<double, int>> pooled;
  std::vector<AttentionWeights> all_weights;
  std::map<int, double> precision_sum, recall_sum, ndcg_sum;
  int eligible = 0;
  int skipped = 0;
  int max_k = 1;
  for (int k : options.k_list) max_k = std::max(max_k, k);

  // Users are visited in ascending id order for a deterministic reduction.
  std::vector<const EvalUser*> ordered;
  ordered.reserve(test_users.size());
  for (const auto& u : test_users) ordered.push_back(&u);
  std::sort(ordered.begin(), ordered.end(), [](const EvalUser* a, const EvalUser* b) { return a->id < b->id; });

  for (const EvalUser* user : ordered) {
    PerUserEval detail;
    detail.id = user->id;

    std::set<VideoId> relevant;
    for (const auto& [video, label] : user->test_impressions) {
      if (label != 0 && catalog.find(video) != nullptr) relevant.insert(video);
    }

    UserState state{user->id, user->profile, user->history};
    BehaviorSequence seq = sequence_from_history(state, model, catalog);
    Vec z = user_vector(model, seq, user->profile);

    // Impression-level scores for AUC/F1.
    for (const auto& [video, label] : user->test_impressions) {
      const CatalogEntry* entry = catalog.find(video);
      if (entry == nullptr) continue;
      auto [score, weights] = score_pair(z, *entry, model.params.fusion);
      double p = predict_click(score);
      pooled.emplace_back(p, label);
      all_weights.push_back(weights);
      if (options.keep_detail) detail.scored_impressions.emplace_back(p, label);
    }

    if (relevant.empty()) {
      ++skipped;
      detail.skipped = true;
      if (options.keep_detail) out.detail.push_back(std::move(detail));
      continue;
    }

    std::set<VideoId> consumed;
    for (const auto& [video, ts] : user->history) consumed.insert(video);
    detail.candidate_count = static_cast<int>(catalog.size() - consumed.size());
    detail.relevant_count = static_cast<int>(relevant.size());

    std::vector<Recommendation> recs =
        recommend(state, model, catalog, std::min<int>(max_k, options.m), options.m);
    RankedList list;
    for (const auto& r : recs) {
      list.ranking.push_back(r.id);
      all_weights.push_back(r.weights);
      for (int m = 0; m < kModalityCount; ++m) {
        detail.mean_weights[static_cast<std::size_t>(m)] += r.weights.alpha[static_cast<std::size_t>(m)];
      }
    }
    if (!recs.empty()) {
      for (auto& w : detail.mean_weights) w /= static_cast<double>(recs.size());
    }
    list.relevant = relevant;

    ++eligible;
    for (int k : options.k_list) {
      double p = precision_at_k(list, k);
      double r = recall_at_k(list, k);
      double n = ndcg_at_k(list, k);
      precision_sum[k] += p;
      recall_sum[k] += r;
      ndcg_sum[k] += n;
      detail.precision[k] = p;
      detail.recall[k] = r;
      detail.ndcg[k] = n;
    }
    if (options.keep_detail) out.detail.push_back(std::move(detail));
  }

  MetricsReport& report = out.report;
  report.user_count = eligible;
  report.skipped_users = skipped;
  for (int k : options.k_list) {
    report.precision[k] = eligible > 0 ? precision_sum[k] / eligible : 0.0;
    report.recall[k] = eligible > 0 ? recall_sum[k] / eligible : 0.0;
    report.ndcg[k] = eligible > 0 ? ndcg_sum[k] / eligible : 0.0;
  }
  report.auc = pooled.empty() ? 0.0 : auc(pooled);
  report.f1 = f1_score(pooled);
  if (!all_weights.empty()) report.weight_share = modality_weight_share(all_weights);
  return out;
}

}  // namespace mmrec
