#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mmrec/metrics.hpp"
#include "mmrec/model.hpp"
#include "mmrec/pipeline.hpp"
#include "mmrec/simdata.hpp"

namespace mmrec {

struct LabeledExample {
  UserId user = 0;
  VideoId target = 0;
  int label = 0;
  std::vector<VideoId> prefix;  // clicked videos strictly before the target event
};

struct TrainConfig {
  int max_len = 50;
  double learning_rate = 0.001;
  int batch_size = 128;
  int max_epochs = 20;
  int patience = 3;
  int negative_ratio = 4;
  int d = 16;
  std::uint64_t seed = 1;
};

struct TrainHistory {
  struct EpochEntry {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_auc = 0.0;
  };
  std::vector<EpochEntry> epochs;
  int best_epoch = 0;
  std::string stop_reason;  // "patience" | "max_epochs" | "no_training"
};

struct UserSplit {
  std::set<UserId> train;
  std::set<UserId> val;
  std::set<UserId> test;
};

// Disjoint user sets with sizes within +-1 of the exact proportions,
// deterministic per seed. Throws ArgumentError for fewer than 3 users.
UserSplit split_users(const std::vector<UserId>& users, const std::array<double, 3>& ratios, std::uint64_t seed);

// One positive per click; `negative_ratio` negatives per positive from the
// same session's non-clicked impressions, falling back to the catalog minus
// the user's clicked set. Logs must be time-sorted per user.
std::vector<LabeledExample> build_examples(const EventLog& log, const std::set<UserId>& users,
                                           const std::vector<VideoRecord>& catalog_videos, int negative_ratio,
                                           std::uint64_t seed);

// Binary cross-entropy with p clamped to [1e-12, 1 - 1e-12].
double bce(double p, double y);

// A user's evaluation view: history-window clicks and labeled test-window
// impressions.
struct EvalUser {
  UserId id = 0;
  StaticProfile profile;
  std::vector<std::pair<VideoId, Timestamp>> history;     // clicks before the cutoff
  std::vector<std::pair<VideoId, int>> test_impressions;  // (video, clicked)
};

std::vector<EvalUser> assemble_eval_users(const EventLog& log, const std::set<UserId>& users,
                                          const std::map<UserId, StaticProfile>& profiles, Timestamp cutoff);

struct TrainResult {
  Model model;
  TrainHistory history;
};

// Minibatch Adam over all parameter blocks with seeded shuffling; stops
// early when validation AUC fails to improve for `patience` epochs and
// returns the best-epoch parameters.
TrainResult train(const std::vector<LabeledExample>& examples, const std::vector<EvalUser>& val_users,
                  const std::vector<VideoRecord>& videos, const std::map<UserId, StaticProfile>& profiles,
                  const TrainConfig& config, const ModelConfig& model_config);

struct EvalOptions {
  std::vector<int> k_list = {5, 10};
  int m = 200;
  bool keep_detail = false;
};

struct PerUserEval {
  UserId id = 0;
  bool skipped = false;
  std::map<int, double> precision, recall, ndcg;
  std::vector<std::pair<double, int>> scored_impressions;
  std::array<double, 3> mean_weights = {0.0, 0.0, 0.0};  // over the user's top-K list
  int relevant_count = 0;
  int candidate_count = 0;  // catalog minus consumed
};

struct EvalResult {
  MetricsReport report;
  std::vector<PerUserEval> detail;  // filled when keep_detail
};

// Macro-averages the ranking metrics over eligible users; AUC and F1 pool
// all labeled test impressions. Weight shares average over every scored
// (user, video) pair.
EvalResult evaluate(const Model& model, const Catalog& catalog, const std::vector<EvalUser>& test_users,
                    const EvalOptions& options);

// Impression-level AUC for a scorer; shared by validation early stopping.
double impression_auc(const Model& model, const Catalog& catalog, const std::vector<EvalUser>& users);

}  // namespace mmrec
