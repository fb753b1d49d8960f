#include "mmrec/experiment.hpp"

#include <algorithm>

#include <json.hpp>

#include "mmrec/errors.hpp"
#include "mmrec/rng.hpp"

namespace mmrec {

using nlohmann::json;

Dataset generate_dataset(const WorldConfig& config, World* world_out) {
  World world = generate_world(config);
  Dataset data;
  data.videos = world.videos;
  data.log = simulate_logs(world);
  for (std::size_t i = 0; i < world.users.size(); ++i) {
    data.profiles[static_cast<UserId>(i)] = world.users[i].profile;
  }
  if (world_out != nullptr) *world_out = std::move(world);
  return data;
}

Dataset load_dataset(const RunConfig& config) {
  Dataset data;
  data.videos = read_catalog_jsonl(config.catalog_path);
  data.log = read_events_jsonl(config.events_path);
  data.profiles = read_profiles_jsonl(config.profiles_path);
  return data;
}

ModelConfig model_config_for(const Dataset& data, const RunConfig& config, Variant variant) {
  ModelConfig mc;
  mc.d = config.train.d;
  mc.d_visual = config.world.d_visual;
  mc.d_textual = config.world.d_textual;
  mc.d_audio = config.world.d_audio;
  // Feature widths come from the data itself when available; keep scanning
  // until an audio-bearing video is seen.
  bool saw_any = false;
  for (const auto& video : data.videos) {
    if (!saw_any) {
      if (video.features.present[0]) mc.d_visual = static_cast<int>(video.features.visual().size());
      if (video.features.present[1]) mc.d_textual = static_cast<int>(video.features.textual().size());
      saw_any = true;
    }
    if (video.features.present[2]) {
      mc.d_audio = static_cast<int>(video.features.audio().size());
      break;
    }
  }
  mc.max_len = config.train.max_len;
  mc.variant = variant;
  mc.vocab = world_vocab();
  return mc;
}

VariantRun run_variant(const Dataset& data, const RunConfig& config, Variant variant, bool keep_detail) {
  std::vector<UserId> users;
  users.reserve(data.profiles.size());
  for (const auto& [uid, p] : data.profiles) users.push_back(uid);

  UserSplit split = split_users(users, {0.70, 0.15, 0.15}, config.train.seed);
  std::vector<LabeledExample> examples =
      build_examples(data.log, split.train, data.videos, config.train.negative_ratio, config.train.seed);
  std::vector<EvalUser> val_users = assemble_eval_users(data.log, split.val, data.profiles, history_cutoff());
  std::vector<EvalUser> test_users = assemble_eval_users(data.log, split.test, data.profiles, history_cutoff());

  ModelConfig mc = model_config_for(data, config, variant);
  VariantRun run;
  run.variant = variant;
  TrainResult trained = train(examples, val_users, data.videos, data.profiles, config.train, mc);
  run.model = std::move(trained.model);
  run.history = std::move(trained.history);

  Catalog catalog = Catalog::build(data.videos, run.model.params.fusion, variant);
  EvalOptions opts;
  opts.k_list = config.k_list;
  opts.m = config.m;
  opts.keep_detail = keep_detail;
  EvalResult eval = evaluate(run.model, catalog, test_users, opts);
  run.report = std::move(eval.report);
  run.detail = std::move(eval.detail);
  return run;
}

AblationRow random_ranking_baseline(const Dataset& data, const RunConfig& config) {
  std::vector<UserId> users;
  for (const auto& [uid, p] : data.profiles) users.push_back(uid);
  UserSplit split = split_users(users, {0.70, 0.15, 0.15}, config.train.seed);
  std::vector<EvalUser> test_users = assemble_eval_users(data.log, split.test, data.profiles, history_cutoff());

  Rng rng(config.train.seed, 0x72616e64ull);
  std::vector<std::pair<double, int>> pooled;
  double ndcg_sum = 0.0, precision_sum = 0.0;
  int eligible = 0;
  for (const auto& user : test_users) {
    std::set<VideoId> relevant;
    for (const auto& [video, label] : user.test_impressions) {
      if (label != 0) relevant.insert(video);
    }
    for (const auto& [video, label] : user.test_impressions) pooled.emplace_back(rng.uniform01(), label);
    if (relevant.empty()) continue;
    std::set<VideoId> consumed;
    for (const auto& [video, ts] : user.history) consumed.insert(video);
    std::vector<VideoId> pool;
    pool.reserve(data.videos.size());
    for (const auto& v : data.videos) {
      if (consumed.count(v.id) == 0) pool.push_back(v.id);
    }
    rng.shuffle(pool);
    RankedList list;
    list.relevant = relevant;
    for (std::size_t i = 0; i < std::min<std::size_t>(10, pool.size()); ++i) list.ranking.push_back(pool[i]);
    ndcg_sum += ndcg_at_k(list, 10);
    precision_sum += precision_at_k(list, 10);
    ++eligible;
  }
  AblationRow row;
  row.variant = "RANDOM";
  row.ndcg10 = eligible > 0 ? ndcg_sum / eligible : 0.0;
  row.precision10 = eligible > 0 ? precision_sum / eligible : 0.0;
  bool has_pos = false, has_neg = false;
  for (const auto& [s, l] : pooled) (l != 0 ? has_pos : has_neg) = true;
  row.auc = (has_pos && has_neg) ? auc(pooled) : 0.0;
  return row;
}

AblationReport run_ablation(const Dataset& data, const RunConfig& config, bool keep_detail) {
  AblationReport report;
  for (Variant variant : all_variants()) {
    VariantRun run = run_variant(data, config, variant, keep_detail);
    AblationRow row;
    row.variant = variant_name(variant);
    row.ndcg10 = run.report.ndcg.count(10) ? run.report.ndcg.at(10) : 0.0;
    row.precision10 = run.report.precision.count(10) ? run.report.precision.at(10) : 0.0;
    row.auc = run.report.auc;
    report.rows.push_back(row);
    report.runs.push_back(std::move(run));
  }
  report.random_baseline = random_ranking_baseline(data, config);
  return report;
}

std::string ablation_report_json(const AblationReport& report, const RunConfig& config) {
  json j;
  j["note"] = "variant grid with a random-ranking reference in place of external baselines";
  j["seed"] = config.train.seed;
  json rows = json::array();
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const AblationRow& r = report.rows[i];
    json row;
    row["variant"] = r.variant;
    row["ndcg@10"] = r.ndcg10;
    row["precision@10"] = r.precision10;
    row["auc"] = r.auc;
    row["stop_reason"] = report.runs[i].history.stop_reason;
    row["best_epoch"] = report.runs[i].history.best_epoch;
    rows.push_back(row);
  }
  j["rows"] = rows;
  j["random_baseline"] = {{"ndcg@10", report.random_baseline.ndcg10},
                          {"precision@10", report.random_baseline.precision10},
                          {"auc", report.random_baseline.auc}};
  return j.dump(2);
}

}  // namespace mmrec
