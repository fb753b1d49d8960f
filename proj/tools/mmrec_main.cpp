#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <set>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mmrec/errors.hpp"
#include "mmrec/experiment.hpp"
#include "mmrec/io.hpp"
#include "mmrec/metrics.hpp"
#include "mmrec/pipeline.hpp"
#include "mmrec/simdata.hpp"
#include "mmrec/training.hpp"

using namespace mmrec;
using nlohmann::json;

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string variant;
  std::string world_profile = "default";
  long long user_id = -1;
  int k = 0;
  int m = 0;
};

RunConfig resolve_config(const CommonFlags& flags) {
  RunConfig config = flags.config_path.empty() ? default_run_config() : load_run_config(flags.config_path);
  apply_env_overrides(config);
  if (!flags.out_dir.empty()) {
    config.out_dir = flags.out_dir;
    config.catalog_path.clear();
    config.events_path.clear();
    config.profiles_path.clear();
    config.ground_truth_path.clear();
    config.model_path.clear();
    config.history_path.clear();
    config.report_json_path.clear();
    config.report_table_path.clear();
    config.apply_defaults();
  }
  if (!flags.variant.empty()) config.variant = variant_from_name(flags.variant);
  if (flags.k > 0) {
    config.k_list.push_back(flags.k);
    std::sort(config.k_list.begin(), config.k_list.end());
    config.k_list.erase(std::unique(config.k_list.begin(), config.k_list.end()), config.k_list.end());
  }
  if (flags.m > 0) config.m = flags.m;
  if (flags.world_profile == "kubd") {
    config.world.audio_missing_fraction = 1.0;
  } else if (flags.world_profile != "default") {
    throw ConfigError("unknown world profile '" + flags.world_profile + "' (expected default or kubd)");
  }
  return config;
}

int cmd_gen_data(const CommonFlags& flags) {
  RunConfig config = resolve_config(flags);
  if (flags.seed_set) config.world.seed = flags.seed;
  World world;
  Dataset data = generate_dataset(config.world, &world);
  write_catalog_jsonl(config.catalog_path, data.videos);
  write_events_jsonl(config.events_path, data.log);
  write_profiles_jsonl(config.profiles_path, data.profiles);
  write_ground_truth_jsonl(config.ground_truth_path, world);

  long impressions = 0, clicks = 0;
  for (const auto& e : data.log.events) {
    if (e.kind == EventKind::impression) ++impressions;
    if (e.kind == EventKind::click) ++clicks;
  }
  long audio_missing = 0;
  for (const auto& v : data.videos) audio_missing += v.features.present[2] ? 0 : 1;
  std::cout << "generated users=" << config.world.n_users << " videos=" << config.world.n_videos
            << " behavior_records=" << data.log.events.size() << " impressions=" << impressions
            << " clicks=" << clicks << " avg_sequence_length="
            << (config.world.n_users > 0 ? static_cast<double>(clicks) / config.world.n_users : 0.0)
            << " audio_missing_videos=" << audio_missing << " seed=" << config.world.seed << "\n";
  std::cout << "wrote " << config.catalog_path << ", " << config.events_path << ", " << config.profiles_path << ", "
            << config.ground_truth_path << "\n";
  return 0;
}

int cmd_train(const CommonFlags& flags) {
  RunConfig config = resolve_config(flags);
  if (flags.seed_set) config.train.seed = flags.seed;
  Dataset data = load_dataset(config);

  std::vector<UserId> users;
  for (const auto& [uid, p] : data.profiles) users.push_back(uid);
  UserSplit split = split_users(users, {0.70, 0.15, 0.15}, config.train.seed);
  auto examples = build_examples(data.log, split.train, data.videos, config.train.negative_ratio, config.train.seed);
  auto val_users = assemble_eval_users(data.log, split.val, data.profiles, history_cutoff());
  ModelConfig mc = model_config_for(data, config, config.variant);

  TrainResult result = train(examples, val_users, data.videos, data.profiles, config.train, mc);
  ModelSeeds seeds{config.train.seed, config.world.seed};
  save_model(config.model_path, result.model, seeds);
  write_text_file(config.history_path, train_history_json(result.history, config.train));
  std::cout << "trained variant=" << variant_name(config.variant) << " examples=" << examples.size()
            << " epochs=" << result.history.epochs.size() << " best_epoch=" << result.history.best_epoch
            << " stop=" << result.history.stop_reason << "\n";
  if (!result.history.epochs.empty()) {
    std::cout << "best validation auc="
              << result.history.epochs[static_cast<std::size_t>(std::max(result.history.best_epoch - 1, 0))].val_auc
              << "\n";
  }
  std::cout << "wrote " << config.model_path << " and " << config.history_path << "\n";
  return 0;
}

int cmd_evaluate(const CommonFlags& flags) {
  RunConfig config = resolve_config(flags);
  Dataset data = load_dataset(config);
  ModelSeeds seeds;
  Model model = load_model(config.model_path, &seeds);
  if (!flags.variant.empty() && model.config.variant != config.variant) {
    throw ConfigError(std::string("model file was trained as ") + variant_name(model.config.variant) +
                      " but the requested variant is " + variant_name(config.variant));
  }

  // The split must mirror training; the model file records the seed.
  std::vector<UserId> users;
  for (const auto& [uid, p] : data.profiles) users.push_back(uid);
  UserSplit split = split_users(users, {0.70, 0.15, 0.15}, seeds.train_seed);
  auto test_users = assemble_eval_users(data.log, split.test, data.profiles, history_cutoff());

  Catalog catalog = Catalog::build(data.videos, model.params.fusion, model.config.variant);
  EvalOptions opts;
  opts.k_list = config.k_list;
  opts.m = config.m;
  EvalResult result = evaluate(model, catalog, test_users, opts);

  write_text_file(config.report_json_path, metrics_report_json(result.report));
  std::vector<AblationRow> rows = {{variant_name(model.config.variant),
                                    result.report.ndcg.count(10) ? result.report.ndcg.at(10) : 0.0,
                                    result.report.precision.count(10) ? result.report.precision.at(10) : 0.0,
                                    result.report.auc}};
  std::string table = ablation_table_text(rows, nullptr);
  write_text_file(config.report_table_path, table);
  std::cout << table;
  std::cout << "auc=" << result.report.auc << " users=" << result.report.user_count
            << " skipped=" << result.report.skipped_users << "\n";
  std::cout << "wrote " << config.report_json_path << " and " << config.report_table_path << "\n";
  return 0;
}

UserState state_from_log(const Dataset& data, UserId user) {
  auto it = data.profiles.find(user);
  if (it == data.profiles.end()) {
    // nearest ids by numeric distance
    std::vector<UserId> ids;
    for (const auto& [uid, p] : data.profiles) ids.push_back(uid);
    std::sort(ids.begin(), ids.end(), [&](UserId a, UserId b) {
      long long da = std::llabs(a - user), db = std::llabs(b - user);
      if (da != db) return da < db;
      return a < b;
    });
    std::string nearest;
    for (std::size_t i = 0; i < std::min<std::size_t>(5, ids.size()); ++i) {
      nearest += (i ? ", " : "") + std::to_string(ids[i]);
    }
    throw LookupError("user " + std::to_string(user) + " not found; nearest ids: " + nearest);
  }
  UserState state;
  state.id = user;
  state.profile = it->second;
  for (const auto& e : data.log.events) {
    if (e.user == user && e.kind == EventKind::click) state.consumed.emplace_back(e.video, e.ts);
  }
  return state;
}

int cmd_recommend(const CommonFlags& flags) {
  RunConfig config = resolve_config(flags);
  Dataset data = load_dataset(config);
  Model model = load_model(config.model_path);
  int k = flags.k > 0 ? flags.k : 10;
  int m = flags.m > 0 ? flags.m : config.m;

  UserState state = state_from_log(data, flags.user_id);
  Catalog catalog = Catalog::build(data.videos, model.params.fusion, model.config.variant);
  auto recs = recommend(state, model, catalog, k, m);
  std::cout << "rank video_id fine_score click_prob alpha_visual alpha_textual alpha_audio\n";
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto& r = recs[i];
    std::cout << (i + 1) << " " << r.id << " " << r.fine_score << " " << r.click_prob << " " << r.weights.visual()
              << " " << r.weights.textual() << " " << r.weights.audio() << "\n";
  }
  return 0;
}

int cmd_ablate(const CommonFlags& flags) {
  RunConfig config = resolve_config(flags);
  if (flags.seed_set) config.train.seed = flags.seed;
  Dataset data = load_dataset(config);
  AblationReport report = run_ablation(data, config);

  std::string table = ablation_table_text(report.rows, &report.random_baseline);
  write_text_file(config.out_dir + "/ablation_table.txt", table);
  write_text_file(config.out_dir + "/ablation_report.json", ablation_report_json(report, config));
  ModelSeeds seeds{config.train.seed, config.world.seed};
  for (const auto& run : report.runs) {
    save_model(config.out_dir + "/model_" + variant_name(run.variant) + ".bin", run.model, seeds);
    write_text_file(config.out_dir + "/report_" + std::string(variant_name(run.variant)) + ".json",
                    metrics_report_json(run.report));
    RunConfig variant_config = config;
    variant_config.variant = run.variant;
    write_text_file(config.out_dir + "/config_" + std::string(variant_name(run.variant)) + ".json",
                    run_config_json(variant_config));
  }
  std::cout << table;
  std::cout << "wrote " << config.out_dir << "/ablation_report.json\n";
  return 0;
}

int cmd_explain(const CommonFlags& flags) {
  RunConfig config = resolve_config(flags);
  Dataset data = load_dataset(config);
  Model model = load_model(config.model_path);
  if (model.config.variant != Variant::full) {
    throw ConfigError(std::string("explain requires a FULL-variant model; this model is ") +
                      variant_name(model.config.variant));
  }
  int k = flags.k > 0 ? flags.k : 10;

  UserState state = state_from_log(data, flags.user_id);
  Catalog catalog = Catalog::build(data.videos, model.params.fusion, model.config.variant);
  AttentionTrace trace;
  auto recs = recommend(state, model, catalog, k, std::max(config.m, k), &trace);

  json out;
  out["user_id"] = flags.user_id;
  json items = json::array();
  for (const auto& r : recs) {
    int dominant = 0;
    for (int m = 1; m < kModalityCount; ++m) {
      if (r.weights.alpha[static_cast<std::size_t>(m)] > r.weights.alpha[static_cast<std::size_t>(dominant)]) dominant = m;
    }
    items.push_back({{"video_id", r.id},
                     {"fine_score", r.fine_score},
                     {"click_prob", r.click_prob},
                     {"alpha", {{"visual", r.weights.visual()}, {"textual", r.weights.textual()}, {"audio", r.weights.audio()}}},
                     {"dominant_modality", kModalityNames[static_cast<std::size_t>(dominant)]}});
  }
  out["items"] = items;

  json attention = json::array();
  for (std::size_t b = 0; b < trace.block_head_probs.size(); ++b) {
    json heads = json::array();
    for (const auto& probs : trace.block_head_probs[b]) {
      json rows = json::array();
      for (int i = 0; i < probs.rows; ++i) {
        json row = json::array();
        for (int j = 0; j < probs.cols; ++j) row.push_back(probs.at(i, j));
        rows.push_back(row);
      }
      heads.push_back(rows);
    }
    attention.push_back(heads);
  }
  out["sequence_attention"] = {{"window_videos", trace.window_videos}, {"blocks", attention}};

  // Videos ranked by total attention received, averaged over heads and
  // query positions.
  std::size_t window = trace.window_videos.size();
  if (window > 0 && !trace.block_head_probs.empty()) {
    std::vector<double> received(window, 0.0);
    int contributions = 0;
    for (const auto& heads : trace.block_head_probs) {
      for (const auto& probs : heads) {
        for (int i = 0; i < probs.rows; ++i) {
          for (int j = 0; j < probs.cols; ++j) received[static_cast<std::size_t>(j)] += probs.at(i, j);
        }
        contributions += probs.rows;
      }
    }
    std::vector<std::size_t> order(window);
    for (std::size_t i = 0; i < window; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (received[a] != received[b]) return received[a] > received[b];
      return a < b;
    });
    json top = json::array();
    for (std::size_t i = 0; i < std::min<std::size_t>(10, window); ++i) {
      top.push_back({{"video_id", trace.window_videos[order[i]]},
                     {"mean_attention_received", received[order[i]] / std::max(1, contributions)}});
    }
    out["top_attended_history"] = top;
  }

  std::string path = config.out_dir + "/explain_user_" + std::to_string(flags.user_id) + ".json";
  write_text_file(path, out.dump(2));
  std::cout << out.dump(2) << "\n";
  std::cerr << "wrote " << path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multimodal short-video recommendation engine"};
  app.require_subcommand(1);
  CommonFlags flags;

  auto add_common = [&](CLI::App* cmd, bool with_user = false) {
    cmd->add_option("--config", flags.config_path, "run configuration JSON");
    cmd->add_option("--out", flags.out_dir, "output directory (overrides config paths)");
    auto* seed = cmd->add_option("--seed", flags.seed, "seed override");
    seed->each([&](const std::string&) { flags.seed_set = true; });
    cmd->add_option("--variant", flags.variant, "FULL | NO_AUDIO | NO_SEQ | NO_STATIC | TEXT_ONLY");
    cmd->add_option("--k", flags.k, "list length K");
    cmd->add_option("--m", flags.m, "coarse candidate count M");
    if (with_user) cmd->add_option("--user", flags.user_id, "user id")->required();
  };

  auto* gen = app.add_subcommand("gen-data", "generate the synthetic dataset files");
  add_common(gen);
  gen->add_option("--world-profile", flags.world_profile, "default | kubd (kubd drops the audio modality)");
  auto* train_cmd = app.add_subcommand("train", "train a model on the dataset files");
  add_common(train_cmd);
  auto* eval_cmd = app.add_subcommand("evaluate", "evaluate a trained model on the test users");
  add_common(eval_cmd);
  auto* rec_cmd = app.add_subcommand("recommend", "print the top-K recommendations for a user");
  add_common(rec_cmd, true);
  auto* ablate_cmd = app.add_subcommand("ablate", "train and evaluate every model variant");
  add_common(ablate_cmd);
  auto* explain_cmd = app.add_subcommand("explain", "emit attention-based explanations for a user");
  add_common(explain_cmd, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(flags);
    if (train_cmd->parsed()) return cmd_train(flags);
    if (eval_cmd->parsed()) return cmd_evaluate(flags);
    if (rec_cmd->parsed()) return cmd_recommend(flags);
    if (ablate_cmd->parsed()) return cmd_ablate(flags);
    if (explain_cmd->parsed()) return cmd_explain(flags);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
