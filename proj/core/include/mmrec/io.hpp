#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mmrec/metrics.hpp"
#include "mmrec/model.hpp"
#include "mmrec/pipeline.hpp"
#include "mmrec/simdata.hpp"
#include "mmrec/training.hpp"

namespace mmrec {

// ---- JSONL data files ----
// Catalog line: {"video_id": N, "visual": [...], "text": [...], "audio": [...]|null}
// Event line:   {"user_id": N, "video_id": N, "ts": N, "event": "...",
//                "watch_time_s": X, "context": {"hour_bucket": N, "device": "...", "network": "..."}}
// Profile line: {"user_id": N, "gender": "...", "region": "...", "registration_bucket": "..."}

void write_catalog_jsonl(const std::string& path, const std::vector<VideoRecord>& videos);
std::vector<VideoRecord> read_catalog_jsonl(const std::string& path);

void write_events_jsonl(const std::string& path, const EventLog& log);
EventLog read_events_jsonl(const std::string& path);

void write_profiles_jsonl(const std::string& path, const std::map<UserId, StaticProfile>& profiles);
std::map<UserId, StaticProfile> read_profiles_jsonl(const std::string& path);

// Ground truth (harness only): typed lines for users, videos and one meta
// line carrying the generator constants.
void write_ground_truth_jsonl(const std::string& path, const World& world);
World read_ground_truth_jsonl(const std::string& path);  // videos carry latents only

// ---- Model file ----
// JSON header {format_version, d, variant, seeds, sections: [...]} followed
// by length-prefixed little-endian double sections, one per parameter block.
struct ModelSeeds {
  std::uint64_t train_seed = 0;
  std::uint64_t data_seed = 0;
};

void save_model(const std::string& path, const Model& model, const ModelSeeds& seeds);
Model load_model(const std::string& path, ModelSeeds* seeds_out = nullptr);

// ---- Reports ----
std::string metrics_report_json(const MetricsReport& report);
std::string train_history_json(const TrainHistory& history, const TrainConfig& config);

struct AblationRow {
  std::string variant;
  double ndcg10 = 0.0;
  double precision10 = 0.0;
  double auc = 0.0;
};

// Aligned text table with columns "Model Variant | NDCG@10 | Precision@10 | AUC".
std::string ablation_table_text(const std::vector<AblationRow>& rows, const AblationRow* random_baseline);

// ---- Run configuration ----
struct RunConfig {
  int schema_version = 1;
  std::string out_dir = "run";
  std::string catalog_path;  // default: <out_dir>/catalog.jsonl
  std::string events_path;
  std::string profiles_path;
  std::string ground_truth_path;
  std::string model_path;
  std::string history_path;
  std::string report_json_path;
  std::string report_table_path;
  TrainConfig train;
  WorldConfig world;
  std::vector<int> k_list = {5, 10};
  int m = 200;
  Variant variant = Variant::full;

  void apply_defaults();  // fills empty paths from out_dir
};

RunConfig load_run_config(const std::string& path);  // ParseError / ConfigError on bad input
RunConfig default_run_config();
std::string run_config_json(const RunConfig& config);

// Environment variables override file paths only (never hyperparameters):
// MMREC_OUT, MMREC_CATALOG, MMREC_EVENTS, MMREC_PROFILES, MMREC_GROUND_TRUTH,
// MMREC_MODEL, MMREC_HISTORY, MMREC_REPORT_JSON, MMREC_REPORT_TABLE.
void apply_env_overrides(RunConfig& config);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace mmrec
