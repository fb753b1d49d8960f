#pragma once

#include <map>
#include <string>
#include <vector>

#include "mmrec/io.hpp"
#include "mmrec/model.hpp"
#include "mmrec/training.hpp"

namespace mmrec {

// In-memory dataset shared across variant runs.
struct Dataset {
  std::vector<VideoRecord> videos;
  EventLog log;
  std::map<UserId, StaticProfile> profiles;
};

Dataset generate_dataset(const WorldConfig& config, World* world_out = nullptr);
Dataset load_dataset(const RunConfig& config);

ModelConfig model_config_for(const Dataset& data, const RunConfig& config, Variant variant);

struct VariantRun {
  Variant variant = Variant::full;
  Model model;
  TrainHistory history;
  MetricsReport report;
  std::vector<PerUserEval> detail;
};

// Split -> build examples -> train -> evaluate on the test users. The split
// and the data are shared across variants when the same config is passed.
VariantRun run_variant(const Dataset& data, const RunConfig& config, Variant variant, bool keep_detail = false);

struct AblationReport {
  std::vector<AblationRow> rows;  // fixed variant order
  AblationRow random_baseline;
  std::vector<VariantRun> runs;  // aligned with rows
};

AblationReport run_ablation(const Dataset& data, const RunConfig& config, bool keep_detail = false);

// Uniformly random ranking evaluated with the same protocol; the reference
// row appended to ablation reports.
AblationRow random_ranking_baseline(const Dataset& data, const RunConfig& config);

std::string ablation_report_json(const AblationReport& report, const RunConfig& config);

}  // namespace mmrec
