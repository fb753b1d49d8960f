#include "mmrec/io.hpp"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "mmrec/errors.hpp"

namespace mmrec {

using nlohmann::json;

namespace {

std::ofstream open_out(const std::string& path) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return in;
}

json parse_line(const std::string& line, const std::string& path, std::size_t line_no) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded()) {
    throw ParseError(path + ":" + std::to_string(line_no) + ": invalid JSON");
  }
  return j;
}

template <class Fn>
void for_each_jsonl(const std::string& path, Fn&& fn) {
  std::ifstream in = open_in(path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    fn(parse_line(line, path, line_no), line_no);
  }
}

json require(const json& j, const char* key, const std::string& path, std::size_t line_no) {
  if (!j.contains(key)) {
    throw ParseError(path + ":" + std::to_string(line_no) + ": missing field '" + key + "'");
  }
  return j.at(key);
}

Vec to_vec(const json& arr) {
  Vec v;
  v.reserve(arr.size());
  for (const auto& x : arr) v.push_back(x.get<double>());
  return v;
}

}  // namespace

void write_catalog_jsonl(const std::string& path, const std::vector<VideoRecord>& videos) {
  std::ofstream out = open_out(path);
  for (const auto& video : videos) {
    json j;
    j["video_id"] = video.id;
    j["visual"] = video.features.visual();
    j["text"] = video.features.textual();
    if (video.features.present[2]) {
      j["audio"] = video.features.audio();
    } else {
      j["audio"] = nullptr;
    }
    out << j.dump() << "\n";
  }
}

std::vector<VideoRecord> read_catalog_jsonl(const std::string& path) {
  std::vector<VideoRecord> videos;
  for_each_jsonl(path, [&](const json& j, std::size_t line_no) {
    VideoRecord v;
    v.id = require(j, "video_id", path, line_no).get<VideoId>();
    v.features.features[0] = to_vec(require(j, "visual", path, line_no));
    v.features.present[0] = true;
    v.features.features[1] = to_vec(require(j, "text", path, line_no));
    v.features.present[1] = true;
    json audio = require(j, "audio", path, line_no);
    if (!audio.is_null()) {
      v.features.features[2] = to_vec(audio);
      v.features.present[2] = true;
    }
    videos.push_back(std::move(v));
  });
  return videos;
}

void write_events_jsonl(const std::string& path, const EventLog& log) {
  std::ofstream out = open_out(path);
  for (const auto& e : log.events) {
    json j;
    j["user_id"] = e.user;
    j["video_id"] = e.video;
    j["ts"] = e.ts;
    j["event"] = event_kind_name(e.kind);
    j["watch_time_s"] = e.watch_time_s;
    j["context"] = {{"hour_bucket", e.context.hour_bucket}, {"device", e.context.device}, {"network", e.context.network}};
    out << j.dump() << "\n";
  }
}

EventLog read_events_jsonl(const std::string& path) {
  EventLog log;
  for_each_jsonl(path, [&](const json& j, std::size_t line_no) {
    Event e;
    e.user = require(j, "user_id", path, line_no).get<UserId>();
    e.video = require(j, "video_id", path, line_no).get<VideoId>();
    e.ts = require(j, "ts", path, line_no).get<Timestamp>();
    try {
      e.kind = event_kind_from_name(require(j, "event", path, line_no).get<std::string>());
    } catch (const ParseError& err) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": " + err.what());
    }
    e.watch_time_s = j.value("watch_time_s", 0.0);
    if (j.contains("context")) {
      const json& c = j.at("context");
      e.context.hour_bucket = c.value("hour_bucket", 0);
      e.context.device = c.value("device", "");
      e.context.network = c.value("network", "");
    }
    log.events.push_back(std::move(e));
  });
  return log;
}

void write_profiles_jsonl(const std::string& path, const std::map<UserId, StaticProfile>& profiles) {
  std::ofstream out = open_out(path);
  for (const auto& [uid, p] : profiles) {
    json j;
    j["user_id"] = uid;
    j["gender"] = p.gender;
    j["region"] = p.region;
    j["registration_bucket"] = p.registration_bucket;
    out << j.dump() << "\n";
  }
}

std::map<UserId, StaticProfile> read_profiles_jsonl(const std::string& path) {
  std::map<UserId, StaticProfile> profiles;
  for_each_jsonl(path, [&](const json& j, std::size_t line_no) {
    UserId uid = require(j, "user_id", path, line_no).get<UserId>();
    StaticProfile p;
    p.gender = require(j, "gender", path, line_no).get<std::string>();
    p.region = require(j, "region", path, line_no).get<std::string>();
    p.registration_bucket = require(j, "registration_bucket", path, line_no).get<std::string>();
    profiles[uid] = std::move(p);
  });
  return profiles;
}

void write_ground_truth_jsonl(const std::string& path, const World& world) {
  std::ofstream out = open_out(path);
  {
    json meta;
    meta["type"] = "meta";
    meta["click_steepness"] = world.config.click_steepness;
    meta["click_bias"] = world.click_bias;
    meta["n_topics"] = world.config.n_topics;
    meta["seed"] = world.config.seed;
    out << meta.dump() << "\n";
  }
  for (std::size_t i = 0; i < world.users.size(); ++i) {
    const LatentUser& u = world.users[i];
    json j;
    j["type"] = "user";
    j["user_id"] = static_cast<UserId>(i);
    j["affinity_pre"] = u.affinity_pre;
    j["affinity_post"] = u.affinity_post;
    j["reliance"] = u.reliance;
    j["drifted"] = u.drifted;
    j["cold"] = u.cold;
    out << j.dump() << "\n";
  }
  for (std::size_t i = 0; i < world.video_latents.size(); ++i) {
    const LatentVideo& v = world.video_latents[i];
    json j;
    j["type"] = "video";
    j["video_id"] = static_cast<VideoId>(i);
    j["topic_mixture"] = v.topic_mixture;
    j["views"] = {v.views[0], v.views[1], v.views[2]};
    j["present"] = {v.present[0], v.present[1], v.present[2]};
    out << j.dump() << "\n";
  }
}

World read_ground_truth_jsonl(const std::string& path) {
  World world;
  for_each_jsonl(path, [&](const json& j, std::size_t line_no) {
    std::string type = require(j, "type", path, line_no).get<std::string>();
    if (type == "meta") {
      world.config.click_steepness = j.value("click_steepness", 8.0);
      world.click_bias = j.value("click_bias", 0.0);
      world.config.n_topics = j.value("n_topics", 5);
      world.config.seed = j.value("seed", 0ull);
    } else if (type == "user") {
      UserId uid = require(j, "user_id", path, line_no).get<UserId>();
      if (static_cast<std::size_t>(uid) >= world.users.size()) world.users.resize(static_cast<std::size_t>(uid) + 1);
      LatentUser& u = world.users[static_cast<std::size_t>(uid)];
      u.affinity_pre = to_vec(require(j, "affinity_pre", path, line_no));
      u.affinity_post = to_vec(require(j, "affinity_post", path, line_no));
      auto rel = require(j, "reliance", path, line_no);
      for (int m = 0; m < kModalityCount; ++m) u.reliance[static_cast<std::size_t>(m)] = rel.at(m).get<double>();
      u.drifted = require(j, "drifted", path, line_no).get<bool>();
      u.cold = require(j, "cold", path, line_no).get<bool>();
    } else if (type == "video") {
      VideoId vid = require(j, "video_id", path, line_no).get<VideoId>();
      if (static_cast<std::size_t>(vid) >= world.video_latents.size()) {
        world.video_latents.resize(static_cast<std::size_t>(vid) + 1);
      }
      LatentVideo& v = world.video_latents[static_cast<std::size_t>(vid)];
      v.topic_mixture = to_vec(require(j, "topic_mixture", path, line_no));
      auto views = require(j, "views", path, line_no);
      auto present = require(j, "present", path, line_no);
      for (int m = 0; m < kModalityCount; ++m) {
        v.views[static_cast<std::size_t>(m)] = to_vec(views.at(m));
        v.present[static_cast<std::size_t>(m)] = present.at(m).get<bool>();
      }
    } else {
      throw ParseError(path + ":" + std::to_string(line_no) + ": unknown record type '" + type + "'");
    }
  });
  return world;
}

namespace {

constexpr int kModelFormatVersion = 1;

void write_u64(std::ofstream& out, std::uint64_t v) {
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

std::uint64_t read_u64(std::ifstream& in, const std::string& path) {
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  if (!in) throw ParseError(path + ": truncated model file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

}  // namespace

void save_model(const std::string& path, const Model& model, const ModelSeeds& seeds) {
  json header;
  header["format_version"] = kModelFormatVersion;
  header["d"] = model.config.d;
  header["d_visual"] = model.config.d_visual;
  header["d_textual"] = model.config.d_textual;
  header["d_audio"] = model.config.d_audio;
  header["heads"] = model.config.heads;
  header["blocks"] = model.config.blocks;
  header["ff_mult"] = model.config.ff_mult;
  header["max_len"] = model.config.max_len;
  header["pooling"] = model.config.pooling == SequencePooling::mean ? "mean" : "last";
  header["variant"] = variant_name(model.config.variant);
  header["seeds"] = {{"train_seed", seeds.train_seed}, {"data_seed", seeds.data_seed}};
  header["vocab"] = {{"genders", model.config.vocab.genders},
                     {"regions", model.config.vocab.regions},
                     {"registration_buckets", model.config.vocab.registration_buckets}};
  json sections = json::array();
  for_each_param_block(model.params, [&](const std::string& name, int rows, int cols, std::span<const double> values) {
    sections.push_back({{"name", name}, {"rows", rows}, {"cols", cols}, {"count", values.size()}});
  });
  header["sections"] = sections;

  std::ofstream out = open_out(path);
  std::string header_text = header.dump();
  out.write("MMRECMDL", 8);
  write_u64(out, header_text.size());
  out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  for_each_param_block(model.params, [&](const std::string&, int, int, std::span<const double> values) {
    write_u64(out, values.size() * sizeof(double));
    out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
  });
  if (!out) throw IoError("failed writing model file '" + path + "'");
}

Model load_model(const std::string& path, ModelSeeds* seeds_out) {
  std::ifstream in = open_in(path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "MMRECMDL", 8) != 0) throw ParseError(path + ": not a model file");
  std::uint64_t header_len = read_u64(in, path);
  std::string header_text(header_len, '\0');
  in.read(header_text.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw ParseError(path + ": truncated model header");
  json header = json::parse(header_text, nullptr, false);
  if (header.is_discarded()) throw ParseError(path + ": invalid model header JSON");
  if (header.value("format_version", -1) != kModelFormatVersion) {
    throw ParseError(path + ": unsupported model format version");
  }

  Model model;
  model.config.d = header.at("d").get<int>();
  model.config.d_visual = header.at("d_visual").get<int>();
  model.config.d_textual = header.at("d_textual").get<int>();
  model.config.d_audio = header.at("d_audio").get<int>();
  model.config.heads = header.at("heads").get<int>();
  model.config.blocks = header.at("blocks").get<int>();
  model.config.ff_mult = header.at("ff_mult").get<int>();
  model.config.max_len = header.at("max_len").get<int>();
  model.config.pooling = header.at("pooling").get<std::string>() == "last" ? SequencePooling::last : SequencePooling::mean;
  model.config.variant = variant_from_name(header.at("variant").get<std::string>());
  model.config.vocab.genders = header.at("vocab").at("genders").get<std::vector<std::string>>();
  model.config.vocab.regions = header.at("vocab").at("regions").get<std::vector<std::string>>();
  model.config.vocab.registration_buckets = header.at("vocab").at("registration_buckets").get<std::vector<std::string>>();
  if (seeds_out != nullptr) {
    seeds_out->train_seed = header.at("seeds").value("train_seed", 0ull);
    seeds_out->data_seed = header.at("seeds").value("data_seed", 0ull);
  }

  model.params = ModelParams::zeros(model.config);
  std::size_t section_index = 0;
  const json& sections = header.at("sections");
  for_each_param_block(model.params, [&](ParamBlockRef ref) {
    if (section_index >= sections.size()) throw ParseError(path + ": section table too short");
    const json& s = sections.at(section_index++);
    if (s.at("name").get<std::string>() != ref.name || s.at("count").get<std::size_t>() != ref.values.size()) {
      throw ParseError(path + ": section '" + s.at("name").get<std::string>() + "' does not match layout block '" +
                       ref.name + "'");
    }
    std::uint64_t byte_len = read_u64(in, path);
    if (byte_len != ref.values.size() * sizeof(double)) {
      throw ParseError(path + ": section '" + ref.name + "' has unexpected length");
    }
    in.read(reinterpret_cast<char*>(ref.values.data()), static_cast<std::streamsize>(byte_len));
    if (!in) throw ParseError(path + ": truncated section '" + ref.name + "'");
  });
  return model;
}

std::string metrics_report_json(const MetricsReport& report) {
  json j;
  for (const auto& [k, v] : report.precision) j["precision"]["@" + std::to_string(k)] = v;
  for (const auto& [k, v] : report.recall) j["recall"]["@" + std::to_string(k)] = v;
  for (const auto& [k, v] : report.ndcg) j["ndcg"]["@" + std::to_string(k)] = v;
  j["auc"] = report.auc;
  j["f1"] = report.f1;
  j["modality_weight_share"] = {{"visual", report.weight_share[0]},
                                {"textual", report.weight_share[1]},
                                {"audio", report.weight_share[2]}};
  j["user_count"] = report.user_count;
  j["skipped_users"] = report.skipped_users;
  return j.dump(2);
}

std::string train_history_json(const TrainHistory& history, const TrainConfig& config) {
  json j;
  j["config"] = {{"max_len", config.max_len},         {"learning_rate", config.learning_rate},
                 {"batch_size", config.batch_size},   {"max_epochs", config.max_epochs},
                 {"patience", config.patience},       {"negative_ratio", config.negative_ratio},
                 {"d", config.d},                     {"seed", config.seed},
                 {"early_stop_metric", "validation_auc"}};
  json epochs = json::array();
  for (const auto& e : history.epochs) {
    epochs.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_auc", e.val_auc}});
  }
  j["epochs"] = epochs;
  j["best_epoch"] = history.best_epoch;
  j["stop_reason"] = history.stop_reason;
  return j.dump(2);
}

std::string ablation_table_text(const std::vector<AblationRow>& rows, const AblationRow* random_baseline) {
  std::ostringstream out;
  // Baselines are represented by the variant grid plus a random-ranking
  // reference; noted in the header for every emitted table.
  out << "# variant grid with a random-ranking reference in place of external baselines\n";
  auto fmt = [](double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(4) << v;
    return s.str();
  };
  std::vector<std::array<std::string, 4>> cells;
  cells.push_back({"Model Variant", "NDCG@10", "Precision@10", "AUC"});
  for (const auto& r : rows) cells.push_back({r.variant, fmt(r.ndcg10), fmt(r.precision10), fmt(r.auc)});
  std::array<std::size_t, 4> width = {0, 0, 0, 0};
  for (const auto& row : cells) {
    for (int c = 0; c < 4; ++c) width[static_cast<std::size_t>(c)] = std::max(width[static_cast<std::size_t>(c)], row[static_cast<std::size_t>(c)].size());
  }
  for (std::size_t r = 0; r < cells.size(); ++r) {
    for (int c = 0; c < 4; ++c) {
      out << std::left << std::setw(static_cast<int>(width[static_cast<std::size_t>(c)])) << cells[r][static_cast<std::size_t>(c)];
      out << (c == 3 ? "" : " | ");
    }
    out << "\n";
    if (r == 0) {
      for (int c = 0; c < 4; ++c) {
        out << std::string(width[static_cast<std::size_t>(c)], '-') << (c == 3 ? "" : "-|-");
      }
      out << "\n";
    }
  }
  if (random_baseline != nullptr) {
    out << "random ranking reference: NDCG@10=" << fmt(random_baseline->ndcg10)
        << " Precision@10=" << fmt(random_baseline->precision10) << " AUC=" << fmt(random_baseline->auc) << "\n";
  }
  return out.str();
}

void RunConfig::apply_defaults() {
  auto def = [&](std::string& field, const char* name) {
    if (field.empty()) field = out_dir + "/" + name;
  };
  def(catalog_path, "catalog.jsonl");
  def(events_path, "events.jsonl");
  def(profiles_path, "profiles.jsonl");
  def(ground_truth_path, "ground_truth.jsonl");
  def(model_path, "model.bin");
  def(history_path, "history.json");
  def(report_json_path, "report.json");
  def(report_table_path, "report.txt");
}

RunConfig default_run_config() {
  RunConfig c;
  c.apply_defaults();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::string text = read_text_file(path);
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ParseError(path + ": invalid JSON");
  RunConfig c;
  if (j.value("schema_version", 1) != 1) throw ConfigError(path + ": unsupported schema_version");
  c.out_dir = j.value("out_dir", c.out_dir);
  c.catalog_path = j.value("catalog", "");
  c.events_path = j.value("events", "");
  c.profiles_path = j.value("profiles", "");
  c.ground_truth_path = j.value("ground_truth", "");
  c.model_path = j.value("model", "");
  c.history_path = j.value("history", "");
  c.report_json_path = j.value("report_json", "");
  c.report_table_path = j.value("report_table", "");
  if (j.contains("train")) {
    const json& t = j.at("train");
    c.train.max_len = t.value("max_len", c.train.max_len);
    c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
    c.train.batch_size = t.value("batch_size", c.train.batch_size);
    c.train.max_epochs = t.value("max_epochs", c.train.max_epochs);
    c.train.patience = t.value("patience", c.train.patience);
    c.train.negative_ratio = t.value("negative_ratio", c.train.negative_ratio);
    c.train.d = t.value("d", c.train.d);
    c.train.seed = t.value("seed", c.train.seed);
  }
  if (j.contains("world")) {
    const json& w = j.at("world");
    c.world.n_users = w.value("n_users", c.world.n_users);
    c.world.n_videos = w.value("n_videos", c.world.n_videos);
    c.world.n_topics = w.value("n_topics", c.world.n_topics);
    c.world.d_visual = w.value("d_visual", c.world.d_visual);
    c.world.d_textual = w.value("d_textual", c.world.d_textual);
    c.world.d_audio = w.value("d_audio", c.world.d_audio);
    c.world.cross_modal_correlation = w.value("cross_modal_correlation", c.world.cross_modal_correlation);
    c.world.modality_noise = w.value("modality_noise", c.world.modality_noise);
    c.world.audio_missing_fraction = w.value("audio_missing_fraction", c.world.audio_missing_fraction);
    c.world.cold_fraction = w.value("cold_fraction", c.world.cold_fraction);
    c.world.drift_fraction = w.value("drift_fraction", c.world.drift_fraction);
    c.world.sessions_per_user = w.value("sessions_per_user", c.world.sessions_per_user);
    c.world.impressions_per_session = w.value("impressions_per_session", c.world.impressions_per_session);
    c.world.click_steepness = w.value("click_steepness", c.world.click_steepness);
    c.world.seed = w.value("seed", c.world.seed);
  }
  if (j.contains("k_list")) c.k_list = j.at("k_list").get<std::vector<int>>();
  c.m = j.value("m", c.m);
  if (j.contains("variant")) c.variant = variant_from_name(j.at("variant").get<std::string>());
  c.apply_defaults();
  return c;
}

std::string run_config_json(const RunConfig& c) {
  json j;
  j["schema_version"] = c.schema_version;
  j["out_dir"] = c.out_dir;
  j["catalog"] = c.catalog_path;
  j["events"] = c.events_path;
  j["profiles"] = c.profiles_path;
  j["ground_truth"] = c.ground_truth_path;
  j["model"] = c.model_path;
  j["history"] = c.history_path;
  j["report_json"] = c.report_json_path;
  j["report_table"] = c.report_table_path;
  j["train"] = {{"max_len", c.train.max_len},
                {"learning_rate", c.train.learning_rate},
                {"batch_size", c.train.batch_size},
                {"max_epochs", c.train.max_epochs},
                {"patience", c.train.patience},
                {"negative_ratio", c.train.negative_ratio},
                {"d", c.train.d},
                {"seed", c.train.seed},
                {"early_stop_metric", "validation_auc"}};
  j["world"] = {{"n_users", c.world.n_users},
                {"n_videos", c.world.n_videos},
                {"n_topics", c.world.n_topics},
                {"d_visual", c.world.d_visual},
                {"d_textual", c.world.d_textual},
                {"d_audio", c.world.d_audio},
                {"cross_modal_correlation", c.world.cross_modal_correlation},
                {"modality_noise", c.world.modality_noise},
                {"audio_missing_fraction", c.world.audio_missing_fraction},
                {"cold_fraction", c.world.cold_fraction},
                {"drift_fraction", c.world.drift_fraction},
                {"sessions_per_user", c.world.sessions_per_user},
                {"impressions_per_session", c.world.impressions_per_session},
                {"click_steepness", c.world.click_steepness},
                {"seed", c.world.seed}};
  j["k_list"] = c.k_list;
  j["m"] = c.m;
  j["variant"] = variant_name(c.variant);
  return j.dump(2);
}

void apply_env_overrides(RunConfig& c) {
  auto env = [](const char* name) -> const char* { return std::getenv(name); };
  if (const char* v = env("MMREC_OUT")) {
    c.out_dir = v;
    c.catalog_path.clear();
    c.events_path.clear();
    c.profiles_path.clear();
    c.ground_truth_path.clear();
    c.model_path.clear();
    c.history_path.clear();
    c.report_json_path.clear();
    c.report_table_path.clear();
    c.apply_defaults();
  }
  if (const char* v = env("MMREC_CATALOG")) c.catalog_path = v;
  if (const char* v = env("MMREC_EVENTS")) c.events_path = v;
  if (const char* v = env("MMREC_PROFILES")) c.profiles_path = v;
  if (const char* v = env("MMREC_GROUND_TRUTH")) c.ground_truth_path = v;
  if (const char* v = env("MMREC_MODEL")) c.model_path = v;
  if (const char* v = env("MMREC_HISTORY")) c.history_path = v;
  if (const char* v = env("MMREC_REPORT_JSON")) c.report_json_path = v;
  if (const char* v = env("MMREC_REPORT_TABLE")) c.report_table_path = v;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in = open_in(path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out = open_out(path);
  out << text;
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace mmrec
