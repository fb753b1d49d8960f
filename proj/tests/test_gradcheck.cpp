#include "mmrec/gradcheck.hpp"

#include <cmath>

#include "doctest.h"
#include "mmrec/errors.hpp"
#include "mmrec/model.hpp"
#include "mmrec/rng.hpp"

using namespace mmrec;

namespace {

ModelConfig small_config(Variant variant = Variant::full) {
  ModelConfig cfg;
  cfg.d = 8;
  cfg.d_visual = 6;
  cfg.d_textual = 5;
  cfg.d_audio = 4;
  cfg.heads = 2;
  cfg.blocks = 1;
  cfg.ff_mult = 4;
  cfg.max_len = 50;
  cfg.variant = variant;
  cfg.vocab.genders = {"f", "m"};
  cfg.vocab.regions = {"r0", "r1", "r2"};
  cfg.vocab.registration_buckets = {"b0", "b1"};
  return cfg;
}

ModalityFeatures random_features(const ModelConfig& cfg, Rng& rng, bool with_audio = true) {
  ModalityFeatures f;
  f.features[0].resize(static_cast<std::size_t>(cfg.d_visual));
  f.features[1].resize(static_cast<std::size_t>(cfg.d_textual));
  f.present[0] = f.present[1] = true;
  for (auto& v : f.features[0]) v = rng.uniform(-1.0, 1.0);
  for (auto& v : f.features[1]) v = rng.uniform(-1.0, 1.0);
  if (with_audio) {
    f.features[2].resize(static_cast<std::size_t>(cfg.d_audio));
    f.present[2] = true;
    for (auto& v : f.features[2]) v = rng.uniform(-1.0, 1.0);
  }
  return f;
}

void zero_all(ModelParams& p) {
  for_each_param_block(p, [](ParamBlockRef ref) { std::fill(ref.values.begin(), ref.values.end(), 0.0); });
}

// Full composed loss (fusion + encoder + combination + BCE) as a flat
// parameter function for the checker.
GradCheckReport check_full_model(std::uint64_t seed, Variant variant, int history_len, double eps) {
  ModelConfig cfg = small_config(variant);
  Rng rng(seed, 0xfeed);

  std::vector<ModalityFeatures> history;
  for (int i = 0; i < history_len; ++i) history.push_back(random_features(cfg, rng, i % 3 != 2));
  ModalityFeatures target = random_features(cfg, rng);
  StaticProfile profile{"f", "r1", "b0"};

  Model model;
  model.config = cfg;
  model.params = ModelParams::glorot(cfg, seed);

  ResolvedExample ex;
  for (const auto& h : history) ex.history.push_back(&h);
  ex.target = &target;
  ex.profile = &profile;
  ex.label = 1.0;

  Vec flat = model.params.flatten();
  ModelWorkspace ws;
  LossAndGradFn fn = [&](std::span<const double> params, std::span<double> grad_out) {
    Model local;
    local.config = cfg;
    local.params = ModelParams::zeros(cfg);
    local.params.unflatten(params);
    if (grad_out.empty()) {
      return example_loss(local, ex, nullptr, ws);
    }
    ModelParams grads = ModelParams::zeros(cfg);
    zero_all(grads);
    double loss = example_loss(local, ex, &grads, ws);
    Vec flat_grads = grads.flatten();
    std::copy(flat_grads.begin(), flat_grads.end(), grad_out.begin());
    return loss;
  };
  return gradient_check(fn, flat, eps);
}

}  // namespace

TEST_SUITE_BEGIN("gradcheck");

TEST_CASE("quadratic loss is exact") {
  LossAndGradFn fn = [](std::span<const double> params, std::span<double> grad_out) {
    double loss = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
      loss += params[i] * params[i];
      if (!grad_out.empty()) grad_out[i] = 2.0 * params[i];
    }
    return loss;
  };
  Vec theta = {0.5, -1.25, 2.0, 0.0, 3.5};
  GradCheckReport report = gradient_check(fn, theta, 1e-5);
  CHECK(report.params_checked == 5);
  CHECK(report.max_rel_error < 1e-8);
}

TEST_CASE("a corrupted coordinate is detected") {
  LossAndGradFn fn = [](std::span<const double> params, std::span<double> grad_out) {
    double loss = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
      loss += params[i] * params[i];
      if (!grad_out.empty()) grad_out[i] = (i == 2 ? 4.0 : 2.0) * params[i];  // doubled at index 2
    }
    return loss;
  };
  Vec theta = {0.5, -1.25, 2.0, 0.75};
  GradCheckReport report = gradient_check(fn, theta, 1e-5);
  CHECK(report.max_rel_error > 0.3);
  CHECK(report.worst_index == 2);
}

TEST_CASE("non-finite loss is rejected") {
  LossAndGradFn fn = [](std::span<const double>, std::span<double>) { return std::nan(""); };
  Vec theta = {1.0};
  CHECK_THROWS_AS(gradient_check(fn, theta, 1e-5), NumericError);
}

TEST_CASE("full composed model passes at d=8") {
  GradCheckReport report = check_full_model(42, Variant::full, 3, 1e-5);
  CHECK(report.params_checked > 1000);
  CHECK(report.max_rel_error < 1e-4);
}

TEST_CASE("full model with empty history trains h0") {
  GradCheckReport report = check_full_model(43, Variant::full, 0, 1e-5);
  CHECK(report.max_rel_error < 1e-4);
}

TEST_CASE("every ablation variant has consistent gradients") {
  for (Variant variant : all_variants()) {
    GradCheckReport report = check_full_model(44, variant, 3, 1e-5);
    INFO("variant ", variant_name(variant));
    CHECK(report.max_rel_error < 1e-4);
  }
}

TEST_SUITE_END();
