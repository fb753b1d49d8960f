#include "mmrec/fusion.hpp"

#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "mmrec/errors.hpp"
#include "mmrec/rng.hpp"

using namespace mmrec;

namespace {

FusionParams identity_params(int d) {
  FusionParams p;
  p.w_visual = Matrix::identity(d);
  p.w_textual = Matrix::identity(d);
  p.w_audio = Matrix::identity(d);
  p.u = Vec(static_cast<std::size_t>(d), 0.0);
  return p;
}

FusionParams random_params(int d, int d_v, int d_t, int d_a, Rng& rng) {
  FusionParams p;
  p.w_visual = Matrix(d, d_v);
  p.w_textual = Matrix(d, d_t);
  p.w_audio = Matrix(d, d_a);
  for (auto& v : p.w_visual.data) v = rng.uniform(-1.0, 1.0);
  for (auto& v : p.w_textual.data) v = rng.uniform(-1.0, 1.0);
  for (auto& v : p.w_audio.data) v = rng.uniform(-1.0, 1.0);
  p.u = Vec(static_cast<std::size_t>(d));
  for (auto& v : p.u) v = rng.uniform(-1.0, 1.0);
  return p;
}

ModalityFeatures features3(Vec v, Vec t, Vec a) {
  ModalityFeatures f;
  f.features = {std::move(v), std::move(t), std::move(a)};
  f.present = {true, true, true};
  return f;
}

}  // namespace

TEST_SUITE_BEGIN("fusion");

TEST_CASE("identity projections pass features through") {
  FusionParams p = identity_params(2);
  ModalityFeatures f = features3({1.0, 2.0}, {3.0, 4.0}, {5.0, 6.0});
  ProjectedModalities e = project_modalities(f, p);
  CHECK(e.e[0] == Vec{1.0, 2.0});
  CHECK(e.e[1] == Vec{3.0, 4.0});
  CHECK(e.e[2] == Vec{5.0, 6.0});
}

TEST_CASE("absent audio projects to the zero vector") {
  FusionParams p = identity_params(2);
  ModalityFeatures f = features3({1.0, 2.0}, {3.0, 4.0}, {});
  f.present[2] = false;
  ProjectedModalities e = project_modalities(f, p);
  CHECK(e.e[2] == Vec{0.0, 0.0});
}

TEST_CASE("projection matches linear_map per modality") {
  Rng rng(21);
  FusionParams p = random_params(3, 2, 2, 2, rng);
  ModalityFeatures f = features3({0.5, -1.0}, {2.0, 0.25}, {-0.75, 1.5});
  ProjectedModalities e = project_modalities(f, p);
  CHECK(e.e[0] == linear_map(p.w_visual, f.visual()));
  CHECK(e.e[1] == linear_map(p.w_textual, f.textual()));
  CHECK(e.e[2] == linear_map(p.w_audio, f.audio()));
}

TEST_CASE("projection dimension error names the modality") {
  FusionParams p = identity_params(2);
  ModalityFeatures f = features3({1.0, 2.0}, {3.0}, {5.0, 6.0});
  try {
    project_modalities(f, p);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    CHECK(std::string(e.what()).find("textual") != std::string::npos);
  }
}

TEST_CASE("orthogonal query gives uniform weights") {
  ProjectedModalities e;
  e.e[0] = {0.0, 1.0};
  e.e[1] = {0.0, 2.0};
  e.e[2] = {0.0, -3.0};
  Vec u = {1.0, 0.0};
  AttentionWeights w = attention_weights(u, e, {true, true, true});
  CHECK(w.visual() == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(w.textual() == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(w.audio() == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("absent audio renormalizes over the present pair") {
  ProjectedModalities e;
  e.e[0] = {1.0, 0.0};
  e.e[1] = {1.0, 0.0};
  e.e[2] = {0.0, 0.0};
  Vec u = {1.0, 1.0};
  AttentionWeights w = attention_weights(u, e, {true, true, false});
  CHECK(w.visual() == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(w.textual() == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(w.audio() == 0.0);  // exactly zero
}

TEST_CASE("hand-evaluated weights") {
  ProjectedModalities e;
  e.e[0] = {std::log(2.0), 0.0};
  e.e[1] = {0.0, 5.0};
  e.e[2] = {0.0, 0.0};
  Vec u = {1.0, 0.0};
  AttentionWeights w = attention_weights(u, e, {true, true, true});
  CHECK(w.visual() == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(w.textual() == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(w.audio() == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("no present modality is rejected") {
  ProjectedModalities e;
  Vec u = {1.0};
  CHECK_THROWS_AS(attention_weights(u, e, {false, false, false}), ArgumentError);
  ModalityFeatures f;
  CHECK_THROWS_AS(project_modalities(f, identity_params(2)), ArgumentError);
}

TEST_CASE("degenerate weight returns the projected modality exactly") {
  ProjectedModalities e;
  e.e[0] = {2.5, -1.5};
  e.e[1] = {9.0, 9.0};
  e.e[2] = {-3.0, 4.0};
  AttentionWeights w;
  w.alpha = {1.0, 0.0, 0.0};
  FusedEmbedding f = fuse(w, e);
  CHECK(f.vector == e.e[0]);
}

TEST_CASE("convex combination of equal points is the point") {
  ProjectedModalities e;
  e.e[0] = e.e[1] = e.e[2] = {0.7, -0.2};
  AttentionWeights w;
  w.alpha = {0.2, 0.5, 0.3};
  FusedEmbedding f = fuse(w, e);
  CHECK(f.vector[0] == doctest::Approx(0.7).epsilon(1e-14));
  CHECK(f.vector[1] == doctest::Approx(-0.2).epsilon(1e-14));
}

TEST_CASE("hand-evaluated fusion") {
  ProjectedModalities e;
  e.e[0] = {2.0, 0.0};
  e.e[1] = {0.0, 1.0};
  e.e[2] = {1.0, 1.0};
  AttentionWeights w;
  w.alpha = {0.5, 0.3, 0.2};
  FusedEmbedding f = fuse(w, e);
  CHECK(f.vector[0] == doctest::Approx(1.2).epsilon(1e-14));
  CHECK(f.vector[1] == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("weights stay on the simplex and fusion stays in the hull") {
  Rng rng(22);
  const int d = 4;
  for (int trial = 0; trial < 1000; ++trial) {
    FusionParams p = random_params(d, 3, 3, 3, rng);
    ModalityFeatures f;
    for (int m = 0; m < kModalityCount; ++m) {
      f.present[static_cast<std::size_t>(m)] = rng.uniform01() < 0.8;
      if (f.present[static_cast<std::size_t>(m)]) {
        f.features[static_cast<std::size_t>(m)].resize(3);
        for (auto& v : f.features[static_cast<std::size_t>(m)]) v = rng.uniform(-2.0, 2.0);
      }
    }
    if (f.present_count() == 0) {
      f.present[1] = true;
      f.features[1] = {0.1, 0.2, 0.3};
    }
    FusionCache cache;
    FusedEmbedding fused = fuse_features(f, p, &cache);

    double total = 0.0;
    double max_norm = 0.0;
    for (int m = 0; m < kModalityCount; ++m) {
      double a = fused.weights.alpha[static_cast<std::size_t>(m)];
      CHECK(a >= 0.0);
      CHECK(a <= 1.0);
      if (!f.present[static_cast<std::size_t>(m)]) CHECK(a == 0.0);
      else max_norm = std::max(max_norm, norm2(cache.projected.e[static_cast<std::size_t>(m)]));
      total += a;
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);
    CHECK(norm2(fused.vector) <= max_norm + 1e-9);
  }
}

TEST_CASE("positive scaling of the query preserves the argmax modality") {
  Rng rng(23);
  const int d = 4;
  for (int trial = 0; trial < 200; ++trial) {
    FusionParams p = random_params(d, 3, 3, 3, rng);
    ModalityFeatures f = features3({1.0, 0.0, -1.0}, {0.5, 0.5, 0.5}, {-0.25, 1.0, 0.0});
    for (auto& v : f.features[0]) v = rng.uniform(-1.0, 1.0);
    ProjectedModalities e = project_modalities(f, p);
    AttentionWeights w1 = attention_weights(p.u, e, f.present);
    Vec scaled = p.u;
    double c = rng.uniform(0.5, 5.0);
    for (auto& v : scaled) v *= c;
    AttentionWeights w2 = attention_weights(scaled, e, f.present);
    auto argmax = [](const AttentionWeights& w) {
      return std::max_element(w.alpha.begin(), w.alpha.end()) - w.alpha.begin();
    };
    CHECK(argmax(w1) == argmax(w2));
  }
}

TEST_CASE("absence equals removal from both numerator and denominator") {
  // Brute-force two-modality reference computed from scratch.
  Rng rng(24);
  const int d = 3;
  for (int trial = 0; trial < 200; ++trial) {
    FusionParams p = random_params(d, 2, 2, 2, rng);
    ModalityFeatures f = features3({rng.uniform(-1, 1), rng.uniform(-1, 1)},
                                   {rng.uniform(-1, 1), rng.uniform(-1, 1)},
                                   {});
    f.present[2] = false;
    FusedEmbedding fused = fuse_features(f, p);

    Vec ev = linear_map(p.w_visual, f.visual());
    Vec et = linear_map(p.w_textual, f.textual());
    double lv = 0.0, lt = 0.0;
    for (int i = 0; i < d; ++i) {
      lv += p.u[static_cast<std::size_t>(i)] * ev[static_cast<std::size_t>(i)];
      lt += p.u[static_cast<std::size_t>(i)] * et[static_cast<std::size_t>(i)];
    }
    double av = std::exp(lv) / (std::exp(lv) + std::exp(lt));
    double at = std::exp(lt) / (std::exp(lv) + std::exp(lt));
    for (int i = 0; i < d; ++i) {
      double expect = av * ev[static_cast<std::size_t>(i)] + at * et[static_cast<std::size_t>(i)];
      CHECK(fused.vector[static_cast<std::size_t>(i)] == doctest::Approx(expect).epsilon(1e-12));
    }
    CHECK(fused.weights.visual() == doctest::Approx(av).epsilon(1e-12));
    CHECK(fused.weights.audio() == 0.0);
  }
}

TEST_SUITE_END();
