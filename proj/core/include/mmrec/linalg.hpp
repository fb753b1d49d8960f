#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mmrec {

using Vec = std::vector<double>;

// Dense row-major matrix. y = W x convention: W maps length-cols inputs to
// length-rows outputs.
struct Matrix {
  int rows = 0;
  int cols = 0;
  Vec data;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill) {}

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

  std::span<double> row(int r) { return {data.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)}; }
  std::span<const double> row(int r) const {
    return {data.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)};
  }

  static Matrix identity(int n);

  bool operator==(const Matrix&) const = default;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
void axpy(double a, std::span<const double> x, std::span<double> y);  // y += a*x
bool all_finite(std::span<const double> v);

// y = W x (+ b). Throws DimensionError naming both shapes on mismatch.
Vec linear_map(const Matrix& w, const Vec& x);
Vec linear_map(const Matrix& w, const Vec& x, const Vec& bias);
void linear_map_into(const Matrix& w, std::span<const double> x, std::span<double> y);

// Backward helpers for the hand-written reverse pass.
void accumulate_outer(Matrix& acc, std::span<const double> dy, std::span<const double> x);  // acc += dy x^T
void accumulate_transpose_mul(const Matrix& w, std::span<const double> dy, std::span<double> dx);  // dx += W^T dy

// Numerically stable softmax (max subtraction). Throws ArgumentError on
// empty input.
Vec softmax(const Vec& z);
void softmax_into(std::span<const double> z, std::span<double> out);
// dz = y .* (dy - sum(dy .* y)); dz may alias dy.
void softmax_backward(std::span<const double> y, std::span<const double> dy, std::span<double> dz);

Vec relu(const Vec& x);
double sigmoid(double x);

constexpr double kLayerNormEpsilon = 1e-6;

struct LayerNormCache {
  double inv_std = 0.0;
  Vec normed;
};

void layer_norm_row(std::span<const double> x, std::span<const double> gain, std::span<const double> bias,
                    std::span<double> out, LayerNormCache* cache = nullptr);
// dx is assigned; dgain/dbias accumulated.
void layer_norm_row_backward(std::span<const double> dy, std::span<const double> gain, const LayerNormCache& cache,
                             std::span<double> dx, std::span<double> dgain, std::span<double> dbias);

// Glorot-uniform fill in +-sqrt(6 / (fan_in + fan_out)).
void glorot_fill(Matrix& m, class Rng& rng);
void glorot_fill(Vec& v, int fan_in, int fan_out, class Rng& rng);

}  // namespace mmrec
