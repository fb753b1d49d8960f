#include "mmrec/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mmrec/errors.hpp"
#include "mmrec/rng.hpp"

namespace mmrec {

namespace {

std::string shape_str(int rows, int cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

}  // namespace

Matrix Matrix::identity(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void axpy(double a, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

void linear_map_into(const Matrix& w, std::span<const double> x, std::span<double> y) {
  for (int r = 0; r < w.rows; ++r) {
    y[static_cast<std::size_t>(r)] = dot(w.row(r), x);
  }
}

Vec linear_map(const Matrix& w, const Vec& x) {
  if (w.cols != static_cast<int>(x.size())) {
    throw DimensionError("linear_map: matrix " + shape_str(w.rows, w.cols) + " incompatible with vector " +
                         shape_str(static_cast<int>(x.size()), 1));
  }
  Vec y(static_cast<std::size_t>(w.rows));
  linear_map_into(w, x, y);
  return y;
}

Vec linear_map(const Matrix& w, const Vec& x, const Vec& bias) {
  if (w.rows != static_cast<int>(bias.size())) {
    throw DimensionError("linear_map: matrix " + shape_str(w.rows, w.cols) + " incompatible with bias " +
                         shape_str(static_cast<int>(bias.size()), 1));
  }
  Vec y = linear_map(w, x);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += bias[i];
  return y;
}

void accumulate_outer(Matrix& acc, std::span<const double> dy, std::span<const double> x) {
  for (int r = 0; r < acc.rows; ++r) {
    double g = dy[static_cast<std::size_t>(r)];
    if (g == 0.0) continue;
    axpy(g, x, acc.row(r));
  }
}

void accumulate_transpose_mul(const Matrix& w, std::span<const double> dy, std::span<double> dx) {
  for (int r = 0; r < w.rows; ++r) {
    axpy(dy[static_cast<std::size_t>(r)], w.row(r), dx);
  }
}

void softmax_into(std::span<const double> z, std::span<double> out) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : z) m = std::max(m, v);
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = std::exp(z[i] - m);
    total += out[i];
  }
  for (std::size_t i = 0; i < z.size(); ++i) out[i] /= total;
}

Vec softmax(const Vec& z) {
  if (z.empty()) throw ArgumentError("softmax: empty input");
  Vec out(z.size());
  softmax_into(z, out);
  return out;
}

void softmax_backward(std::span<const double> y, std::span<const double> dy, std::span<double> dz) {
  double inner = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) inner += dy[i] * y[i];
  for (std::size_t i = 0; i < y.size(); ++i) dz[i] = y[i] * (dy[i] - inner);
}

Vec relu(const Vec& x) {
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
  return out;
}

double sigmoid(double x) {
  double p;
  if (x >= 0.0) {
    p = 1.0 / (1.0 + std::exp(-x));
  } else {
    double e = std::exp(x);
    p = e / (1.0 + e);
  }
  // Keep the open-interval contract even for saturating scores.
  if (p <= 0.0) p = std::numeric_limits<double>::min();
  if (p >= 1.0) p = 1.0 - 0x1.0p-53;
  return p;
}

void layer_norm_row(std::span<const double> x, std::span<const double> gain, std::span<const double> bias,
                    std::span<double> out, LayerNormCache* cache) {
  std::size_t d = x.size();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(d);
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= static_cast<double>(d);
  double inv_std = 1.0 / std::sqrt(var + kLayerNormEpsilon);
  if (cache != nullptr) {
    cache->inv_std = inv_std;
    cache->normed.resize(d);
  }
  for (std::size_t i = 0; i < d; ++i) {
    double normed = (x[i] - mean) * inv_std;
    if (cache != nullptr) cache->normed[i] = normed;
    out[i] = gain[i] * normed + bias[i];
  }
}

void layer_norm_row_backward(std::span<const double> dy, std::span<const double> gain, const LayerNormCache& cache,
                             std::span<double> dx, std::span<double> dgain, std::span<double> dbias) {
  std::size_t d = dy.size();
  double mean_dxhat = 0.0;
  double mean_dxhat_xhat = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    double dxhat = dy[i] * gain[i];
    mean_dxhat += dxhat;
    mean_dxhat_xhat += dxhat * cache.normed[i];
    dgain[i] += dy[i] * cache.normed[i];
    dbias[i] += dy[i];
  }
  mean_dxhat /= static_cast<double>(d);
  mean_dxhat_xhat /= static_cast<double>(d);
  for (std::size_t i = 0; i < d; ++i) {
    double dxhat = dy[i] * gain[i];
    dx[i] = cache.inv_std * (dxhat - mean_dxhat - cache.normed[i] * mean_dxhat_xhat);
  }
}

void glorot_fill(Matrix& m, Rng& rng) {
  double limit = std::sqrt(6.0 / (m.rows + m.cols));
  for (auto& v : m.data) v = rng.uniform(-limit, limit);
}

void glorot_fill(Vec& v, int fan_in, int fan_out, Rng& rng) {
  double limit = std::sqrt(6.0 / (fan_in + fan_out));
  for (auto& x : v) x = rng.uniform(-limit, limit);
}

}  // namespace mmrec
