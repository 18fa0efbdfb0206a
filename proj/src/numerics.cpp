// Copyright 2026 The TiC Stream Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tic/numerics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <string>

namespace tic {

namespace {

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols) {
  if (rows == 0 || cols == 0) {
    throw ShapeError("matrix dimensions must be positive");
  }
  data_.assign(rows * cols, fill);
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (rows == 0 || cols == 0) {
    throw ShapeError("matrix dimensions must be positive");
  }
  if (data_.size() != rows * cols) {
    throw ShapeError("matrix data length " + std::to_string(data_.size()) +
                     " does not match " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(
    std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged row list");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(data));
}

Matrix transpose(const Matrix& m) {
  constexpr std::size_t kTile = 16;
  Matrix out(m.cols(), m.rows());
  for (std::size_t i0 = 0; i0 < m.rows(); i0 += kTile) {
    const std::size_t i1 = std::min(i0 + kTile, m.rows());
    for (std::size_t j0 = 0; j0 < m.cols(); j0 += kTile) {
      const std::size_t j1 = std::min(j0 + kTile, m.cols());
      for (std::size_t i = i0; i < i1; ++i) {
        for (std::size_t j = j0; j < j1; ++j) out(j, i) = m(i, j);
      }
    }
  }
  return out;
}

namespace {

// c(i, j) = sum over p = 0..k-1, in ascending p, of a_at(i, p) * b(p, j). Every
// product uses the same summation order, so results do not depend on the
// blocking below. Columns are processed in register blocks of 8.
template <typename AAt>
Matrix gemm(std::size_t n, std::size_t k, const Matrix& b, AAt a_at) {
  constexpr std::size_t kBlock = 8;
  const std::size_t m = b.cols();
  Matrix c(n, m);
  const double* __restrict pb = b.values().data();
  double* __restrict pc = c.values().data();
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j0 = 0;
    for (; j0 + kBlock <= m; j0 += kBlock) {
      double acc[kBlock] = {};
      for (std::size_t p = 0; p < k; ++p) {
        const double aip = a_at(i, p);
        const double* bp = pb + p * m + j0;
        for (std::size_t jj = 0; jj < kBlock; ++jj) acc[jj] += aip * bp[jj];
      }
      for (std::size_t jj = 0; jj < kBlock; ++jj) pc[i * m + j0 + jj] = acc[jj];
    }
    for (std::size_t j = j0; j < m; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a_at(i, p) * pb[p * m + j];
      pc[i * m + j] = acc;
    }
  }
  return c;
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + shape_str(a) + " x " + shape_str(b));
  }
  const double* pa = a.values().data();
  const std::size_t k = a.cols();
  return gemm(a.rows(), k, b, [pa, k](std::size_t i, std::size_t p) { return pa[i * k + p]; });
}

Matrix matmul_bt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_bt: " + shape_str(a) + " x " + shape_str(b) + "^T");
  }
  return matmul(a, transpose(b));
}

Matrix matmul_at(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_at: " + shape_str(a) + "^T x " + shape_str(b));
  }
  const double* pa = a.values().data();
  const std::size_t n = a.cols();
  return gemm(n, a.rows(), b, [pa, n](std::size_t i, std::size_t p) { return pa[p * n + i]; });
}

Matrix softmax_rows(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto in = m.row(i);
    auto dst = out.row(i);
    double mx = in[0];
    for (double x : in) {
      if (!std::isfinite(x)) throw NumericError("softmax_rows: non-finite input");
      mx = std::max(mx, x);
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      dst[j] = std::exp(in[j] - mx);
      sum += dst[j];
    }
    for (double& x : dst) x /= sum;
  }
  return out;
}

Matrix softmax_cols(const Matrix& m) {
  return transpose(softmax_rows(transpose(m)));
}

Matrix l2_normalize_rows(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto in = m.row(i);
    double sq = 0.0;
    for (double x : in) sq += x * x;
    const double norm = std::sqrt(sq);
    if (!(norm > 1e-12)) {
      throw DegenerateInputError("l2_normalize_rows: row " + std::to_string(i) +
                                 " has zero norm");
    }
    auto dst = out.row(i);
    for (std::size_t j = 0; j < in.size(); ++j) dst[j] = in[j] / norm;
  }
  return out;
}

// ---------------------------------------------------------------------------

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_stream(std::initializer_list<std::uint64_t> tags) {
  std::uint64_t acc = 0x6A09E667F3BCC909ULL;
  for (std::uint64_t tag : tags) {
    std::uint64_t s = acc ^ tag;
    acc = splitmix64(s);
  }
  return acc;
}

Rng::Rng(RngState state) {
  std::uint64_t sm = state.seed;
  std::uint64_t salt = state.stream_id ^ 0xD1B54A32D192ED03ULL;
  sm ^= splitmix64(salt);
  for (auto& word : s_) word = splitmix64(sm);
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = std::rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = std::rotl(s_[3], 45);
  return result;
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw IndexError("Rng::below: empty range");
  // Rejection keeps the result unbiased.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return x % n;
}

// ---------------------------------------------------------------------------

void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, double lr) {
  if (grads.size() != params.size() ||
      state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw ShapeError("adam_step: params/grads/moments size mismatch");
  }
  if (lr < 0.0) throw ConfigError("adam_step: negative learning rate");
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g * g;
    const double m_hat = m / bc1;
    const double v_hat = v / bc2;
    // Skipping the write keeps lr == 0 bit-exact, including signed zeros.
    if (lr != 0.0) params[i] -= lr * (m_hat / (std::sqrt(v_hat) + state.epsilon));
  }
}

std::vector<double> finite_diff_grad(
    const std::function<double(std::span<const double>)>& loss_fn,
    std::span<const double> params, double h) {
  if (!(h > 0.0)) throw ConfigError("finite_diff_grad: h must be positive");
  std::vector<double> x(params.begin(), params.end());
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double fp = loss_fn(x);
    x[i] = orig - h;
    const double fm = loss_fn(x);
    x[i] = orig;
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

}  // namespace tic
