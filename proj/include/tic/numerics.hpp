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

// Dense kernels, the Adam update and the seeded generator shared by every
// other module. All kernels use a fixed summation order so results are
// reproducible bit-for-bit across runs.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "tic/error.hpp"

namespace tic {

// Row-major dense matrix of doubles. Both dimensions are at least one.
class Matrix {
 public:
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  static Matrix identity(std::size_t n);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

Matrix transpose(const Matrix& m);

// a * b.
Matrix matmul(const Matrix& a, const Matrix& b);
// a * b^T, the similarity kernel for row-embedding batches.
Matrix matmul_bt(const Matrix& a, const Matrix& b);
// a^T * b, used for weight gradients.
Matrix matmul_at(const Matrix& a, const Matrix& b);

// Row-wise softmax with per-row max subtraction. Throws NumericError on
// non-finite input.
Matrix softmax_rows(const Matrix& m);
// Column-wise softmax (each column sums to one).
Matrix softmax_cols(const Matrix& m);

// Throws DegenerateInputError when a row norm is <= 1e-12.
Matrix l2_normalize_rows(const Matrix& m);

// ---------------------------------------------------------------------------
// Random numbers: SplitMix64 seeding feeding xoshiro256**.

std::uint64_t splitmix64(std::uint64_t& state);

// Folds a list of tags into a single stream identifier.
std::uint64_t derive_stream(std::initializer_list<std::uint64_t> tags);

struct RngState {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
};

class Rng {
 public:
  explicit Rng(RngState state);
  Rng(std::uint64_t seed, std::uint64_t stream_id) : Rng(RngState{seed, stream_id}) {}

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Standard normal via Box-Muller.
  double normal();
  // Unbiased integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// ---------------------------------------------------------------------------
// Adam.

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  explicit AdamState(std::size_t num_params)
      : first_moment(num_params, 0.0), second_moment(num_params, 0.0) {}

  bool operator==(const AdamState&) const = default;
};

// One bias-corrected Adam update in place. lr must be non-negative.
void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, double lr);

// Central differences (f(x+h) - f(x-h)) / 2h per coordinate.
std::vector<double> finite_diff_grad(
    const std::function<double(std::span<const double>)>& loss_fn,
    std::span<const double> params, double h);

}  // namespace tic
