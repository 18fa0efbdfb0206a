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

#include "tic/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "tic/binary_io.hpp"

namespace tic {

namespace {

constexpr std::uint64_t kInitTag = 0x494e4954ULL;  // "INIT"

// Activations kept for the backward pass. acts[0] is the input, acts[l + 1]
// the output of layer l (post-tanh for hidden layers, raw for the last).
struct TowerTrace {
  std::vector<Matrix> acts;
  std::vector<double> norms;
  Matrix normalized{1, 1};
};

TowerTrace forward_tower(const std::vector<Layer>& layers, const Matrix& input) {
  if (input.cols() != layers.front().weight.rows()) {
    throw ShapeError("encode: input has " + std::to_string(input.cols()) +
                     " columns, tower expects " +
                     std::to_string(layers.front().weight.rows()));
  }
  TowerTrace tr;
  tr.acts.reserve(layers.size() + 1);
  tr.acts.push_back(input);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Matrix z = matmul(tr.acts.back(), layers[l].weight);
    const auto& b = layers[l].bias;
    const bool hidden = l + 1 < layers.size();
    for (std::size_t i = 0; i < z.rows(); ++i) {
      auto row = z.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) {
        row[j] += b[j];
        if (hidden) row[j] = std::tanh(row[j]);
      }
    }
    tr.acts.push_back(std::move(z));
  }
  const Matrix& y = tr.acts.back();
  tr.normalized = l2_normalize_rows(y);
  tr.norms.resize(y.rows());
  for (std::size_t i = 0; i < y.rows(); ++i) {
    double sq = 0.0;
    for (double x : y.row(i)) sq += x * x;
    tr.norms[i] = std::sqrt(sq);
  }
  return tr;
}

std::vector<Layer> backward_tower(const std::vector<Layer>& layers,
                                  const TowerTrace& tr, const Matrix& d_normalized) {
  const Matrix& u = tr.normalized;
  // Through y / ||y||.
  Matrix dz(u.rows(), u.cols());
  for (std::size_t i = 0; i < u.rows(); ++i) {
    auto ui = u.row(i);
    auto gi = d_normalized.row(i);
    double dot = 0.0;
    for (std::size_t j = 0; j < ui.size(); ++j) dot += gi[j] * ui[j];
    auto out = dz.row(i);
    for (std::size_t j = 0; j < ui.size(); ++j) out[j] = (gi[j] - ui[j] * dot) / tr.norms[i];
  }

  std::vector<Layer> grads;
  grads.reserve(layers.size());
  for (std::size_t k = layers.size(); k-- > 0;) {
    Layer g{matmul_at(tr.acts[k], dz), std::vector<double>(dz.cols(), 0.0)};
    for (std::size_t i = 0; i < dz.rows(); ++i) {
      auto row = dz.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) g.bias[j] += row[j];
    }
    if (k > 0) {
      Matrix da = matmul_bt(dz, layers[k].weight);
      const Matrix& a = tr.acts[k];
      for (std::size_t i = 0; i < da.size(); ++i) {
        const double ai = a.values()[i];
        da.values()[i] *= 1.0 - ai * ai;
      }
      dz = std::move(da);
    }
    grads.push_back(std::move(g));
  }
  std::reverse(grads.begin(), grads.end());
  return grads;
}

// Row and column softmax of a logit matrix, all in the logits' layout. When
// the logit range allows it (always under the log_scale clamp) both share one
// exp pass shifted by the global max; otherwise each row and column is shifted
// by its own max.
struct BiSoftmax {
  Matrix row_log_p;
  Matrix row_p;
  Matrix col_log_p;
  Matrix col_p;
};

constexpr double kSharedShiftRange = 600.0;

void check_finite(const Matrix& m) {
  for (double x : m.values()) {
    if (!std::isfinite(x)) throw NumericError("softmax: non-finite logit");
  }
}

// Softmax along rows with per-row shifts, written into (log_p, p) as given or
// transposed.
void row_softmax_into(const Matrix& m, Matrix& log_p, Matrix& p, bool transposed) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto in = m.row(i);
    double mx = in[0];
    for (double x : in) mx = std::max(mx, x);
    double sum = 0.0;
    for (double x : in) sum += std::exp(x - mx);
    const double lse = std::log(sum);
    for (std::size_t j = 0; j < in.size(); ++j) {
      const double e = std::exp(in[j] - mx);
      double& lp = transposed ? log_p(j, i) : log_p(i, j);
      double& pp = transposed ? p(j, i) : p(i, j);
      lp = (in[j] - mx) - lse;
      pp = e / sum;
    }
  }
}

BiSoftmax bi_softmax(const Matrix& logits) {
  check_finite(logits);
  const std::size_t n = logits.rows(), m = logits.cols();
  BiSoftmax out{Matrix(n, m), Matrix(n, m), Matrix(n, m), Matrix(n, m)};
  const auto [lo, hi] = std::minmax_element(logits.values().begin(), logits.values().end());
  const double shift = *hi;
  if (*hi - *lo > kSharedShiftRange) {
    row_softmax_into(logits, out.row_log_p, out.row_p, false);
    row_softmax_into(transpose(logits), out.col_log_p, out.col_p, true);
    return out;
  }
  std::vector<double> row_sum(n, 0.0), col_sum(m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto x = logits.row(i);
    auto e = out.row_p.row(i);
    for (std::size_t j = 0; j < m; ++j) {
      e[j] = std::exp(x[j] - shift);
      row_sum[i] += e[j];
      col_sum[j] += e[j];
    }
  }
  std::vector<double> row_lse(n), col_lse(m);
  for (std::size_t i = 0; i < n; ++i) row_lse[i] = std::log(row_sum[i]);
  for (std::size_t j = 0; j < m; ++j) col_lse[j] = std::log(col_sum[j]);
  for (std::size_t i = 0; i < n; ++i) {
    auto x = logits.row(i);
    auto rp = out.row_p.row(i);
    auto cp = out.col_p.row(i);
    auto rl = out.row_log_p.row(i);
    auto cl = out.col_log_p.row(i);
    for (std::size_t j = 0; j < m; ++j) {
      const double e = rp[j];
      rp[j] = e / row_sum[i];
      cp[j] = e / col_sum[j];
      rl[j] = (x[j] - shift) - row_lse[i];
      cl[j] = (x[j] - shift) - col_lse[j];
    }
  }
  return out;
}

Matrix scaled_similarity(const Matrix& u, const Matrix& v, double log_scale) {
  Matrix l = matmul_bt(u, v);
  const double s = std::exp(log_scale);
  for (double& x : l.values()) x *= s;
  return l;
}

// Sum of p * (log p - log q) over all entries, divided by `count`: the mean
// KL over rows (or columns) when p holds row (or column) distributions.
double mean_kl(const Matrix& p, const Matrix& log_p, const Matrix& log_q, std::size_t count) {
  double total = 0.0;
  const auto pv = p.values();
  const auto lp = log_p.values();
  const auto lq = log_q.values();
  for (std::size_t k = 0; k < pv.size(); ++k) {
    if (pv[k] > 0.0) total += pv[k] * (lp[k] - lq[k]);
  }
  return total / static_cast<double>(count);
}

struct ObjectiveResult {
  double clip_loss = 0.0;
  double lwf_penalty = 0.0;
  TwoTowerParams grads;
};

// Contrastive loss and/or distillation penalty with one shared backward pass.
ObjectiveResult evaluate_objective(const TwoTowerParams& student,
                                   const Matrix& image_batch,
                                   const Matrix& text_batch, bool with_clip,
                                   const TwoTowerParams* teacher, double lambda) {
  if (image_batch.rows() != text_batch.rows()) {
    throw ShapeError("image and text batches differ in size");
  }
  const std::size_t n = image_batch.rows();
  const double inv_n = 1.0 / static_cast<double>(n);

  const TowerTrace tu = forward_tower(student.image_layers, image_batch);
  const TowerTrace tv = forward_tower(student.text_layers, text_batch);
  const Matrix logits = scaled_similarity(tu.normalized, tv.normalized, student.log_scale);
  const BiSoftmax sm = bi_softmax(logits);

  ObjectiveResult res;
  Matrix g(n, n);  // d objective / d logits

  if (with_clip) {
    double diag_rows = 0.0, diag_cols = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      diag_rows += sm.row_log_p(i, i);
      diag_cols += sm.col_log_p(i, i);
    }
    res.clip_loss = -0.5 * (diag_rows + diag_cols) * inv_n;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double target = i == j ? 1.0 : 0.0;
        g(i, j) += 0.5 * inv_n * ((sm.row_p(i, j) - target) + (sm.col_p(i, j) - target));
      }
    }
  }

  if (teacher != nullptr) {
    const Matrix tu_emb = forward_tower(teacher->image_layers, image_batch).normalized;
    const Matrix tv_emb = forward_tower(teacher->text_layers, text_batch).normalized;
    const BiSoftmax t = bi_softmax(scaled_similarity(tu_emb, tv_emb, teacher->log_scale));
    res.lwf_penalty = lambda * 0.5 *
                      (mean_kl(t.row_p, t.row_log_p, sm.row_log_p, n) +
                       mean_kl(t.col_p, t.col_log_p, sm.col_log_p, n));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double d_rows = sm.row_p(i, j) - t.row_p(i, j);
        const double d_cols = sm.col_p(i, j) - t.col_p(i, j);
        g(i, j) += lambda * 0.5 * inv_n * (d_rows + d_cols);
      }
    }
  }

  const double scale = std::exp(student.log_scale);
  double d_log_scale = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) d_log_scale += g.values()[k] * logits.values()[k];
  for (double& x : g.values()) x *= scale;  // now d objective / d (U V^T)

  const Matrix du = matmul(g, tv.normalized);
  const Matrix dv = matmul_at(g, tu.normalized);
  res.grads.image_layers = backward_tower(student.image_layers, tu, du);
  res.grads.text_layers = backward_tower(student.text_layers, tv, dv);
  res.grads.log_scale = d_log_scale;
  return res;
}

void append_layers(std::vector<double>& out, const std::vector<Layer>& layers) {
  for (const auto& l : layers) {
    out.insert(out.end(), l.weight.values().begin(), l.weight.values().end());
    out.insert(out.end(), l.bias.begin(), l.bias.end());
  }
}

std::size_t read_layers(std::span<const double> flat, std::size_t pos,
                        std::vector<Layer>& layers) {
  for (auto& l : layers) {
    auto w = l.weight.values();
    std::copy_n(flat.begin() + pos, w.size(), w.begin());
    pos += w.size();
    std::copy_n(flat.begin() + pos, l.bias.size(), l.bias.begin());
    pos += l.bias.size();
  }
  return pos;
}

}  // namespace

// ---------------------------------------------------------------------------

std::size_t TwoTowerParams::num_params() const {
  std::size_t n = 1;
  for (const auto* tower : {&image_layers, &text_layers}) {
    for (const auto& l : *tower) n += l.weight.size() + l.bias.size();
  }
  return n;
}

std::vector<double> TwoTowerParams::flatten() const {
  std::vector<double> out;
  out.reserve(num_params());
  append_layers(out, image_layers);
  append_layers(out, text_layers);
  out.push_back(log_scale);
  return out;
}

void TwoTowerParams::unflatten(std::span<const double> flat) {
  if (flat.size() != num_params()) {
    throw ShapeError("unflatten: got " + std::to_string(flat.size()) +
                     " values for " + std::to_string(num_params()) + " parameters");
  }
  std::size_t pos = read_layers(flat, 0, image_layers);
  pos = read_layers(flat, pos, text_layers);
  log_scale = flat[pos];
}

TwoTowerParams TwoTowerParams::zeros_like() const {
  TwoTowerParams z = *this;
  for (auto* tower : {&z.image_layers, &z.text_layers}) {
    for (auto& l : *tower) {
      std::fill(l.weight.values().begin(), l.weight.values().end(), 0.0);
      std::fill(l.bias.begin(), l.bias.end(), 0.0);
    }
  }
  z.log_scale = 0.0;
  return z;
}

void ModelDims::validate() const {
  if (image_widths.size() < 2 || text_widths.size() < 2) {
    throw ConfigError("each tower needs at least one layer");
  }
  for (const auto* w : {&image_widths, &text_widths}) {
    for (std::size_t x : *w) {
      if (x == 0) throw ConfigError("layer widths must be positive");
    }
  }
  if (image_widths.back() != text_widths.back()) {
    throw ConfigError("towers must end at the same embedding width");
  }
}

TwoTowerParams init_params(const ModelDims& dims, std::uint64_t seed) {
  dims.validate();
  Rng rng(seed, derive_stream({kInitTag}));
  auto make_tower = [&](const std::vector<std::size_t>& widths) {
    std::vector<Layer> layers;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
      const std::size_t fan_in = widths[l], fan_out = widths[l + 1];
      const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
      Matrix w(fan_in, fan_out);
      for (double& x : w.values()) x = rng.uniform(-limit, limit);
      layers.push_back({std::move(w), std::vector<double>(fan_out, 0.0)});
    }
    return layers;
  };
  TwoTowerParams p;
  p.image_layers = make_tower(dims.image_widths);
  p.text_layers = make_tower(dims.text_widths);
  p.log_scale = kInitLogScale;
  return p;
}

Matrix encode(const TwoTowerParams& params, const Matrix& inputs, Tower tower) {
  return forward_tower(params.tower(tower), inputs).normalized;
}

LossAndGrads clip_loss_and_grads(const TwoTowerParams& params,
                                 const Matrix& image_batch,
                                 const Matrix& text_batch) {
  auto r = evaluate_objective(params, image_batch, text_batch, true, nullptr, 0.0);
  return {r.clip_loss, std::move(r.grads)};
}

LossAndGrads lwf_penalty_and_grads(const TwoTowerParams& teacher,
                                   const TwoTowerParams& student,
                                   const Matrix& image_batch,
                                   const Matrix& text_batch, double lambda) {
  if (!(lambda >= 0.0)) throw ConfigError("lwf lambda must be >= 0");
  auto r = evaluate_objective(student, image_batch, text_batch, false, &teacher, lambda);
  return {r.lwf_penalty, std::move(r.grads)};
}

Checkpoint Checkpoint::fresh(TwoTowerParams params, std::string method_id) {
  Checkpoint c;
  c.adam = AdamState(params.num_params());
  c.params = std::move(params);
  c.method_id = std::move(method_id);
  return c;
}

MinibatchRecord train_minibatch(Checkpoint& ckpt, const Matrix& image_batch,
                                const Matrix& text_batch, double lr,
                                std::optional<LwfTeacher> lwf) {
  const TwoTowerParams* teacher = lwf ? lwf->params : nullptr;
  const double lambda = lwf ? lwf->lambda : 0.0;
  auto r = evaluate_objective(ckpt.params, image_batch, text_batch, true, teacher, lambda);

  std::vector<double> flat = ckpt.params.flatten();
  const std::vector<double> grads = r.grads.flatten();
  adam_step(flat, grads, ckpt.adam, lr);
  ckpt.params.unflatten(flat);
  ckpt.params.log_scale = std::min(ckpt.params.log_scale, kMaxLogScale);
  ckpt.global_step = ckpt.adam.step_count;
  return {r.clip_loss, r.lwf_penalty, lr};
}

// ---------------------------------------------------------------------------
// Checkpoint file.

namespace {

constexpr char kCkptMagic[4] = {'T', 'I', 'C', 'C'};
constexpr std::uint32_t kCkptVersion = 1;

struct NamedArray {
  std::vector<std::uint32_t> dims;
  std::vector<double> data;
  std::uint64_t offset = 0;
};

void put_array(io::ByteWriter& w, const std::string& name,
               const std::vector<std::uint32_t>& dims, std::span<const double> data) {
  w.u32(static_cast<std::uint32_t>(name.size()));
  w.bytes(name);
  w.u32(static_cast<std::uint32_t>(dims.size()));
  for (auto d : dims) w.u32(d);
  w.f64s(data);
}

std::string tower_name(Tower t) { return t == Tower::kImage ? "image" : "text"; }

// Calls fn(name, dims, span) for every parameter tensor in flatten order.
template <typename Params, typename Fn>
void for_each_tensor(Params& p, Fn&& fn) {
  for (Tower t : {Tower::kImage, Tower::kText}) {
    auto& layers = p.tower(t);
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const std::string prefix = tower_name(t) + "." + std::to_string(l);
      auto& w = layers[l].weight;
      fn(prefix + ".weight",
         std::vector<std::uint32_t>{static_cast<std::uint32_t>(w.rows()),
                                    static_cast<std::uint32_t>(w.cols())},
         w.values());
      fn(prefix + ".bias",
         std::vector<std::uint32_t>{static_cast<std::uint32_t>(layers[l].bias.size())},
         std::span(layers[l].bias));
    }
  }
  fn(std::string("log_scale"), std::vector<std::uint32_t>{}, std::span(&p.log_scale, 1));
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  if (ckpt.adam.first_moment.size() != ckpt.params.num_params() ||
      ckpt.adam.second_moment.size() != ckpt.params.num_params()) {
    throw ShapeError("checkpoint optimizer state does not match parameters");
  }
  if (ckpt.adam.step_count != ckpt.global_step) {
    throw ProtocolError("checkpoint global_step differs from optimizer step count");
  }
  io::ByteWriter w;
  w.bytes(std::string_view(kCkptMagic, 4));
  w.u32(kCkptVersion);
  w.u32(static_cast<std::uint32_t>(ckpt.method_id.size()));
  w.bytes(ckpt.method_id);
  w.u32(ckpt.trained_through_step);
  w.u64(ckpt.global_step);

  std::vector<std::tuple<std::string, std::vector<std::uint32_t>, std::span<const double>>> arrays;
  for_each_tensor(ckpt.params, [&](std::string name, std::vector<std::uint32_t> dims,
                                   std::span<const double> data) {
    arrays.emplace_back(std::move(name), std::move(dims), data);
  });
  const std::size_t n_tensors = arrays.size();
  std::size_t pos = 0;
  for (std::size_t i = 0; i < n_tensors; ++i) {
    const auto [name, dims, data] = arrays[i];
    arrays.emplace_back("adam.m." + name, dims,
                        std::span(ckpt.adam.first_moment).subspan(pos, data.size()));
    arrays.emplace_back("adam.v." + name, dims,
                        std::span(ckpt.adam.second_moment).subspan(pos, data.size()));
    pos += data.size();
  }
  arrays.emplace_back("adam.beta1", std::vector<std::uint32_t>{}, std::span(&ckpt.adam.beta1, 1));
  arrays.emplace_back("adam.beta2", std::vector<std::uint32_t>{}, std::span(&ckpt.adam.beta2, 1));
  arrays.emplace_back("adam.epsilon", std::vector<std::uint32_t>{},
                      std::span(&ckpt.adam.epsilon, 1));

  w.u32(static_cast<std::uint32_t>(arrays.size()));
  for (const auto& [name, dims, data] : arrays) put_array(w, name, dims, data);
  w.save(path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  auto r = io::ByteReader::load(path);
  if (r.remaining() < 4 || r.bytes(4, "magic") != std::string_view(kCkptMagic, 4)) {
    throw FormatError("bad magic in " + path.string(), 0);
  }
  const std::uint64_t version_at = r.offset();
  const std::uint32_t version = r.u32("version");
  if (version != kCkptVersion) throw UnsupportedVersionError(version, version_at);

  Checkpoint ckpt;
  const std::uint32_t id_len = r.u32("method_id length");
  ckpt.method_id = r.bytes(id_len, "method_id");
  ckpt.trained_through_step = r.u32("trained_through_step");
  ckpt.global_step = r.u64("global_step");

  std::map<std::string, NamedArray> arrays;
  const std::uint32_t count = r.u32("array count");
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedArray a;
    a.offset = r.offset();
    const std::uint32_t name_len = r.u32("array name length");
    std::string name = r.bytes(name_len, "array name");
    const std::uint32_t rank = r.u32("array rank");
    if (rank > 2) throw FormatError("array " + name + " has rank > 2", a.offset);
    std::uint64_t numel = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      a.dims.push_back(r.u32("array dim"));
      numel *= a.dims.back();
    }
    if (numel * 8 > r.remaining()) r.fail("array " + name + " exceeds file size");
    a.data.resize(numel);
    r.f64s(a.data, "array data");
    if (arrays.count(name)) throw FormatError("duplicate array " + name, a.offset);
    arrays.emplace(std::move(name), std::move(a));
  }
  if (r.remaining() != 0) r.fail("trailing bytes after arrays");

  auto take = [&](const std::string& name) -> NamedArray {
    auto it = arrays.find(name);
    if (it == arrays.end()) throw FormatError("missing array " + name, r.offset());
    NamedArray a = std::move(it->second);
    arrays.erase(it);
    return a;
  };
  auto scalar = [&](const std::string& name) {
    NamedArray a = take(name);
    if (!a.dims.empty()) throw FormatError(name + " must be rank 0", a.offset);
    return a.data[0];
  };

  for (Tower t : {Tower::kImage, Tower::kText}) {
    auto& layers = ckpt.params.tower(t);
    for (std::size_t l = 0; arrays.count(tower_name(t) + "." + std::to_string(l) + ".weight"); ++l) {
      const std::string prefix = tower_name(t) + "." + std::to_string(l);
      NamedArray w = take(prefix + ".weight");
      NamedArray b = take(prefix + ".bias");
      if (w.dims.size() != 2 || b.dims.size() != 1 || b.dims[0] != w.dims[1]) {
        throw FormatError("inconsistent shapes for " + prefix, w.offset);
      }
      if (!layers.empty() && layers.back().weight.cols() != w.dims[0]) {
        throw FormatError("layer chain broken at " + prefix, w.offset);
      }
      if (w.dims[0] == 0 || w.dims[1] == 0) throw FormatError("empty weight " + prefix, w.offset);
      layers.push_back({Matrix(w.dims[0], w.dims[1], std::move(w.data)), std::move(b.data)});
    }
    if (layers.empty()) throw FormatError("no layers for " + tower_name(t) + " tower", r.offset());
  }
  if (ckpt.params.image_layers.back().weight.cols() != ckpt.params.text_layers.back().weight.cols()) {
    throw FormatError("towers end at different embedding widths", r.offset());
  }
  ckpt.params.log_scale = scalar("log_scale");

  ckpt.adam = AdamState(ckpt.params.num_params());
  std::size_t pos = 0;
  for_each_tensor(ckpt.params, [&](const std::string& name, const std::vector<std::uint32_t>& dims,
                                   std::span<double> data) {
    NamedArray m = take("adam.m." + name);
    NamedArray v = take("adam.v." + name);
    if (m.dims != dims || v.dims != dims) {
      throw FormatError("optimizer moment shape mismatch for " + name, m.offset);
    }
    std::copy(m.data.begin(), m.data.end(), ckpt.adam.first_moment.begin() + pos);
    std::copy(v.data.begin(), v.data.end(), ckpt.adam.second_moment.begin() + pos);
    pos += data.size();
  });
  ckpt.adam.beta1 = scalar("adam.beta1");
  ckpt.adam.beta2 = scalar("adam.beta2");
  ckpt.adam.epsilon = scalar("adam.epsilon");
  ckpt.adam.step_count = ckpt.global_step;
  if (!arrays.empty()) {
    throw FormatError("unknown array " + arrays.begin()->first, arrays.begin()->second.offset);
  }
  return ckpt;
}

}  // namespace tic
