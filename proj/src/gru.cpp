// Copyright 2026 The xbc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "xbc/gru.hpp"

#include <cmath>

#include "xbc/errors.hpp"

namespace xbc::gru {

GruDirection::GruDirection(std::size_t d, std::size_t h)
    : w_z(d, h), w_r(d, h), w_h(d, h), u_z(h, h), u_r(h, h), u_h(h, h),
      b_z(1, h), b_r(1, h), b_h(1, h) {}

namespace {

double sigmoid(double a) {
  if (a >= 0) return 1.0 / (1.0 + std::exp(-a));
  double e = std::exp(a);
  return e / (1.0 + e);
}

// out += v * M  (v: 1 x rows(M))
void add_vec_mat(std::span<const double> v, const Matrix& m, std::span<double> out) {
  for (std::size_t i = 0; i < m.rows; ++i) {
    const double vi = v[i];
    if (vi == 0.0) continue;
    const double* row = m.data.data() + i * m.cols;
    for (std::size_t j = 0; j < m.cols; ++j) out[j] += vi * row[j];
  }
}

// out += M * v  (v: 1 x cols(M)), i.e. v times M transposed.
void add_mat_vec(const Matrix& m, std::span<const double> v, std::span<double> out) {
  for (std::size_t i = 0; i < m.rows; ++i) {
    const double* row = m.data.data() + i * m.cols;
    double s = 0.0;
    for (std::size_t j = 0; j < m.cols; ++j) s += row[j] * v[j];
    out[i] += s;
  }
}

// G += a^T b
void add_outer(std::span<const double> a, std::span<const double> b, Matrix& g) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double ai = a[i];
    if (ai == 0.0) continue;
    double* row = g.data.data() + i * g.cols;
    for (std::size_t j = 0; j < b.size(); ++j) row[j] += ai * b[j];
  }
}

StepCache step(std::span<const double> x, std::span<const double> h_prev, const GruDirection& p) {
  const std::size_t H = p.hidden();
  StepCache s;
  s.h_prev.assign(h_prev.begin(), h_prev.end());
  std::vector<double> az(p.b_z.data), ar(p.b_r.data), ah(p.b_h.data);
  add_vec_mat(x, p.w_z, az);
  add_vec_mat(h_prev, p.u_z, az);
  add_vec_mat(x, p.w_r, ar);
  add_vec_mat(h_prev, p.u_r, ar);
  s.z.resize(H);
  s.r.resize(H);
  for (std::size_t j = 0; j < H; ++j) {
    s.z[j] = sigmoid(az[j]);
    s.r[j] = sigmoid(ar[j]);
  }
  std::vector<double> gated(H);
  for (std::size_t j = 0; j < H; ++j) gated[j] = s.r[j] * h_prev[j];
  add_vec_mat(x, p.w_h, ah);
  add_vec_mat(gated, p.u_h, ah);
  s.c.resize(H);
  s.h.resize(H);
  for (std::size_t j = 0; j < H; ++j) {
    s.c[j] = std::tanh(ah[j]);
    s.h[j] = (1.0 - s.z[j]) * h_prev[j] + s.z[j] * s.c[j];
  }
  return s;
}

// Back-propagates dh through one step. Adds to grad and d_x; returns dh_prev.
std::vector<double> step_backward(std::span<const double> x, const StepCache& s,
                                  std::span<const double> dh, const GruDirection& p,
                                  GruDirection& grad, std::span<double> d_x) {
  const std::size_t H = p.hidden();
  std::vector<double> dh_prev(H), da_z(H), da_r(H), da_h(H), gated(H), dg(H, 0.0);
  for (std::size_t j = 0; j < H; ++j) {
    const double dc = dh[j] * s.z[j];
    const double dz = dh[j] * (s.c[j] - s.h_prev[j]);
    dh_prev[j] = dh[j] * (1.0 - s.z[j]);
    da_h[j] = dc * (1.0 - s.c[j] * s.c[j]);
    da_z[j] = dz * s.z[j] * (1.0 - s.z[j]);
    gated[j] = s.r[j] * s.h_prev[j];
  }
  // Candidate path.
  add_outer(x, da_h, grad.w_h);
  add_outer(gated, da_h, grad.u_h);
  for (std::size_t j = 0; j < H; ++j) grad.b_h.data[j] += da_h[j];
  add_mat_vec(p.w_h, da_h, d_x);
  add_mat_vec(p.u_h, da_h, dg);
  for (std::size_t j = 0; j < H; ++j) {
    const double dr = dg[j] * s.h_prev[j];
    dh_prev[j] += dg[j] * s.r[j];
    da_r[j] = dr * s.r[j] * (1.0 - s.r[j]);
  }
  // Reset and update gates.
  add_outer(x, da_r, grad.w_r);
  add_outer(s.h_prev, da_r, grad.u_r);
  add_outer(x, da_z, grad.w_z);
  add_outer(s.h_prev, da_z, grad.u_z);
  for (std::size_t j = 0; j < H; ++j) {
    grad.b_r.data[j] += da_r[j];
    grad.b_z.data[j] += da_z[j];
  }
  add_mat_vec(p.w_r, da_r, d_x);
  add_mat_vec(p.w_z, da_z, d_x);
  add_mat_vec(p.u_r, da_r, dh_prev);
  add_mat_vec(p.u_z, da_z, dh_prev);
  return dh_prev;
}

void check(std::span<const double> x, std::span<const double> h, const GruDirection& p) {
  if (x.size() != p.input_dim() || h.size() != p.hidden())
    throw ShapeMismatch("gru_cell: x has " + std::to_string(x.size()) + " (want " +
                        std::to_string(p.input_dim()) + "), h has " + std::to_string(h.size()) +
                        " (want " + std::to_string(p.hidden()) + ")");
}

}  // namespace

std::vector<double> gru_cell(std::span<const double> x, std::span<const double> h_prev,
                             const GruDirection& p) {
  check(x, h_prev, p);
  return step(x, h_prev, p).h;
}

Matrix bigru_forward(const Matrix& inputs, const GruParams& p, BiGruCache* cache) {
  const std::size_t T = inputs.rows, H = p.hidden();
  if (T == 0) throw EmptySequence("bigru_forward needs T >= 1");
  if (inputs.cols != p.input_dim()) throw ShapeMismatch("bigru input width != GRU input dim");
  Matrix out(T, 2 * H);
  if (cache) {
    cache->fwd.assign(T, {});
    cache->bwd.assign(T, {});
  }
  std::vector<double> h(H, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    StepCache s = step(inputs.row(t), h, p.fwd);
    h = s.h;
    std::copy(h.begin(), h.end(), out.row(t).begin());
    if (cache) cache->fwd[t] = std::move(s);
  }
  h.assign(H, 0.0);
  for (std::size_t t = T; t-- > 0;) {
    StepCache s = step(inputs.row(t), h, p.bwd);
    h = s.h;
    std::copy(h.begin(), h.end(), out.row(t).begin() + H);
    if (cache) cache->bwd[t] = std::move(s);
  }
  return out;
}

Matrix bigru_backward(const Matrix& inputs, const GruParams& p, const BiGruCache& cache,
                      const Matrix& d_out, GruParams& grad) {
  const std::size_t T = inputs.rows, H = p.hidden();
  Matrix d_in(T, inputs.cols);
  std::vector<double> dh(H, 0.0);
  // Forward direction: state t feeds t + 1, so walk right to left.
  for (std::size_t t = T; t-- > 0;) {
    for (std::size_t j = 0; j < H; ++j) dh[j] += d_out(t, j);
    dh = step_backward(inputs.row(t), cache.fwd[t], dh, p.fwd, grad.fwd, d_in.row(t));
  }
  dh.assign(H, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t j = 0; j < H; ++j) dh[j] += d_out(t, H + j);
    dh = step_backward(inputs.row(t), cache.bwd[t], dh, p.bwd, grad.bwd, d_in.row(t));
  }
  return d_in;
}

}  // namespace xbc::gru
