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

#pragma once

#include <span>
#include <vector>

#include "xbc/matrix.hpp"

namespace xbc::gru {

// One direction of a GRU layer. Input weights are D x H, recurrent weights
// H x H, biases 1 x H; vectors are rows, so W_z x reads as x * W_z.
struct GruDirection {
  Matrix w_z, w_r, w_h;
  Matrix u_z, u_r, u_h;
  Matrix b_z, b_r, b_h;

  GruDirection() = default;
  GruDirection(std::size_t input_dim, std::size_t hidden);

  std::size_t input_dim() const { return w_z.rows; }
  std::size_t hidden() const { return u_z.rows; }

  template <typename F>
  void for_each(F&& f) {
    f("w_z", w_z), f("w_r", w_r), f("w_h", w_h);
    f("u_z", u_z), f("u_r", u_r), f("u_h", u_h);
    f("b_z", b_z), f("b_r", b_r), f("b_h", b_h);
  }
  template <typename F>
  void for_each(F&& f) const {
    f("w_z", w_z), f("w_r", w_r), f("w_h", w_h);
    f("u_z", u_z), f("u_r", u_r), f("u_h", u_h);
    f("b_z", b_z), f("b_r", b_r), f("b_h", b_h);
  }
};

struct GruParams {
  GruDirection fwd;
  GruDirection bwd;

  GruParams() = default;
  GruParams(std::size_t input_dim, std::size_t hidden) : fwd(input_dim, hidden), bwd(input_dim, hidden) {}
  std::size_t hidden() const { return fwd.hidden(); }
  std::size_t input_dim() const { return fwd.input_dim(); }
};

// z = sigma(x W_z + h U_z + b_z), r = sigma(x W_r + h U_r + b_r),
// c = tanh(x W_h + (r * h) U_h + b_h), h' = (1 - z) * h + z * c.
std::vector<double> gru_cell(std::span<const double> x, std::span<const double> h_prev,
                             const GruDirection& p);

// Activations of one step, kept for back-propagation.
struct StepCache {
  std::vector<double> h_prev, z, r, c, h;
};

struct BiGruCache {
  std::vector<StepCache> fwd;  // indexed by position t
  std::vector<StepCache> bwd;  // indexed by position t
};

// Row t = [forward state after tokens 0..t, backward state after T-1..t].
Matrix bigru_forward(const Matrix& inputs, const GruParams& p, BiGruCache* cache = nullptr);

// Accumulates parameter gradients into `grad` and returns dL/d inputs.
Matrix bigru_backward(const Matrix& inputs, const GruParams& p, const BiGruCache& cache,
                      const Matrix& d_out, GruParams& grad);

}  // namespace xbc::gru
