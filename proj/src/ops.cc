// Copyright 2026 The ASD Authors.
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

#include "asd/ops.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Core>

namespace asd {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

template <typename T>
void require_same_shape(const Var<T>& a, const Var<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shapes " + shape_string(a.shape()) +
                         " and " + shape_string(b.shape()) + " differ");
  }
}

template <typename T>
void require_rank(const Var<T>& x, int rank, const char* op, const char* what) {
  if (x.rank() != rank) {
    throw DimensionError(std::string(op) + ": " + what + " must have rank " +
                         std::to_string(rank) + ", got " + shape_string(x.shape()));
  }
}

// Applies an elementwise map whose derivative is a function of (input, output).
template <typename T, typename F, typename D>
Var<T> unary(const Var<T>& x, F f, D df, const char* op) {
  auto in = x.values();
  Buffer<T> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = f(in[i]);
  const std::size_t xi = x.id();
  return x.tape().record(
      x.shape(), std::move(out), {x},
      [xi, df](Tape<T>& tape, std::size_t self) {
        auto g = tape.grad(self);
        auto xv = tape.value(xi);
        auto yv = tape.value(self);
        auto gx = tape.grad_mut(xi);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * df(xv[i], yv[i]);
      },
      op);
}

struct ConvDims {
  std::int64_t channels, t, h, w;
  std::int64_t kt, kh, kw;
  std::int64_t st, sh, sw;
  std::int64_t pt, ph, pw;
  std::int64_t ot, oh, ow;

  std::int64_t patch() const { return channels * kt * kh * kw; }
  std::int64_t positions() const { return ot * oh * ow; }
  std::int64_t input_size() const { return channels * t * h * w; }
};

// [lo, hi) of output columns wo with 0 <= wo * sw - pw + e < w.
std::pair<std::int64_t, std::int64_t> valid_columns(const ConvDims& d, std::int64_t e) {
  auto ceil_div = [](std::int64_t a, std::int64_t b) {
    return a >= 0 ? (a + b - 1) / b : -((-a) / b);
  };
  const std::int64_t lo = std::clamp<std::int64_t>(ceil_div(d.pw - e, d.sw), 0, d.ow);
  const std::int64_t hi = std::clamp<std::int64_t>(ceil_div(d.w + d.pw - e, d.sw), lo, d.ow);
  return {lo, hi};
}

// cols [C*kt*kh*kw x ot*oh*ow]; zero padding.
template <typename T>
void im2col(const T* x, const ConvDims& d, T* cols) {
  const std::int64_t positions = d.positions();
  for (std::int64_t c = 0; c < d.channels; ++c) {
    for (std::int64_t a = 0; a < d.kt; ++a) {
      for (std::int64_t b = 0; b < d.kh; ++b) {
        for (std::int64_t e = 0; e < d.kw; ++e) {
          const std::int64_t row = ((c * d.kt + a) * d.kh + b) * d.kw + e;
          T* dst = cols + row * positions;
          // Output columns whose input column lies inside the image.
          const auto [lo, hi_end] = valid_columns(d, e);
          for (std::int64_t to = 0; to < d.ot; ++to) {
            const std::int64_t ti = to * d.st - d.pt + a;
            for (std::int64_t ho = 0; ho < d.oh; ++ho) {
              const std::int64_t hi = ho * d.sh - d.ph + b;
              T* out = dst + (to * d.oh + ho) * d.ow;
              if (ti < 0 || ti >= d.t || hi < 0 || hi >= d.h) {
                std::fill(out, out + d.ow, T(0));
                continue;
              }
              const T* src = x + ((c * d.t + ti) * d.h + hi) * d.w - d.pw + e;
              std::fill(out, out + lo, T(0));
              if (d.sw == 1) {
                std::copy(src + lo, src + hi_end, out + lo);
              } else {
                for (std::int64_t wo = lo; wo < hi_end; ++wo) out[wo] = src[wo * d.sw];
              }
              std::fill(out + hi_end, out + d.ow, T(0));
            }
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const T* cols, const ConvDims& d, T* dx) {
  const std::int64_t positions = d.positions();
  for (std::int64_t c = 0; c < d.channels; ++c) {
    for (std::int64_t a = 0; a < d.kt; ++a) {
      for (std::int64_t b = 0; b < d.kh; ++b) {
        for (std::int64_t e = 0; e < d.kw; ++e) {
          const std::int64_t row = ((c * d.kt + a) * d.kh + b) * d.kw + e;
          const T* src = cols + row * positions;
          for (std::int64_t to = 0; to < d.ot; ++to) {
            const std::int64_t ti = to * d.st - d.pt + a;
            if (ti < 0 || ti >= d.t) continue;
            for (std::int64_t ho = 0; ho < d.oh; ++ho) {
              const std::int64_t hi = ho * d.sh - d.ph + b;
              if (hi < 0 || hi >= d.h) continue;
              const T* in = src + (to * d.oh + ho) * d.ow;
              T* dst = dx + ((c * d.t + ti) * d.h + hi) * d.w;
              for (std::int64_t wo = 0; wo < d.ow; ++wo) {
                const std::int64_t wi = wo * d.sw - d.pw + e;
                if (wi >= 0 && wi < d.w) dst[wi] += in[wo];
              }
            }
          }
        }
      }
    }
  }
}

// Shared convolution kernel. `batch` samples of [C x t x h x w].
template <typename T>
Var<T> conv_core(const Var<T>& x, const Var<T>& weight, const Var<T>& bias,
                 std::int64_t batch, const ConvDims& d, Shape out_shape,
                 const char* op) {
  const std::int64_t out_ch = weight.dim(0);
  const std::int64_t patch = d.patch();
  const std::int64_t positions = d.positions();
  Buffer<T> out(static_cast<std::size_t>(batch * out_ch * positions));
  Buffer<T> cols(static_cast<std::size_t>(patch * positions));
  ConstMatMap<T> wm(weight.values().data(), out_ch, patch);
  auto bv = bias.values();
  auto xv = x.values();
  for (std::int64_t n = 0; n < batch; ++n) {
    im2col(xv.data() + n * d.input_size(), d, cols.data());
    MatMap<T> y(out.data() + n * out_ch * positions, out_ch, positions);
    y.noalias() = wm * ConstMatMap<T>(cols.data(), patch, positions);
    for (std::int64_t o = 0; o < out_ch; ++o) y.row(o).array() += bv[o];
  }
  const std::size_t xi = x.id(), wi = weight.id(), bi = bias.id();
  return x.tape().record(
      std::move(out_shape), std::move(out), {x, weight, bias},
      [xi, wi, bi, d, batch, out_ch](Tape<T>& tape, std::size_t self) {
        const std::int64_t patch = d.patch();
        const std::int64_t positions = d.positions();
        auto g = tape.grad(self);
        auto gx = tape.grad_mut(xi);
        auto gw = tape.grad_mut(wi);
        auto gb = tape.grad_mut(bi);
        auto xv = tape.value(xi);
        ConstMatMap<T> wm(tape.value(wi).data(), out_ch, patch);
        Buffer<T> cols(static_cast<std::size_t>(patch * positions));
        for (std::int64_t n = 0; n < batch; ++n) {
          ConstMatMap<T> gy(g.data() + n * out_ch * positions, out_ch, positions);
          if (!gb.empty()) {
            for (std::int64_t o = 0; o < out_ch; ++o) {
              const T* row = g.data() + (n * out_ch + o) * positions;
              T acc(0);
              for (std::int64_t p = 0; p < positions; ++p) acc += row[p];
              gb[o] += acc;
            }
          }
          if (!gw.empty()) {
            im2col(xv.data() + n * d.input_size(), d, cols.data());
            MatMap<T>(gw.data(), out_ch, patch).noalias() +=
                gy * ConstMatMap<T>(cols.data(), patch, positions).transpose();
          }
          if (!gx.empty()) {
            MatMap<T> gcols(cols.data(), patch, positions);
            gcols.noalias() = wm.transpose() * gy;
            col2im(cols.data(), d, gx.data() + n * d.input_size());
          }
        }
      },
      op);
}

}  // namespace

std::int64_t conv_output_size(std::int64_t in, std::int64_t kernel,
                              std::int64_t stride, std::int64_t pad,
                              const char* axis) {
  if (stride <= 0) {
    throw ConfigError(std::string("non-positive stride on axis ") + axis);
  }
  if (pad < 0 || kernel <= 0) {
    throw ConfigError(std::string("invalid kernel or padding on axis ") + axis);
  }
  if (in + 2 * pad < kernel) {
    throw DimensionError(std::string("kernel ") + std::to_string(kernel) +
                         " does not fit padded input " +
                         std::to_string(in + 2 * pad) + " on axis " + axis);
  }
  return (in + 2 * pad - kernel) / stride + 1;
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a, b, "add");
  auto av = a.values(), bv = b.values();
  Buffer<T> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  const std::size_t ai = a.id(), bi = b.id();
  return a.tape().record(
      a.shape(), std::move(out), {a, b},
      [ai, bi](Tape<T>& tape, std::size_t self) {
        auto g = tape.grad(self);
        for (std::size_t id : {ai, bi}) {
          auto gi = tape.grad_mut(id);
          for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += g[i];
        }
      },
      "add");
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a, b, "mul");
  auto av = a.values(), bv = b.values();
  Buffer<T> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  const std::size_t ai = a.id(), bi = b.id();
  return a.tape().record(
      a.shape(), std::move(out), {a, b},
      [ai, bi](Tape<T>& tape, std::size_t self) {
        auto g = tape.grad(self);
        auto av = tape.value(ai), bv = tape.value(bi);
        auto ga = tape.grad_mut(ai);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * bv[i];
        auto gb = tape.grad_mut(bi);
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[i] * av[i];
      },
      "mul");
}

template <typename T>
Var<T> scale(const Var<T>& a, T factor) {
  return unary(
      a, [factor](T x) { return x * factor; },
      [factor](T, T) { return factor; }, "scale");
}

template <typename T>
Var<T> square(const Var<T>& x) {
  return unary(
      x, [](T v) { return v * v; }, [](T v, T) { return T(2) * v; }, "square");
}

template <typename T>
Var<T> relu(const Var<T>& x) {
  return unary(
      x, [](T v) { return v > T(0) ? v : T(0); },
      [](T v, T) { return v > T(0) ? T(1) : T(0); }, "relu");
}

template <typename T>
Var<T> sigmoid(const Var<T>& x) {
  return unary(
      x,
      [](T v) {
        if (v >= T(0)) return T(1) / (T(1) + std::exp(-v));
        const T e = std::exp(v);
        return e / (T(1) + e);
      },
      [](T, T y) { return y * (T(1) - y); }, "sigmoid");
}

template <typename T>
Var<T> tanh(const Var<T>& x) {
  return unary(
      x, [](T v) { return std::tanh(v); }, [](T, T y) { return T(1) - y * y; },
      "tanh");
}

template <typename T>
Var<T> sum(const Var<T>& x) {
  T total(0);
  for (T v : x.values()) total += v;
  const std::size_t xi = x.id();
  return x.tape().record(
      Shape{}, {total}, {x},
      [xi](Tape<T>& tape, std::size_t self) {
        const T g = tape.grad(self)[0];
        for (T& gx : tape.grad_mut(xi)) gx += g;
      },
      "sum");
}

template <typename T>
Var<T> mean(const Var<T>& x) {
  return scale(sum(x), T(1) / static_cast<T>(x.size()));
}

template <typename T>
Var<T> reshape(const Var<T>& x, Shape shape) {
  if (num_elements(shape) != static_cast<std::int64_t>(x.size())) {
    throw DimensionError("reshape: cannot view " + shape_string(x.shape()) +
                         " as " + shape_string(shape));
  }
  auto v = x.values();
  const std::size_t xi = x.id();
  return x.tape().record(
      std::move(shape), Buffer<T>(v.begin(), v.end()), {x},
      [xi](Tape<T>& tape, std::size_t self) {
        auto g = tape.grad(self);
        auto gx = tape.grad_mut(xi);
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i];
      },
      "reshape");
}

template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
  require_rank(a, 2, "matmul", "left operand");
  require_rank(b, 2, "matmul", "right operand");
  const std::int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw DimensionError("matmul: inner axis mismatch " + shape_string(a.shape()) +
                         " x " + shape_string(b.shape()));
  }
  Buffer<T> out(static_cast<std::size_t>(m * n));
  MatMap<T>(out.data(), m, n).noalias() =
      ConstMatMap<T>(a.values().data(), m, k) * ConstMatMap<T>(b.values().data(), k, n);
  const std::size_t ai = a.id(), bi = b.id();
  return a.tape().record(
      Shape{m, n}, std::move(out), {a, b},
      [ai, bi, m, k, n](Tape<T>& tape, std::size_t self) {
        ConstMatMap<T> g(tape.grad(self).data(), m, n);
        auto ga = tape.grad_mut(ai);
        if (!ga.empty()) {
          MatMap<T>(ga.data(), m, k).noalias() +=
              g * ConstMatMap<T>(tape.value(bi).data(), k, n).transpose();
        }
        auto gb = tape.grad_mut(bi);
        if (!gb.empty()) {
          MatMap<T>(gb.data(), k, n).noalias() +=
              ConstMatMap<T>(tape.value(ai).data(), m, k).transpose() * g;
        }
      },
      "matmul");
}

template <typename T>
Var<T> linear(const Var<T>& x, const Var<T>& weight, const Var<T>& bias) {
  require_rank(weight, 2, "linear", "weight");
  require_rank(bias, 1, "linear", "bias");
  if (x.rank() < 1) throw DimensionError("linear: input must have rank >= 1");
  const std::int64_t in = x.dim(x.rank() - 1);
  const std::int64_t out_dim = weight.dim(0);
  if (weight.dim(1) != in) {
    throw DimensionError("linear: last axis " + std::to_string(in) +
                         " does not match weight " + shape_string(weight.shape()));
  }
  if (bias.dim(0) != out_dim) {
    throw DimensionError("linear: bias " + shape_string(bias.shape()) +
                         " does not match weight " + shape_string(weight.shape()));
  }
  const std::int64_t rows = static_cast<std::int64_t>(x.size()) / in;
  Shape out_shape = x.shape();
  out_shape.back() = out_dim;
  Buffer<T> out(static_cast<std::size_t>(rows * out_dim));
  MatMap<T> y(out.data(), rows, out_dim);
  y.noalias() = ConstMatMap<T>(x.values().data(), rows, in) *
                ConstMatMap<T>(weight.values().data(), out_dim, in).transpose();
  y.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(
      bias.values().data(), out_dim);
  const std::size_t xi = x.id(), wi = weight.id(), bi = bias.id();
  return x.tape().record(
      std::move(out_shape), std::move(out), {x, weight, bias},
      [xi, wi, bi, rows, in, out_dim](Tape<T>& tape, std::size_t self) {
        ConstMatMap<T> g(tape.grad(self).data(), rows, out_dim);
        auto gx = tape.grad_mut(xi);
        if (!gx.empty()) {
          MatMap<T>(gx.data(), rows, in).noalias() +=
              g * ConstMatMap<T>(tape.value(wi).data(), out_dim, in);
        }
        auto gw = tape.grad_mut(wi);
        if (!gw.empty()) {
          MatMap<T>(gw.data(), out_dim, in).noalias() +=
              g.transpose() * ConstMatMap<T>(tape.value(xi).data(), rows, in);
        }
        auto gb = tape.grad_mut(bi);
        if (!gb.empty()) {
          Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(gb.data(), out_dim) +=
              g.colwise().sum();
        }
      },
      "linear");
}

template <typename T>
Var<T> concat_features(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw DimensionError("concat_features: no inputs");
  const std::int64_t rows = parts[0].dim(0);
  std::vector<std::int64_t> widths;
  std::int64_t total = 0;
  for (const auto& p : parts) {
    require_rank(p, 2, "concat_features", "input");
    if (p.dim(0) != rows) {
      throw DimensionError("concat_features: row counts differ on axis 0");
    }
    widths.push_back(p.dim(1));
    total += p.dim(1);
  }
  Buffer<T> out(static_cast<std::size_t>(rows * total));
  std::int64_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    auto v = parts[k].values();
    for (std::int64_t r = 0; r < rows; ++r) {
      std::copy_n(v.data() + r * widths[k], widths[k],
                  out.data() + r * total + offset);
    }
    offset += widths[k];
  }
  std::vector<std::size_t> ids;
  for (const auto& p : parts) ids.push_back(p.id());
  return parts[0].tape().record(
      Shape{rows, total}, std::move(out), parts,
      [ids, widths, rows, total](Tape<T>& tape, std::size_t self) {
        auto g = tape.grad(self);
        std::int64_t offset = 0;
        for (std::size_t k = 0; k < ids.size(); ++k) {
          auto gk = tape.grad_mut(ids[k]);
          if (!gk.empty()) {
            for (std::int64_t r = 0; r < rows; ++r) {
              const T* src = g.data() + r * total + offset;
              T* dst = gk.data() + r * widths[k];
              for (std::int64_t c = 0; c < widths[k]; ++c) dst[c] += src[c];
            }
          }
          offset += widths[k];
        }
      },
      "concat_features");
}

template <typename T>
Var<T> slice_features(const Var<T>& x, std::int64_t start, std::int64_t length) {
  require_rank(x, 2, "slice_features", "input");
  const std::int64_t rows = x.dim(0), width = x.dim(1);
  if (start < 0 || length <= 0 || start + length > width) {
    throw IndexError("slice_features: range [" + std::to_string(start) + ", " +
                     std::to_string(start + length) + ") outside axis 1 of extent " +
                     std::to_string(width));
  }
  auto v = x.values();
  Buffer<T> out(static_cast<std::size_t>(rows * length));
  for (std::int64_t r = 0; r < rows; ++r) {
    std::copy_n(v.data() + r * width + start, length, out.data() + r * length);
  }
  const std::size_t xi = x.id();
  return x.tape().record(
      Shape{rows, length}, std::move(out), {x},
      [xi, rows, width, start, length](Tape<T>& tape, std::size_t self) {
        auto g = tape.grad(self);
        auto gx = tape.grad_mut(xi);
        for (std::int64_t r = 0; r < rows; ++r) {
          for (std::int64_t c = 0; c < length; ++c) {
            gx[r * width + start + c] += g[r * length + c];
          }
        }
      },
      "slice_features");
}

template <typename T>
Var<T> select_step(const Var<T>& x, std::int64_t step) {
  require_rank(x, 3, "select_step", "input");
  const std::int64_t batch = x.dim(0), steps = x.dim(1), feat = x.dim(2);
  if (step < 0 || step >= steps) {
    throw IndexError("select_step: step " + std::to_string(step) +
                     " outside axis 1 of extent " + std::to_string(steps));
  }
  auto v = x.values();
  Buffer<T> out(static_cast<std::size_t>(batch * feat));
  for (std::int64_t b = 0; b < batch; ++b) {
    std::copy_n(v.data() + (b * steps + step) * feat, feat, out.data() + b * feat);
  }
  const std::size_t xi = x.id();
  return x.tape().record(
      Shape{batch, feat}, std::move(out), {x},
      [xi, batch, steps, feat, step](Tape<T>& tape, std::size_t self) {
        auto g = tape.grad(self);
        auto gx = tape.grad_mut(xi);
        for (std::int64_t b = 0; b < batch; ++b) {
          for (std::int64_t f = 0; f < feat; ++f) {
            gx[(b * steps + step) * feat + f] += g[b * feat + f];
          }
        }
      },
      "select_step");
}

template <typename T>
Var<T> mean_steps(const Var<T>& x) {
  require_rank(x, 3, "mean_steps", "input");
  const std::int64_t batch = x.dim(0), steps = x.dim(1), feat = x.dim(2);
  auto v = x.values();
  Buffer<T> out(static_cast<std::size_t>(batch * feat), T(0));
  const T inv = T(1) / static_cast<T>(steps);
  for (std::int64_t b = 0; b < batch; ++b) {
    for (std::int64_t s = 0; s < steps; ++s) {
      for (std::int64_t f = 0; f < feat; ++f) {
        out[b * feat + f] += v[(b * steps + s) * feat + f] * inv;
      }
    }
  }
  const std::size_t xi = x.id();
  return x.tape().record(
      Shape{batch, feat}, std::move(out), {x},
      [xi, batch, steps, feat, inv](Tape<T>& tape, std::size_t self) {
        auto g = tape.grad(self);
        auto gx = tape.grad_mut(xi);
        for (std::int64_t b = 0; b < batch; ++b) {
          for (std::int64_t s = 0; s < steps; ++s) {
            for (std::int64_t f = 0; f < feat; ++f) {
              gx[(b * steps + s) * feat + f] += g[b * feat + f] * inv;
            }
          }
        }
      },
      "mean_steps");
}

template <typename T>
Var<T> conv3d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias,
              std::array<std::int64_t, 3> stride, std::array<std::int64_t, 3> pad) {
  if (x.rank() != 4 && x.rank() != 5) {
    throw DimensionError("conv3d: input must be C x T x H x W or batched, got " +
                         shape_string(x.shape()));
  }
  require_rank(weight, 5, "conv3d", "weight");
  require_rank(bias, 1, "conv3d", "bias");
  const bool batched = x.rank() == 5;
  const int o = batched ? 1 : 0;
  const std::int64_t batch = batched ? x.dim(0) : 1;
  ConvDims d{};
  d.channels = x.dim(o);
  d.t = x.dim(o + 1);
  d.h = x.dim(o + 2);
  d.w = x.dim(o + 3);
  if (weight.dim(1) != d.channels) {
    throw DimensionError("conv3d: channel axis " + std::to_string(d.channels) +
                         " does not match weight " + shape_string(weight.shape()));
  }
  if (bias.dim(0) != weight.dim(0)) throw DimensionError("conv3d: bias size mismatch");
  d.kt = weight.dim(2);
  d.kh = weight.dim(3);
  d.kw = weight.dim(4);
  d.st = stride[0];
  d.sh = stride[1];
  d.sw = stride[2];
  d.pt = pad[0];
  d.ph = pad[1];
  d.pw = pad[2];
  d.ot = conv_output_size(d.t, d.kt, d.st, d.pt, "time");
  d.oh = conv_output_size(d.h, d.kh, d.sh, d.ph, "height");
  d.ow = conv_output_size(d.w, d.kw, d.sw, d.pw, "width");
  Shape out_shape{weight.dim(0), d.ot, d.oh, d.ow};
  if (batched) out_shape.insert(out_shape.begin(), batch);
  return conv_core(x, weight, bias, batch, d, std::move(out_shape), "conv3d");
}

template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias,
              std::array<std::int64_t, 2> stride, std::array<std::int64_t, 2> pad) {
  if (x.rank() != 3 && x.rank() != 4) {
    throw DimensionError("conv2d: input must be C x H x W or batched, got " +
                         shape_string(x.shape()));
  }
  require_rank(weight, 4, "conv2d", "weight");
  require_rank(bias, 1, "conv2d", "bias");
  const bool batched = x.rank() == 4;
  const int o = batched ? 1 : 0;
  const std::int64_t batch = batched ? x.dim(0) : 1;
  ConvDims d{};
  d.channels = x.dim(o);
  d.t = 1;
  d.h = x.dim(o + 1);
  d.w = x.dim(o + 2);
  if (weight.dim(1) != d.channels) {
    throw DimensionError("conv2d: channel axis " + std::to_string(d.channels) +
                         " does not match weight " + shape_string(weight.shape()));
  }
  if (bias.dim(0) != weight.dim(0)) throw DimensionError("conv2d: bias size mismatch");
  d.kt = 1;
  d.kh = weight.dim(2);
  d.kw = weight.dim(3);
  d.st = 1;
  d.sh = stride[0];
  d.sw = stride[1];
  d.pt = 0;
  d.ph = pad[0];
  d.pw = pad[1];
  d.ot = 1;
  d.oh = conv_output_size(d.h, d.kh, d.sh, d.ph, "height");
  d.ow = conv_output_size(d.w, d.kw, d.sw, d.pw, "width");
  Shape out_shape{weight.dim(0), d.oh, d.ow};
  if (batched) out_shape.insert(out_shape.begin(), batch);
  return conv_core(x, weight, bias, batch, d, std::move(out_shape), "conv2d");
}

template <typename T>
Var<T> maxpool2d(const Var<T>& x, std::array<std::int64_t, 2> kernel,
                 std::array<std::int64_t, 2> stride) {
  if (x.rank() != 3 && x.rank() != 4) {
    throw DimensionError("maxpool2d: input must be C x H x W or batched, got " +
                         shape_string(x.shape()));
  }
  const int r = x.rank();
  const std::int64_t h = x.dim(r - 2), w = x.dim(r - 1);
  const std::int64_t planes = static_cast<std::int64_t>(x.size()) / (h * w);
  const std::int64_t oh = conv_output_size(h, kernel[0], stride[0], 0, "height");
  const std::int64_t ow = conv_output_size(w, kernel[1], stride[1], 0, "width");
  Shape out_shape = x.shape();
  out_shape[r - 2] = oh;
  out_shape[r - 1] = ow;
  auto v = x.values();
  Buffer<T> out(static_cast<std::size_t>(planes * oh * ow));
  std::vector<std::int64_t> argmax(out.size());
  for (std::int64_t p = 0; p < planes; ++p) {
    const T* plane = v.data() + p * h * w;
    for (std::int64_t i = 0; i < oh; ++i) {
      for (std::int64_t j = 0; j < ow; ++j) {
        std::int64_t best = (i * stride[0]) * w + j * stride[1];
        for (std::int64_t a = 0; a < kernel[0]; ++a) {
          for (std::int64_t b = 0; b < kernel[1]; ++b) {
            const std::int64_t idx = (i * stride[0] + a) * w + j * stride[1] + b;
            if (plane[idx] > plane[best]) best = idx;
          }
        }
        const std::int64_t o = (p * oh + i) * ow + j;
        out[o] = plane[best];
        argmax[o] = p * h * w + best;
      }
    }
  }
  const std::size_t xi = x.id();
  return x.tape().record(
      std::move(out_shape), std::move(out), {x},
      [xi, argmax = std::move(argmax)](Tape<T>& tape, std::size_t self) {
        auto g = tape.grad(self);
        auto gx = tape.grad_mut(xi);
        for (std::size_t o = 0; o < g.size(); ++o) gx[argmax[o]] += g[o];
      },
      "maxpool2d");
}

template <typename T>
Var<T> conv1d_replicate(const Var<T>& x, const Var<T>& weight, const Var<T>& bias) {
  require_rank(x, 3, "conv1d_replicate", "input");
  require_rank(weight, 3, "conv1d_replicate", "weight");
  require_rank(bias, 1, "conv1d_replicate", "bias");
  const std::int64_t batch = x.dim(0), steps = x.dim(1), channels = x.dim(2);
  const std::int64_t out_ch = weight.dim(0), taps = weight.dim(2);
  if (weight.dim(1) != channels) {
    throw DimensionError("conv1d_replicate: channel axis " + std::to_string(channels) +
                         " does not match weight " + shape_string(weight.shape()));
  }
  if (taps % 2 == 0) throw ConfigError("conv1d_replicate: kernel size must be odd");
  if (bias.dim(0) != out_ch) throw DimensionError("conv1d_replicate: bias size mismatch");
  const std::int64_t half = taps / 2;
  const std::int64_t rows = batch * steps;
  const std::int64_t patch = channels * taps;
  // cols[(b, t)][c * taps + k] = x[b, clamp(t + k - half), c]
  auto build_cols = [=](std::span<const T> xv) {
    Buffer<T> cols(static_cast<std::size_t>(rows * patch));
    for (std::int64_t b = 0; b < batch; ++b) {
      for (std::int64_t t = 0; t < steps; ++t) {
        T* row = cols.data() + (b * steps + t) * patch;
        for (std::int64_t k = 0; k < taps; ++k) {
          const std::int64_t src = std::clamp<std::int64_t>(t + k - half, 0, steps - 1);
          const T* in = xv.data() + (b * steps + src) * channels;
          for (std::int64_t c = 0; c < channels; ++c) row[c * taps + k] = in[c];
        }
      }
    }
    return cols;
  };
  Buffer<T> cols = build_cols(x.values());
  Buffer<T> out(static_cast<std::size_t>(rows * out_ch));
  MatMap<T> y(out.data(), rows, out_ch);
  y.noalias() = ConstMatMap<T>(cols.data(), rows, patch) *
                ConstMatMap<T>(weight.values().data(), out_ch, patch).transpose();
  y.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(
      bias.values().data(), out_ch);
  const std::size_t xi = x.id(), wi = weight.id(), bi = bias.id();
  return x.tape().record(
      Shape{batch, steps, out_ch}, std::move(out), {x, weight, bias},
      [=](Tape<T>& tape, std::size_t self) {
        ConstMatMap<T> g(tape.grad(self).data(), rows, out_ch);
        auto gw = tape.grad_mut(wi);
        if (!gw.empty()) {
          Buffer<T> cols = build_cols(tape.value(xi));
          MatMap<T>(gw.data(), out_ch, patch).noalias() +=
              g.transpose() * ConstMatMap<T>(cols.data(), rows, patch);
        }
        auto gb = tape.grad_mut(bi);
        if (!gb.empty()) {
          Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(gb.data(), out_ch) +=
              g.colwise().sum();
        }
        auto gx = tape.grad_mut(xi);
        if (!gx.empty()) {
          RowMat<T> gcols =
              g * ConstMatMap<T>(tape.value(wi).data(), out_ch, patch);
          for (std::int64_t b = 0; b < batch; ++b) {
            for (std::int64_t t = 0; t < steps; ++t) {
              for (std::int64_t k = 0; k < taps; ++k) {
                const std::int64_t src =
                    std::clamp<std::int64_t>(t + k - half, 0, steps - 1);
                T* dst = gx.data() + (b * steps + src) * channels;
                for (std::int64_t c = 0; c < channels; ++c) {
                  dst[c] += gcols(b * steps + t, c * taps + k);
                }
              }
            }
          }
        }
      },
      "conv1d_replicate");
}

template <typename T>
Var<T> softmax_cross_entropy(const Var<T>& logits, std::span<const int> targets) {
  require_rank(logits, 2, "softmax_cross_entropy", "logits");
  const std::int64_t batch = logits.dim(0), classes = logits.dim(1);
  if (batch < 1) throw DimensionError("softmax_cross_entropy: empty batch");
  if (static_cast<std::int64_t>(targets.size()) != batch) {
    throw DimensionError("softmax_cross_entropy: " + std::to_string(targets.size()) +
                         " targets for batch of " + std::to_string(batch));
  }
  auto v = logits.values();
  Buffer<T> probs(v.size());
  T loss(0);
  for (std::int64_t b = 0; b < batch; ++b) {
    const int target = targets[b];
    if (target < 0 || target >= classes) {
      throw IndexError("softmax_cross_entropy: target " + std::to_string(target) +
                       " outside [0, " + std::to_string(classes) + ")");
    }
    const T* row = v.data() + b * classes;
    const T peak = *std::max_element(row, row + classes);
    T denom(0);
    for (std::int64_t c = 0; c < classes; ++c) denom += std::exp(row[c] - peak);
    const T log_denom = std::log(denom);
    for (std::int64_t c = 0; c < classes; ++c) {
      probs[b * classes + c] = std::exp(row[c] - peak - log_denom);
    }
    loss -= row[target] - peak - log_denom;
  }
  loss /= static_cast<T>(batch);
  std::vector<int> labels(targets.begin(), targets.end());
  const std::size_t li = logits.id();
  return logits.tape().record(
      Shape{}, {loss}, {logits},
      [li, batch, classes, probs = std::move(probs), labels = std::move(labels)](
          Tape<T>& tape, std::size_t self) {
        const T g = tape.grad(self)[0] / static_cast<T>(batch);
        auto gl = tape.grad_mut(li);
        for (std::int64_t b = 0; b < batch; ++b) {
          for (std::int64_t c = 0; c < classes; ++c) {
            const T indicator = c == labels[b] ? T(1) : T(0);
            gl[b * classes + c] += g * (probs[b * classes + c] - indicator);
          }
        }
      },
      "softmax_cross_entropy");
}

#define ASD_INSTANTIATE_OPS(T)                                                    \
  template Var<T> add(const Var<T>&, const Var<T>&);                              \
  template Var<T> mul(const Var<T>&, const Var<T>&);                              \
  template Var<T> scale(const Var<T>&, T);                                        \
  template Var<T> square(const Var<T>&);                                          \
  template Var<T> relu(const Var<T>&);                                            \
  template Var<T> sigmoid(const Var<T>&);                                         \
  template Var<T> tanh(const Var<T>&);                                            \
  template Var<T> sum(const Var<T>&);                                             \
  template Var<T> mean(const Var<T>&);                                            \
  template Var<T> reshape(const Var<T>&, Shape);                                  \
  template Var<T> matmul(const Var<T>&, const Var<T>&);                           \
  template Var<T> linear(const Var<T>&, const Var<T>&, const Var<T>&);            \
  template Var<T> concat_features(const std::vector<Var<T>>&);                    \
  template Var<T> slice_features(const Var<T>&, std::int64_t, std::int64_t);      \
  template Var<T> select_step(const Var<T>&, std::int64_t);                       \
  template Var<T> mean_steps(const Var<T>&);                                      \
  template Var<T> conv3d(const Var<T>&, const Var<T>&, const Var<T>&,             \
                         std::array<std::int64_t, 3>, std::array<std::int64_t, 3>); \
  template Var<T> conv2d(const Var<T>&, const Var<T>&, const Var<T>&,             \
                         std::array<std::int64_t, 2>, std::array<std::int64_t, 2>); \
  template Var<T> maxpool2d(const Var<T>&, std::array<std::int64_t, 2>,           \
                            std::array<std::int64_t, 2>);                         \
  template Var<T> conv1d_replicate(const Var<T>&, const Var<T>&, const Var<T>&);  \
  template Var<T> softmax_cross_entropy(const Var<T>&, std::span<const int>);

ASD_INSTANTIATE_OPS(float)
ASD_INSTANTIATE_OPS(double)

#undef ASD_INSTANTIATE_OPS

}  // namespace asd
