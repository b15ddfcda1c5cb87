// Copyright 2026 The idroute Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "core/error.hpp"

namespace idr {

namespace {

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw Error(ErrorCode::kRank, std::string(op) + " expects a matrix, got " + shape_string(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw Error(ErrorCode::kDimension,
                std::string(op) + ": shapes " + shape_string(a.shape()) + " and " + shape_string(b.shape()));
  }
}

// Elementwise binary op with derivatives d/da = da(a, b), d/db = db(a, b).
template <typename F, typename DA, typename DB>
Tensor binary(const char* name, const Tensor& a, const Tensor& b, F f, DA da, DB db) {
  require_same_shape(a, b, name);
  return make_op(
      name, {a, b}, a.shape(),
      [f](std::span<const Tensor> in) {
        auto x = in[0].data();
        auto y = in[1].data();
        std::vector<double> out(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i], y[i]);
        return out;
      },
      [da, db](const BackwardContext& ctx) {
        auto x = ctx.inputs[0].data();
        auto y = ctx.inputs[1].data();
        const auto& g = ctx.grad_output;
        if (ctx.needs(0)) {
          auto gx = ctx.grad_inputs[0];
          for (std::size_t i = 0; i < x.size(); ++i) gx[i] += g[i] * da(x[i], y[i]);
        }
        if (ctx.needs(1)) {
          auto gy = ctx.grad_inputs[1];
          for (std::size_t i = 0; i < x.size(); ++i) gy[i] += g[i] * db(x[i], y[i]);
        }
      });
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  if (a.dim(1) != b.dim(0)) {
    throw Error(ErrorCode::kDimension,
                "matmul inner dimensions disagree: " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  return make_op(
      "matmul", {a, b}, {m, n},
      [m, k, n](std::span<const Tensor> in) {
        auto x = in[0].data();
        auto y = in[1].data();
        std::vector<double> out(m * n, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
          double* o = out.data() + i * n;
          for (std::size_t p = 0; p < k; ++p) {
            const double xv = x[i * k + p];
            const double* yr = y.data() + p * n;
            for (std::size_t j = 0; j < n; ++j) o[j] += xv * yr[j];
          }
        }
        return out;
      },
      [m, k, n](const BackwardContext& ctx) {
        auto x = ctx.inputs[0].data();
        auto y = ctx.inputs[1].data();
        const auto& g = ctx.grad_output;
        if (ctx.needs(0)) {
          auto gx = ctx.grad_inputs[0];
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t p = 0; p < k; ++p) {
              double acc = 0.0;
              for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * y[p * n + j];
              gx[i * k + p] += acc;
            }
          }
        }
        if (ctx.needs(1)) {
          auto gy = ctx.grad_inputs[1];
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t p = 0; p < k; ++p) {
              const double xv = x[i * k + p];
              for (std::size_t j = 0; j < n; ++j) gy[p * n + j] += xv * g[i * n + j];
            }
          }
        }
      });
}

Tensor transpose(const Tensor& a) {
  require_rank2(a, "transpose");
  const std::size_t r = a.dim(0), c = a.dim(1);
  return make_op(
      "transpose", {a}, {c, r},
      [r, c](std::span<const Tensor> in) {
        auto x = in[0].data();
        std::vector<double> out(r * c);
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < c; ++j) out[j * r + i] = x[i * c + j];
        return out;
      },
      [r, c](const BackwardContext& ctx) {
        auto gx = ctx.grad_inputs[0];
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += ctx.grad_output[j * r + i];
      });
}

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Tensor scale(const Tensor& a, double s) {
  return make_op(
      "scale", {a}, a.shape(),
      [s](std::span<const Tensor> in) {
        auto x = in[0].data();
        std::vector<double> out(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = s * x[i];
        return out;
      },
      [s](const BackwardContext& ctx) {
        auto gx = ctx.grad_inputs[0];
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += s * ctx.grad_output[i];
      });
}

Tensor add_scaled(const Tensor& x, const Tensor& y, double s) {
  require_same_shape(x, y, "add_scaled");
  if (!std::isfinite(s)) throw Error(ErrorCode::kParameter, "add_scaled: non-finite scale");
  return make_op(
      "add_scaled", {x, y}, x.shape(),
      [s](std::span<const Tensor> in) {
        auto a = in[0].data();
        std::vector<double> out(a.begin(), a.end());
        if (s != 0.0) {
          auto b = in[1].data();
          for (std::size_t i = 0; i < out.size(); ++i) out[i] += s * b[i];
        }
        return out;
      },
      [s](const BackwardContext& ctx) {
        const auto& g = ctx.grad_output;
        if (ctx.needs(0)) {
          auto ga = ctx.grad_inputs[0];
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (ctx.needs(1)) {
          auto gb = ctx.grad_inputs[1];
          for (std::size_t i = 0; i < g.size(); ++i) gb[i] += s * g[i];
        }
      });
}

Tensor gelu(const Tensor& x) {
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  return make_op(
      "gelu", {x}, x.shape(),
      [](std::span<const Tensor> in) {
        auto v = in[0].data();
        std::vector<double> out(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) out[i] = 0.5 * v[i] * (1.0 + std::erf(v[i] * kInvSqrt2));
        return out;
      },
      [](const BackwardContext& ctx) {
        auto v = ctx.inputs[0].data();
        auto gx = ctx.grad_inputs[0];
        for (std::size_t i = 0; i < v.size(); ++i) {
          const double cdf = 0.5 * (1.0 + std::erf(v[i] * kInvSqrt2));
          const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v[i] * v[i]);
          gx[i] += ctx.grad_output[i] * (cdf + v[i] * pdf);
        }
      });
}

Tensor add_row(const Tensor& x, const Tensor& r) {
  require_rank2(x, "add_row");
  const std::size_t rows = x.dim(0), cols = x.dim(1);
  if (r.numel() != cols) {
    throw Error(ErrorCode::kDimension,
                "add_row: row " + shape_string(r.shape()) + " does not match " + shape_string(x.shape()));
  }
  return make_op(
      "add_row", {x, r}, x.shape(),
      [rows, cols](std::span<const Tensor> in) {
        auto a = in[0].data();
        auto b = in[1].data();
        std::vector<double> out(rows * cols);
        for (std::size_t i = 0; i < rows; ++i)
          for (std::size_t j = 0; j < cols; ++j) out[i * cols + j] = a[i * cols + j] + b[j];
        return out;
      },
      [rows, cols](const BackwardContext& ctx) {
        const auto& g = ctx.grad_output;
        if (ctx.needs(0)) {
          auto ga = ctx.grad_inputs[0];
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (ctx.needs(1)) {
          auto gb = ctx.grad_inputs[1];
          for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) gb[j] += g[i * cols + j];
        }
      });
}

Tensor mul_rows(const Tensor& x, const Tensor& w) {
  require_rank2(x, "mul_rows");
  const std::size_t rows = x.dim(0), cols = x.dim(1);
  if (w.numel() != rows) {
    throw Error(ErrorCode::kDimension,
                "mul_rows: weights " + shape_string(w.shape()) + " do not match " + shape_string(x.shape()));
  }
  return make_op(
      "mul_rows", {x, w}, x.shape(),
      [rows, cols](std::span<const Tensor> in) {
        auto a = in[0].data();
        auto s = in[1].data();
        std::vector<double> out(rows * cols);
        for (std::size_t i = 0; i < rows; ++i)
          for (std::size_t j = 0; j < cols; ++j) out[i * cols + j] = s[i] * a[i * cols + j];
        return out;
      },
      [rows, cols](const BackwardContext& ctx) {
        auto a = ctx.inputs[0].data();
        auto s = ctx.inputs[1].data();
        const auto& g = ctx.grad_output;
        if (ctx.needs(0)) {
          auto ga = ctx.grad_inputs[0];
          for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) ga[i * cols + j] += s[i] * g[i * cols + j];
        }
        if (ctx.needs(1)) {
          auto gs = ctx.grad_inputs[1];
          for (std::size_t i = 0; i < rows; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < cols; ++j) acc += a[i * cols + j] * g[i * cols + j];
            gs[i] += acc;
          }
        }
      });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw Error(ErrorCode::kDimension,
                "reshape " + shape_string(x.shape()) + " to " + shape_string(shape) + " changes element count");
  }
  return make_op(
      "reshape", {x}, std::move(shape),
      [](std::span<const Tensor> in) {
        auto v = in[0].data();
        return std::vector<double>(v.begin(), v.end());
      },
      [](const BackwardContext& ctx) {
        auto gx = ctx.grad_inputs[0];
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += ctx.grad_output[i];
      });
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t count) {
  require_rank2(x, "slice_rows");
  const std::size_t cols = x.dim(1);
  if (count == 0 || begin + count > x.dim(0)) {
    throw Error(ErrorCode::kDimension, "slice_rows [" + std::to_string(begin) + ", +" + std::to_string(count) +
                                           ") out of range for " + shape_string(x.shape()));
  }
  return make_op(
      "slice_rows", {x}, {count, cols},
      [begin, count, cols](std::span<const Tensor> in) {
        auto v = in[0].data().subspan(begin * cols, count * cols);
        return std::vector<double>(v.begin(), v.end());
      },
      [begin, cols](const BackwardContext& ctx) {
        auto gx = ctx.grad_inputs[0].subspan(begin * cols, ctx.grad_output.size());
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += ctx.grad_output[i];
      });
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count) {
  require_rank2(x, "slice_cols");
  const std::size_t rows = x.dim(0), cols = x.dim(1);
  if (count == 0 || begin + count > cols) {
    throw Error(ErrorCode::kDimension, "slice_cols [" + std::to_string(begin) + ", +" + std::to_string(count) +
                                           ") out of range for " + shape_string(x.shape()));
  }
  return make_op(
      "slice_cols", {x}, {rows, count},
      [rows, cols, begin, count](std::span<const Tensor> in) {
        auto v = in[0].data();
        std::vector<double> out(rows * count);
        for (std::size_t i = 0; i < rows; ++i)
          for (std::size_t j = 0; j < count; ++j) out[i * count + j] = v[i * cols + begin + j];
        return out;
      },
      [rows, cols, begin, count](const BackwardContext& ctx) {
        auto gx = ctx.grad_inputs[0];
        for (std::size_t i = 0; i < rows; ++i)
          for (std::size_t j = 0; j < count; ++j) gx[i * cols + begin + j] += ctx.grad_output[i * count + j];
      });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw Error(ErrorCode::kArity, "concat_rows of nothing");
  const std::size_t cols = parts.front().dim(1);
  std::size_t rows = 0;
  for (const Tensor& p : parts) {
    require_rank2(p, "concat_rows");
    if (p.dim(1) != cols) {
      throw Error(ErrorCode::kDimension, "concat_rows: column mismatch " + shape_string(p.shape()));
    }
    rows += p.dim(0);
  }
  return make_op(
      "concat_rows", parts, {rows, cols},
      [rows, cols](std::span<const Tensor> in) {
        std::vector<double> out;
        out.reserve(rows * cols);
        for (const Tensor& p : in) out.insert(out.end(), p.data().begin(), p.data().end());
        return out;
      },
      [](const BackwardContext& ctx) {
        std::size_t offset = 0;
        for (std::size_t i = 0; i < ctx.inputs.size(); ++i) {
          const std::size_t n = ctx.inputs[i].numel();
          if (ctx.needs(i)) {
            auto gi = ctx.grad_inputs[i];
            for (std::size_t j = 0; j < n; ++j) gi[j] += ctx.grad_output[offset + j];
          }
          offset += n;
        }
      });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw Error(ErrorCode::kArity, "concat_cols of nothing");
  const std::size_t rows = parts.front().dim(0);
  std::size_t cols = 0;
  for (const Tensor& p : parts) {
    require_rank2(p, "concat_cols");
    if (p.dim(0) != rows) {
      throw Error(ErrorCode::kDimension, "concat_cols: row mismatch " + shape_string(p.shape()));
    }
    cols += p.dim(1);
  }
  return make_op(
      "concat_cols", parts, {rows, cols},
      [rows, cols](std::span<const Tensor> in) {
        std::vector<double> out(rows * cols);
        std::size_t offset = 0;
        for (const Tensor& p : in) {
          const std::size_t c = p.dim(1);
          auto v = p.data();
          for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < c; ++j) out[i * cols + offset + j] = v[i * c + j];
          offset += c;
        }
        return out;
      },
      [rows, cols](const BackwardContext& ctx) {
        std::size_t offset = 0;
        for (std::size_t k = 0; k < ctx.inputs.size(); ++k) {
          const std::size_t c = ctx.inputs[k].dim(1);
          if (ctx.needs(k)) {
            auto gk = ctx.grad_inputs[k];
            for (std::size_t i = 0; i < rows; ++i)
              for (std::size_t j = 0; j < c; ++j) gk[i * c + j] += ctx.grad_output[i * cols + offset + j];
          }
          offset += c;
        }
      });
}

Tensor row(const Tensor& x, std::size_t i) { return reshape(slice_rows(x, i, 1), {x.dim(1)}); }

Tensor sum(const Tensor& x) {
  return make_op(
      "sum", {x}, {1},
      [](std::span<const Tensor> in) {
        double acc = 0.0;
        for (double v : in[0].data()) acc += v;
        return std::vector<double>{acc};
      },
      [](const BackwardContext& ctx) {
        for (double& g : ctx.grad_inputs[0]) g += ctx.grad_output[0];
      });
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.numel())); }

Tensor mse(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mse");
  const double inv_n = 1.0 / static_cast<double>(a.numel());
  return make_op(
      "mse", {a, b}, {1},
      [inv_n](std::span<const Tensor> in) {
        auto x = in[0].data();
        auto y = in[1].data();
        double acc = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
          const double d = x[i] - y[i];
          acc += d * d;
        }
        return std::vector<double>{acc * inv_n};
      },
      [inv_n](const BackwardContext& ctx) {
        auto x = ctx.inputs[0].data();
        auto y = ctx.inputs[1].data();
        const double g = ctx.grad_output[0] * 2.0 * inv_n;
        if (ctx.needs(0)) {
          auto gx = ctx.grad_inputs[0];
          for (std::size_t i = 0; i < x.size(); ++i) gx[i] += g * (x[i] - y[i]);
        }
        if (ctx.needs(1)) {
          auto gy = ctx.grad_inputs[1];
          for (std::size_t i = 0; i < x.size(); ++i) gy[i] -= g * (x[i] - y[i]);
        }
      });
}

Tensor softmax(const Tensor& x, std::size_t axis) {
  const Shape& s = x.shape();
  if (axis >= s.size()) {
    throw Error(ErrorCode::kDimension, "softmax axis " + std::to_string(axis) + " invalid for " + shape_string(s));
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  const std::size_t len = s[axis];
  return make_op(
      "softmax", {x}, s,
      [outer, inner, len](std::span<const Tensor> in) {
        auto v = in[0].data();
        std::vector<double> out(v.size());
        for (std::size_t o = 0; o < outer; ++o) {
          for (std::size_t q = 0; q < inner; ++q) {
            const std::size_t base = o * len * inner + q;
            double mx = v[base];
            for (std::size_t a = 1; a < len; ++a) mx = std::max(mx, v[base + a * inner]);
            double total = 0.0;
            for (std::size_t a = 0; a < len; ++a) {
              const double e = std::exp(v[base + a * inner] - mx);
              out[base + a * inner] = e;
              total += e;
            }
            for (std::size_t a = 0; a < len; ++a) out[base + a * inner] /= total;
          }
        }
        return out;
      },
      [outer, inner, len](const BackwardContext& ctx) {
        const auto& y = ctx.output;
        const auto& g = ctx.grad_output;
        auto gx = ctx.grad_inputs[0];
        for (std::size_t o = 0; o < outer; ++o) {
          for (std::size_t q = 0; q < inner; ++q) {
            const std::size_t base = o * len * inner + q;
            double dot = 0.0;
            for (std::size_t a = 0; a < len; ++a) dot += g[base + a * inner] * y[base + a * inner];
            for (std::size_t a = 0; a < len; ++a) {
              const std::size_t idx = base + a * inner;
              gx[idx] += y[idx] * (g[idx] - dot);
            }
          }
        }
      });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  require_rank2(x, "layer_norm");
  const std::size_t rows = x.dim(0), d = x.dim(1);
  if (d < 2) throw Error(ErrorCode::kDegenerate, "layer_norm needs at least 2 features per row");
  if (gain.numel() != d || bias.numel() != d) {
    throw Error(ErrorCode::kDimension, "layer_norm gain/bias " + shape_string(gain.shape()) + "/" +
                                           shape_string(bias.shape()) + " for rows of width " + std::to_string(d));
  }
  if (!(eps > 0.0)) throw Error(ErrorCode::kParameter, "layer_norm eps must be positive");
  return make_op(
      "layer_norm", {x, gain, bias}, x.shape(),
      [rows, d, eps](std::span<const Tensor> in) {
        auto v = in[0].data();
        auto g = in[1].data();
        auto b = in[2].data();
        std::vector<double> out(rows * d);
        for (std::size_t i = 0; i < rows; ++i) {
          const double* r = v.data() + i * d;
          double mu = 0.0;
          for (std::size_t j = 0; j < d; ++j) mu += r[j];
          mu /= static_cast<double>(d);
          double var = 0.0;
          for (std::size_t j = 0; j < d; ++j) var += (r[j] - mu) * (r[j] - mu);
          var /= static_cast<double>(d);
          const double inv = 1.0 / std::sqrt(var + eps);
          for (std::size_t j = 0; j < d; ++j) out[i * d + j] = (r[j] - mu) * inv * g[j] + b[j];
        }
        return out;
      },
      [rows, d, eps](const BackwardContext& ctx) {
        auto v = ctx.inputs[0].data();
        auto g = ctx.inputs[1].data();
        const auto& go = ctx.grad_output;
        const double dd = static_cast<double>(d);
        std::vector<double> xhat(d), gxhat(d);
        for (std::size_t i = 0; i < rows; ++i) {
          const double* r = v.data() + i * d;
          double mu = 0.0;
          for (std::size_t j = 0; j < d; ++j) mu += r[j];
          mu /= dd;
          double var = 0.0;
          for (std::size_t j = 0; j < d; ++j) var += (r[j] - mu) * (r[j] - mu);
          var /= dd;
          const double inv = 1.0 / std::sqrt(var + eps);
          double mean_g = 0.0, mean_gx = 0.0;
          for (std::size_t j = 0; j < d; ++j) {
            xhat[j] = (r[j] - mu) * inv;
            gxhat[j] = go[i * d + j] * g[j];
            mean_g += gxhat[j];
            mean_gx += gxhat[j] * xhat[j];
          }
          mean_g /= dd;
          mean_gx /= dd;
          if (ctx.needs(0)) {
            auto gx = ctx.grad_inputs[0];
            for (std::size_t j = 0; j < d; ++j) gx[i * d + j] += inv * (gxhat[j] - mean_g - xhat[j] * mean_gx);
          }
          if (ctx.needs(1)) {
            auto gg = ctx.grad_inputs[1];
            for (std::size_t j = 0; j < d; ++j) gg[j] += go[i * d + j] * xhat[j];
          }
          if (ctx.needs(2)) {
            auto gb = ctx.grad_inputs[2];
            for (std::size_t j = 0; j < d; ++j) gb[j] += go[i * d + j];
          }
        }
      });
}

Tensor rope_apply(const Tensor& x, std::span<const int> positions, double base) {
  require_rank2(x, "rope_apply");
  const std::size_t rows = x.dim(0), d = x.dim(1);
  if (d % 2 != 0) throw Error(ErrorCode::kChannelParity, "rope_apply needs an even channel count, got " + std::to_string(d));
  if (positions.size() != rows) {
    throw Error(ErrorCode::kDimension, "rope_apply: " + std::to_string(positions.size()) + " positions for " +
                                           std::to_string(rows) + " tokens");
  }
  std::vector<double> cos_t(rows * d / 2), sin_t(rows * d / 2);
  for (std::size_t i = 0; i < rows; ++i) {
    if (positions[i] < 0) throw Error(ErrorCode::kParameter, "rope_apply: negative position");
    for (std::size_t p = 0; p < d / 2; ++p) {
      const double theta = std::pow(base, -2.0 * static_cast<double>(p) / static_cast<double>(d));
      const double angle = static_cast<double>(positions[i]) * theta;
      cos_t[i * d / 2 + p] = std::cos(angle);
      sin_t[i * d / 2 + p] = std::sin(angle);
    }
  }
  return make_op(
      "rope_apply", {x}, x.shape(),
      [rows, d, cos_t, sin_t](std::span<const Tensor> in) {
        auto v = in[0].data();
        std::vector<double> out(rows * d);
        for (std::size_t i = 0; i < rows; ++i) {
          for (std::size_t p = 0; p < d / 2; ++p) {
            const double c = cos_t[i * d / 2 + p], s = sin_t[i * d / 2 + p];
            const double a = v[i * d + 2 * p], b = v[i * d + 2 * p + 1];
            out[i * d + 2 * p] = a * c - b * s;
            out[i * d + 2 * p + 1] = a * s + b * c;
          }
        }
        return out;
      },
      [rows, d, cos_t, sin_t](const BackwardContext& ctx) {
        auto gx = ctx.grad_inputs[0];
        const auto& g = ctx.grad_output;
        for (std::size_t i = 0; i < rows; ++i) {
          for (std::size_t p = 0; p < d / 2; ++p) {
            const double c = cos_t[i * d / 2 + p], s = sin_t[i * d / 2 + p];
            const double ga = g[i * d + 2 * p], gb = g[i * d + 2 * p + 1];
            gx[i * d + 2 * p] += ga * c + gb * s;
            gx[i * d + 2 * p + 1] += -ga * s + gb * c;
          }
        }
      });
}

}  // namespace idr
