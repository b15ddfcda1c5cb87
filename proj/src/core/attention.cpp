// Copyright 2026 The idroute Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "core/error.hpp"
#include "core/ops.hpp"

namespace idr {

AttentionMask AttentionMask::causal(std::vector<int> frames) {
  AttentionMask m;
  m.kind = Kind::kCausalByFrame;
  m.key_frames = frames;
  m.query_frames = std::move(frames);
  return m;
}

AttentionMask AttentionMask::causal(std::vector<int> query_frames, std::vector<int> key_frames) {
  AttentionMask m;
  m.kind = Kind::kCausalByFrame;
  m.query_frames = std::move(query_frames);
  m.key_frames = std::move(key_frames);
  return m;
}

namespace {

// Row-stochastic attention probabilities; blocked entries stay exactly 0 and
// are never touched by the value accumulation.
struct Probabilities {
  std::vector<double> p;  // lq x lk
  std::vector<char> allowed;
};

Probabilities attention_probabilities(std::span<const double> q, std::span<const double> k, std::size_t lq,
                                      std::size_t lk, std::size_t d, const AttentionMask& mask) {
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  Probabilities out{std::vector<double>(lq * lk, 0.0), std::vector<char>(lq * lk, 0)};
  for (std::size_t i = 0; i < lq; ++i) {
    double mx = -INFINITY;
    bool any = false;
    for (std::size_t j = 0; j < lk; ++j) {
      if (mask.blocked(i, j)) continue;
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) s += q[i * d + c] * k[j * d + c];
      s *= inv_sqrt_d;
      out.p[i * lk + j] = s;
      out.allowed[i * lk + j] = 1;
      mx = any ? std::max(mx, s) : s;
      any = true;
    }
    if (!any) {
      throw Error(ErrorCode::kAllBlocked, "query " + std::to_string(i) + " has no visible key");
    }
    double total = 0.0;
    for (std::size_t j = 0; j < lk; ++j) {
      if (!out.allowed[i * lk + j]) continue;
      const double e = std::exp(out.p[i * lk + j] - mx);
      out.p[i * lk + j] = e;
      total += e;
    }
    for (std::size_t j = 0; j < lk; ++j) {
      if (out.allowed[i * lk + j]) out.p[i * lk + j] /= total;
    }
  }
  return out;
}

}  // namespace

Tensor scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v, const AttentionMask& mask) {
  if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2) {
    throw Error(ErrorCode::kRank, "attention expects matrices");
  }
  const std::size_t lq = q.dim(0), d = q.dim(1), lk = k.dim(0), dv = v.dim(1);
  if (k.dim(1) != d || v.dim(0) != lk) {
    throw Error(ErrorCode::kDimension, "attention shapes q" + shape_string(q.shape()) + " k" +
                                           shape_string(k.shape()) + " v" + shape_string(v.shape()));
  }
  if (mask.kind == AttentionMask::Kind::kCausalByFrame &&
      (mask.query_frames.size() != lq || mask.key_frames.size() != lk)) {
    throw Error(ErrorCode::kDimension, "causal mask frame map does not cover all tokens");
  }

  // Probabilities are shared between forward and backward of this node.
  auto probs = std::make_shared<Probabilities>();
  return make_op(
      "attention", {q, k, v}, {lq, dv},
      [=](std::span<const Tensor> in) {
        *probs = attention_probabilities(in[0].data(), in[1].data(), lq, lk, d, mask);
        auto val = in[2].data();
        std::vector<double> out(lq * dv, 0.0);
        for (std::size_t i = 0; i < lq; ++i) {
          for (std::size_t j = 0; j < lk; ++j) {
            if (!probs->allowed[i * lk + j]) continue;
            const double p = probs->p[i * lk + j];
            for (std::size_t c = 0; c < dv; ++c) out[i * dv + c] += p * val[j * dv + c];
          }
        }
        return out;
      },
      [=](const BackwardContext& ctx) {
        auto qd = ctx.inputs[0].data();
        auto kd = ctx.inputs[1].data();
        auto vd = ctx.inputs[2].data();
        const auto& go = ctx.grad_output;
        const auto& p = probs->p;
        const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
        std::vector<double> ds(lk);
        for (std::size_t i = 0; i < lq; ++i) {
          // dP_ij = go_i . v_j ; dS_ij = P_ij (dP_ij - sum_j P_ij dP_ij)
          double dot = 0.0;
          for (std::size_t j = 0; j < lk; ++j) {
            ds[j] = 0.0;
            if (!probs->allowed[i * lk + j]) continue;
            double dp = 0.0;
            for (std::size_t c = 0; c < dv; ++c) dp += go[i * dv + c] * vd[j * dv + c];
            ds[j] = dp;
            dot += p[i * lk + j] * dp;
          }
          for (std::size_t j = 0; j < lk; ++j) {
            if (!probs->allowed[i * lk + j]) continue;
            const double pij = p[i * lk + j];
            const double s = pij * (ds[j] - dot) * inv_sqrt_d;
            if (ctx.needs(0)) {
              auto gq = ctx.grad_inputs[0];
              for (std::size_t c = 0; c < d; ++c) gq[i * d + c] += s * kd[j * d + c];
            }
            if (ctx.needs(1)) {
              auto gk = ctx.grad_inputs[1];
              for (std::size_t c = 0; c < d; ++c) gk[j * d + c] += s * qd[i * d + c];
            }
            if (ctx.needs(2)) {
              auto gv = ctx.grad_inputs[2];
              for (std::size_t c = 0; c < dv; ++c) gv[j * dv + c] += pij * go[i * dv + c];
            }
          }
        }
      });
}

}  // namespace idr
