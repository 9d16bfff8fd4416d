#pragma once

#include <array>
#include <vector>

#include "stdeep/nn/graph.hpp"
#include "stdeep/seed.hpp"

namespace stdeep::nn {

/// (time, height, width) triple used for kernels, strides and padding.
using Triple = std::array<int, 3>;

int conv_out_size(int in, int kernel, int stride, int pad);

Var add(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
/// alpha * a + beta, elementwise.
Var affine(const Var& a, double alpha, double beta = 0.0);
Var relu(const Var& a);
Var sigmoid(const Var& a);
Var tanh(const Var& a);
Var sum(const Var& a);

/// Multiplies every element of channel c (leading axis) by s[c].
Var channel_scale(const Var& x, const Var& s);
/**
 * Group normalisation of a [C, ...] value: channels are split into `groups`
 * contiguous groups, each standardised over its channels and all trailing
 * axes (or per index of axis 1 when per_frame), then scaled and shifted
 * per channel by gamma, beta ([C] each).
 */
Var group_norm(const Var& x, const Var& gamma, const Var& beta, int groups, bool per_frame = false, double eps = 1e-5);

/**
 * Single-sample 3D convolution by vol2col + GEMM.
 * x: [C, T, H, W], weight: [O, C, kt, kh, kw], bias: [O] or null.
 * Returns [O, T', H', W'].
 */
Var conv3d(const Var& x, const Var& weight, const Var& bias, Triple stride, Triple pad);

/// Max pooling over [C, T, H, W]; padded cells never win.
Var max_pool3d(const Var& x, Triple kernel, Triple stride, Triple pad);

/// [C, ...] -> [C], mean over all trailing axes.
Var global_avg_pool(const Var& x);

/// [C, T, H, W] -> [T, C], mean over H and W (row t is frame t's descriptor).
Var spatial_avg_pool(const Var& x);

/// weight: [out, in], x: [in], bias: [out] or null -> [out].
Var linear(const Var& x, const Var& weight, const Var& bias);

/// Concatenation along the leading axis; trailing shapes must agree.
Var concat(const std::vector<Var>& parts);

/// Rows [start, start + length) of the leading axis.
Var slice(const Var& x, int start, int length);

/// Elementwise mean of equally shaped values.
Var mean(const std::vector<Var>& parts);

/// Frame t of a [C, T, H, W] clip as a [C, 1, H, W] value.
Var frame_at(const Var& clip, int t);

/// Inverted dropout; identity when p == 0.
Var dropout(const Var& x, double p, Rng& rng);

/**
 * Binary cross-entropy on one logit. The loss value uses the probability
 * clamped to [1e-7, 1 - 1e-7]; the gradient is sigmoid(z) - y everywhere.
 */
Var bce_with_logits(const Var& logit, double label);

}  // namespace stdeep::nn
