#pragma once

#include <vector>

#include "moonshine/nn/tensor.hpp"

namespace moonshine::nn {

// None of these mutate their inputs. Shape mismatches throw UsageError.

// W (out x in) * x + b (out x 1, may be null). Also serves as a 1x1 convolution.
template <typename Scalar>
Var<Scalar> dense(const Var<Scalar>& x, const Var<Scalar>& w, const Var<Scalar>& b);

// 3x3 convolution, stride 1, zero padding 1. w is (out x in*9), column = ci*9 + ky*3 + kx.
template <typename Scalar>
Var<Scalar> conv3x3(const Var<Scalar>& x, const Var<Scalar>& w, const Var<Scalar>& b);

// Per-sample normalization over (channels in group) x spatial; gamma/beta are (C x 1).
template <typename Scalar>
Var<Scalar> group_norm(const Var<Scalar>& x, int groups, const Var<Scalar>& gamma, const Var<Scalar>& beta,
                       Scalar eps = Scalar(1e-5));

template <typename Scalar>
Var<Scalar> silu(const Var<Scalar>& x);

template <typename Scalar>
Var<Scalar> upsample_nearest2(const Var<Scalar>& x);

template <typename Scalar>
Var<Scalar> avg_pool2(const Var<Scalar>& x);

template <typename Scalar>
Var<Scalar> add(const Var<Scalar>& a, const Var<Scalar>& b);

// x (C x batch*HW) plus v (C x batch), broadcast over each sample's spatial positions.
template <typename Scalar>
Var<Scalar> add_per_sample(const Var<Scalar>& x, const Var<Scalar>& v);

template <typename Scalar>
Var<Scalar> concat_channels(const Var<Scalar>& a, const Var<Scalar>& b);

// (c*h*w x batch) -> (c x batch*h*w), feature index = ch*h*w + y*w + x.
template <typename Scalar>
Var<Scalar> unflatten(const Var<Scalar>& x, int channels, int height, int width);

// Inverse of unflatten.
template <typename Scalar>
Var<Scalar> flatten(const Var<Scalar>& x);

// Softmax down each column.
template <typename Scalar>
Var<Scalar> softmax_channels(const Var<Scalar>& x);

// Mean of squared differences over all elements; target is a constant.
template <typename Scalar>
Var<Scalar> mse_loss(const Var<Scalar>& pred, const Mat<Scalar>& target);

// Mean over columns of -sum target * log_softmax(logits).
template <typename Scalar>
Var<Scalar> cross_entropy_channels(const Var<Scalar>& logits, const Mat<Scalar>& target);

// Scaled dot-product attention per sample. q: d x batch*HW; k, v: d x batch*tokens.
template <typename Scalar>
Var<Scalar> attention(const Var<Scalar>& q, const Var<Scalar>& k, const Var<Scalar>& v, int tokens);

template <typename Scalar>
Var<Scalar> l2_normalize_columns(const Var<Scalar>& x);

// a^T b.
template <typename Scalar>
Var<Scalar> matmul_tn(const Var<Scalar>& a, const Var<Scalar>& b);

// exp(s) * x with s a 1x1 variable.
template <typename Scalar>
Var<Scalar> scale_by_exp(const Var<Scalar>& x, const Var<Scalar>& s);

// Mean of row-wise and column-wise cross-entropy of a square logit matrix against the diagonal.
template <typename Scalar>
Var<Scalar> symmetric_info_nce(const Var<Scalar>& logits);

// Transformer-style sinusoidal features, one column per timestep (dim must be even).
template <typename Scalar>
Mat<Scalar> sinusoidal_embedding(const std::vector<int>& timesteps, int dim);

}  // namespace moonshine::nn
