#pragma once

#include <string>
#include <vector>

#include "moonshine/nn/ops.hpp"
#include "moonshine/nn/params.hpp"

namespace moonshine::nn {

// Building blocks as (declare, apply) pairs over a ParamStore. Parameter names are
// "<prefix>.<part>" so model files stay readable.

inline constexpr int kNormGroups = 4;

template <typename Scalar>
void declare_dense(ParamStore<Scalar>& ps, const std::string& name, int in, int out, Rng& rng, double gain = 1.0);
template <typename Scalar>
Var<Scalar> apply_dense(const ParamStore<Scalar>& ps, const std::string& name, const Var<Scalar>& x);

template <typename Scalar>
void declare_conv3(ParamStore<Scalar>& ps, const std::string& name, int in, int out, Rng& rng, double gain = 1.0);
template <typename Scalar>
Var<Scalar> apply_conv3(const ParamStore<Scalar>& ps, const std::string& name, const Var<Scalar>& x);

template <typename Scalar>
void declare_group_norm(ParamStore<Scalar>& ps, const std::string& name, int channels);
template <typename Scalar>
Var<Scalar> apply_group_norm(const ParamStore<Scalar>& ps, const std::string& name, const Var<Scalar>& x);

// GN -> SiLU -> conv3 [+ projected condition] -> GN -> SiLU -> conv3, plus a 1x1 skip when widths differ.
// cond_dim = 0 declares an unconditioned block.
template <typename Scalar>
void declare_resblock(ParamStore<Scalar>& ps, const std::string& name, int in, int out, int cond_dim, Rng& rng);
template <typename Scalar>
Var<Scalar> apply_resblock(const ParamStore<Scalar>& ps, const std::string& name, const Var<Scalar>& x,
                           const Var<Scalar>& cond);

// Residual cross-attention: queries from GN(x), keys/values from context tokens (ctx_dim x batch*tokens).
template <typename Scalar>
void declare_cross_attention(ParamStore<Scalar>& ps, const std::string& name, int channels, int ctx_dim, Rng& rng);
template <typename Scalar>
Var<Scalar> apply_cross_attention(const ParamStore<Scalar>& ps, const std::string& name, const Var<Scalar>& x,
                                  const Var<Scalar>& context, int tokens);

// Sinusoidal features -> dense -> SiLU -> dense.
template <typename Scalar>
void declare_time_mlp(ParamStore<Scalar>& ps, const std::string& name, int dim, Rng& rng);
template <typename Scalar>
Var<Scalar> apply_time_mlp(const ParamStore<Scalar>& ps, const std::string& name, const std::vector<int>& timesteps);

}  // namespace moonshine::nn
