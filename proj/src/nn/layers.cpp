#include "moonshine/nn/layers.hpp"

namespace moonshine::nn {

template <typename Scalar>
void declare_dense(ParamStore<Scalar>& ps, const std::string& name, int in, int out, Rng& rng, double gain) {
  ps.add(name + ".weight", uniform_init<Scalar>(out, in, in, gain, rng));
  ps.add(name + ".bias", Mat<Scalar>::Zero(out, 1));
}

template <typename Scalar>
Var<Scalar> apply_dense(const ParamStore<Scalar>& ps, const std::string& name, const Var<Scalar>& x) {
  return dense<Scalar>(x, ps.get(name + ".weight"), ps.get(name + ".bias"));
}

template <typename Scalar>
void declare_conv3(ParamStore<Scalar>& ps, const std::string& name, int in, int out, Rng& rng, double gain) {
  ps.add(name + ".weight", uniform_init<Scalar>(out, in * 9, in * 9, gain, rng));
  ps.add(name + ".bias", Mat<Scalar>::Zero(out, 1));
}

template <typename Scalar>
Var<Scalar> apply_conv3(const ParamStore<Scalar>& ps, const std::string& name, const Var<Scalar>& x) {
  return conv3x3<Scalar>(x, ps.get(name + ".weight"), ps.get(name + ".bias"));
}

template <typename Scalar>
void declare_group_norm(ParamStore<Scalar>& ps, const std::string& name, int channels) {
  ps.add(name + ".gamma", Mat<Scalar>::Ones(channels, 1));
  ps.add(name + ".beta", Mat<Scalar>::Zero(channels, 1));
}

template <typename Scalar>
Var<Scalar> apply_group_norm(const ParamStore<Scalar>& ps, const std::string& name, const Var<Scalar>& x) {
  return group_norm<Scalar>(x, kNormGroups, ps.get(name + ".gamma"), ps.get(name + ".beta"));
}

template <typename Scalar>
void declare_resblock(ParamStore<Scalar>& ps, const std::string& name, int in, int out, int cond_dim, Rng& rng) {
  declare_group_norm(ps, name + ".norm1", in);
  declare_conv3(ps, name + ".conv1", in, out, rng);
  if (cond_dim > 0) declare_dense(ps, name + ".cond", cond_dim, out, rng);
  declare_group_norm(ps, name + ".norm2", out);
  declare_conv3(ps, name + ".conv2", out, out, rng);
  if (in != out) declare_dense(ps, name + ".skip", in, out, rng);
}

template <typename Scalar>
Var<Scalar> apply_resblock(const ParamStore<Scalar>& ps, const std::string& name, const Var<Scalar>& x,
                           const Var<Scalar>& cond) {
  auto h = apply_conv3(ps, name + ".conv1", silu(apply_group_norm(ps, name + ".norm1", x)));
  if (cond) h = add_per_sample(h, apply_dense(ps, name + ".cond", silu(cond)));
  h = apply_conv3(ps, name + ".conv2", silu(apply_group_norm(ps, name + ".norm2", h)));
  const auto skip = ps.contains(name + ".skip.weight") ? apply_dense(ps, name + ".skip", x) : x;
  return add(skip, h);
}

template <typename Scalar>
void declare_cross_attention(ParamStore<Scalar>& ps, const std::string& name, int channels, int ctx_dim, Rng& rng) {
  declare_group_norm(ps, name + ".norm", channels);
  declare_dense(ps, name + ".query", channels, channels, rng);
  declare_dense(ps, name + ".key", ctx_dim, channels, rng);
  declare_dense(ps, name + ".value", ctx_dim, channels, rng);
  declare_dense(ps, name + ".out", channels, channels, rng);
}

template <typename Scalar>
Var<Scalar> apply_cross_attention(const ParamStore<Scalar>& ps, const std::string& name, const Var<Scalar>& x,
                                  const Var<Scalar>& context, int tokens) {
  const auto q = apply_dense(ps, name + ".query", apply_group_norm(ps, name + ".norm", x));
  const auto k = apply_dense(ps, name + ".key", context);
  const auto v = apply_dense(ps, name + ".value", context);
  return add(x, apply_dense(ps, name + ".out", attention(q, k, v, tokens)));
}

template <typename Scalar>
void declare_time_mlp(ParamStore<Scalar>& ps, const std::string& name, int dim, Rng& rng) {
  declare_dense(ps, name + ".fc1", dim, dim, rng);
  declare_dense(ps, name + ".fc2", dim, dim, rng);
}

template <typename Scalar>
Var<Scalar> apply_time_mlp(const ParamStore<Scalar>& ps, const std::string& name, const std::vector<int>& timesteps) {
  const int dim = static_cast<int>(ps.get(name + ".fc1.weight")->value.cols());
  const auto features = constant<Scalar>(sinusoidal_embedding<Scalar>(timesteps, dim));
  return apply_dense(ps, name + ".fc2", silu(apply_dense(ps, name + ".fc1", features)));
}

#define MOONSHINE_INSTANTIATE(S)                                                                                 \
  template void declare_dense<S>(ParamStore<S>&, const std::string&, int, int, Rng&, double);                    \
  template Var<S> apply_dense<S>(const ParamStore<S>&, const std::string&, const Var<S>&);                       \
  template void declare_conv3<S>(ParamStore<S>&, const std::string&, int, int, Rng&, double);                    \
  template Var<S> apply_conv3<S>(const ParamStore<S>&, const std::string&, const Var<S>&);                       \
  template void declare_group_norm<S>(ParamStore<S>&, const std::string&, int);                                  \
  template Var<S> apply_group_norm<S>(const ParamStore<S>&, const std::string&, const Var<S>&);                  \
  template void declare_resblock<S>(ParamStore<S>&, const std::string&, int, int, int, Rng&);                    \
  template Var<S> apply_resblock<S>(const ParamStore<S>&, const std::string&, const Var<S>&, const Var<S>&);     \
  template void declare_cross_attention<S>(ParamStore<S>&, const std::string&, int, int, Rng&);                  \
  template Var<S> apply_cross_attention<S>(const ParamStore<S>&, const std::string&, const Var<S>&,              \
                                           const Var<S>&, int);                                                  \
  template void declare_time_mlp<S>(ParamStore<S>&, const std::string&, int, Rng&);                              \
  template Var<S> apply_time_mlp<S>(const ParamStore<S>&, const std::string&, const std::vector<int>&);

MOONSHINE_INSTANTIATE(float)
MOONSHINE_INSTANTIATE(double)
#undef MOONSHINE_INSTANTIATE

}  // namespace moonshine::nn
