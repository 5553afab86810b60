#include "moonshine/ddm.hpp"

#include <cmath>

#include "moonshine/error.hpp"
#include "moonshine/nn/layers.hpp"

namespace moonshine {

DiffusionSchedule make_schedule(int steps, double beta_start, double beta_end) {
  if (steps < 2) throw UsageError("diffusion needs at least 2 timesteps");
  if (!(beta_start > 0 && beta_start < 1 && beta_end > 0 && beta_end < 1)) {
    throw UsageError("beta endpoints must lie in (0, 1)");
  }
  DiffusionSchedule s;
  s.steps = steps;
  double bar = 1.0;
  for (int i = 0; i < steps; ++i) {
    const double beta = beta_start + (beta_end - beta_start) * i / (steps - 1);
    bar *= 1.0 - beta;
    s.beta.push_back(beta);
    s.alpha.push_back(1.0 - beta);
    s.alpha_bar.push_back(bar);
    s.sigma.push_back(std::sqrt(beta));
  }
  return s;
}

Eigen::ArrayXf scale_map(const ProbMap& one_hot) { return one_hot.values() * 2.0f - 1.0f; }

ProbMap unscale_map(const Eigen::ArrayXf& scaled, int height, int width, int channels) {
  return ProbMap(height, width, channels, (scaled + 1.0f) * 0.5f);
}

Eigen::ArrayXf forward_diffuse(const DiffusionSchedule& schedule, const Eigen::ArrayXf& m0, int t,
                               const Eigen::ArrayXf& eps) {
  if (t < 1 || t > schedule.steps) throw UsageError("timestep " + std::to_string(t) + " outside [1, T]");
  if (m0.size() != eps.size()) throw UsageError("noise shape does not match the map");
  const double bar = schedule.alpha_bar_at(t);
  return (m0.cast<double>() * std::sqrt(bar) + eps.cast<double>() * std::sqrt(1.0 - bar)).cast<float>();
}

ProbMap ddm_decode(const Eigen::ArrayXf& scaled, int height, int width) {
  return one_hot_encode<float>(argmax_decode(unscale_map(scaled, height, width)));
}

namespace {

constexpr int kLevels = 3;
constexpr int kMultipliers[kLevels] = {1, 2, 4};

}  // namespace

template <typename Scalar>
void declare_unet(nn::ParamStore<Scalar>& ps, const UNetShape& shape, Rng& rng) {
  const int b = shape.base_channels;
  const int td = shape.time_dim;
  const int e = shape.embed_dim;
  nn::declare_time_mlp(ps, "time", td, rng);
  nn::declare_conv3(ps, "in", shape.channels, b, rng);
  int prev = b;
  for (int level = 0; level < kLevels - 1; ++level) {
    const int ch = b * kMultipliers[level];
    const std::string name = "down" + std::to_string(level);
    nn::declare_resblock(ps, name + ".res", prev, ch, td, rng);
    nn::declare_cross_attention(ps, name + ".attn", ch, e, rng);
    prev = ch;
  }
  const int mid = b * kMultipliers[kLevels - 1];
  nn::declare_resblock(ps, "mid.res", prev, mid, td, rng);
  nn::declare_cross_attention(ps, "mid.attn", mid, e, rng);
  prev = mid;
  for (int level = kLevels - 2; level >= 0; --level) {
    const int ch = b * kMultipliers[level];
    const std::string name = "up" + std::to_string(level);
    nn::declare_resblock(ps, name + ".res", prev + ch, ch, td, rng);
    nn::declare_cross_attention(ps, name + ".attn", ch, e, rng);
    prev = ch;
  }
  nn::declare_group_norm(ps, "out_norm", b);
  nn::declare_conv3(ps, "out", b, shape.channels, rng, 0.1);
}

template <typename Scalar>
nn::Var<Scalar> unet_forward(const nn::ParamStore<Scalar>& ps, const nn::Var<Scalar>& x,
                             const std::vector<int>& timesteps, const nn::Var<Scalar>& embeddings) {
  const nn::Layout l = x->layout;
  if (l.height % 4 != 0 || l.width % 4 != 0) throw UsageError("unet: height and width must be divisible by 4");
  if (static_cast<int>(timesteps.size()) != l.batch || embeddings->value.cols() != l.batch) {
    throw UsageError("unet: batch size mismatch between map, timesteps and embeddings");
  }
  const auto temb = nn::apply_time_mlp(ps, "time", timesteps);
  auto block = [&](const std::string& name, const nn::Var<Scalar>& h) {
    return nn::apply_cross_attention(ps, name + ".attn", nn::apply_resblock(ps, name + ".res", h, temb), embeddings, 1);
  };
  auto h = nn::apply_conv3(ps, "in", x);
  std::vector<nn::Var<Scalar>> skips;
  for (int level = 0; level < kLevels - 1; ++level) {
    h = block("down" + std::to_string(level), h);
    skips.push_back(h);
    h = nn::avg_pool2(h);
  }
  h = block("mid", h);
  for (int level = kLevels - 2; level >= 0; --level) {
    h = nn::concat_channels(nn::upsample_nearest2(h), skips[static_cast<std::size_t>(level)]);
    h = block("up" + std::to_string(level), h);
  }
  return nn::apply_conv3(ps, "out", nn::silu(nn::apply_group_norm(ps, "out_norm", h)));
}

template void declare_unet<float>(nn::ParamStore<float>&, const UNetShape&, Rng&);
template void declare_unet<double>(nn::ParamStore<double>&, const UNetShape&, Rng&);
template nn::Var<float> unet_forward<float>(const nn::ParamStore<float>&, const nn::Var<float>&, const std::vector<int>&,
                                            const nn::Var<float>&);
template nn::Var<double> unet_forward<double>(const nn::ParamStore<double>&, const nn::Var<double>&,
                                              const std::vector<int>&, const nn::Var<double>&);

void DdmConfig::validate() const {
  if (embed_dim < 1) throw UsageError("ddm: embed_dim must be positive");
  if (height <= 0 || width <= 0 || height % 4 != 0 || width % 4 != 0) {
    throw UsageError("ddm: map height and width must be positive multiples of 4");
  }
  if (channels != kTileCount) throw UsageError("ddm: channel count must equal the tileset size");
  if (base_channels < 4 || base_channels % 4 != 0) throw UsageError("ddm: base_channels must be a multiple of 4");
  if (time_dim < 2 || time_dim % 2 != 0) throw UsageError("ddm: time_dim must be even");
  if (!(lr > 0) || epochs < 0 || batch_size < 1) throw UsageError("ddm: lr, epochs and batch_size must be positive");
  if (captions_per_map < 1 || captions_per_map > kDescriptionCount) throw UsageError("ddm: captions_per_map must be in 1..10");
  make_schedule(steps, beta_start, beta_end);
}

nlohmann::ordered_json DdmConfig::to_json() const {
  return {{"model", "ddm"},
          {"embed_dim", embed_dim},
          {"base_channels", base_channels},
          {"time_dim", time_dim},
          {"steps", steps},
          {"beta_start", beta_start},
          {"beta_end", beta_end},
          {"height", height},
          {"width", width},
          {"channels", channels},
          {"lr", lr},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"captions_per_map", captions_per_map},
          {"seed", seed}};
}

DdmConfig DdmConfig::from_json(const nlohmann::json& j) {
  DdmConfig c;
  try {
    if (j.value("model", "ddm") != "ddm") throw DataError("model file is not a ddm model");
    c.embed_dim = j.value("embed_dim", c.embed_dim);
    c.base_channels = j.value("base_channels", c.base_channels);
    c.time_dim = j.value("time_dim", c.time_dim);
    c.steps = j.value("steps", c.steps);
    c.beta_start = j.value("beta_start", c.beta_start);
    c.beta_end = j.value("beta_end", c.beta_end);
    c.height = j.value("height", c.height);
    c.width = j.value("width", c.width);
    c.channels = j.value("channels", c.channels);
    c.lr = j.value("lr", c.lr);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.captions_per_map = j.value("captions_per_map", c.captions_per_map);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad ddm config: ") + e.what());
  }
  try {
    c.validate();
  } catch (const UsageError& e) {
    throw DataError(e.what());
  }
  return c;
}

DdmModel ddm_init(const DdmConfig& cfg) {
  cfg.validate();
  DdmModel model{cfg, make_schedule(cfg.steps, cfg.beta_start, cfg.beta_end), {}};
  Rng rng(derive_seed(cfg.seed, 0));
  declare_unet(model.params, cfg.unet_shape(), rng);
  return model;
}

namespace {

// Unit-norm embeddings scaled to unit per-entry variance.
nn::Var<float> conditioning(const nn::Mat<float>& embeddings) {
  return nn::constant<float>(embeddings * std::sqrt(static_cast<float>(embeddings.rows())));
}

struct NoisedBatch {
  nn::Var<float> input;
  nn::Mat<float> noise;
  std::vector<int> timesteps;
};

NoisedBatch noise_batch(const DdmModel& model, const std::vector<const MapGrid*>& maps, Rng& rng) {
  const auto& cfg = model.config;
  const int hw = cfg.height * cfg.width;
  NoisedBatch out;
  nn::Mat<float> m = one_hot_batch(maps) * 2.0f - nn::Mat<float>::Ones(cfg.channels, static_cast<Eigen::Index>(maps.size()) * hw);
  out.noise.resize(m.rows(), m.cols());
  for (std::size_t n = 0; n < maps.size(); ++n) {
    const int t = rng.range(1, cfg.steps);
    out.timesteps.push_back(t);
    const auto bar = model.schedule.alpha_bar_at(t);
    const auto a = static_cast<float>(std::sqrt(bar));
    const auto s = static_cast<float>(std::sqrt(1.0 - bar));
    for (int c = 0; c < cfg.channels; ++c) {
      for (int p = 0; p < hw; ++p) {
        const Eigen::Index col = static_cast<Eigen::Index>(n) * hw + p;
        const auto e = static_cast<float>(rng.normal());
        out.noise(c, col) = e;
        m(c, col) = a * m(c, col) + s * e;
      }
    }
  }
  out.input = nn::constant<float>(std::move(m), nn::Layout{static_cast<int>(maps.size()), cfg.height, cfg.width});
  return out;
}

}  // namespace

double ddm_evaluate(const DdmModel& model, const std::vector<TrainExample>& examples, std::uint64_t seed) {
  if (examples.empty()) return std::numeric_limits<double>::quiet_NaN();
  nn::NoGradGuard no_grad;
  const auto& cfg = model.config;
  Rng rng(seed);
  double total = 0;
  for (std::size_t start = 0; start < examples.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
    const std::size_t end = std::min(examples.size(), start + static_cast<std::size_t>(cfg.batch_size));
    std::vector<const MapGrid*> maps;
    std::vector<const TextEmbedding*> embs;
    for (std::size_t i = start; i < end; ++i) {
      maps.push_back(&examples[i].map);
      embs.push_back(&examples[i].captions.front());
    }
    const auto batch = noise_batch(model, maps, rng);
    const auto pred = unet_forward<float>(model.params, batch.input, batch.timesteps, conditioning(embedding_batch(embs)));
    total += static_cast<double>(nn::mse_loss<float>(pred, batch.noise)->value(0, 0)) * static_cast<double>(maps.size());
  }
  return total / static_cast<double>(examples.size());
}

LossHistory ddm_train(DdmModel& model, const std::vector<TrainExample>& train,
                      const std::vector<TrainExample>& validation, const EpochCallback& on_epoch) {
  if (train.empty()) throw UsageError("ddm training needs at least one example");
  nn::enable_flush_to_zero();
  const auto& cfg = model.config;
  auto pairs = training_pairs(train, cfg.captions_per_map);
  const std::uint64_t eval_seed = derive_seed(cfg.seed, 2);
  Rng rng(derive_seed(cfg.seed, 1));
  const nn::AdamConfig adam{cfg.lr};
  LossHistory history;
  history.train.push_back(ddm_evaluate(model, train, eval_seed));
  history.validation.push_back(ddm_evaluate(model, validation, eval_seed));
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(pairs);
    double total = 0;
    for (std::size_t start = 0; start < pairs.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(pairs.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<const MapGrid*> maps;
      std::vector<const TextEmbedding*> embs;
      for (std::size_t i = start; i < end; ++i) {
        maps.push_back(&train[pairs[i].example].map);
        embs.push_back(&train[pairs[i].example].captions[pairs[i].caption]);
      }
      const auto batch = noise_batch(model, maps, rng);
      model.params.zero_grad();
      const auto pred = unet_forward<float>(model.params, batch.input, batch.timesteps, conditioning(embedding_batch(embs)));
      const auto loss = nn::mse_loss<float>(pred, batch.noise);
      nn::backward(loss);
      nn::adam_step(model.params, adam);
      total += static_cast<double>(loss->value(0, 0)) * static_cast<double>(maps.size());
    }
    model.params.zero_grad();
    history.train.push_back(total / static_cast<double>(pairs.size()));
    history.validation.push_back(ddm_evaluate(model, validation, eval_seed));
    if (on_epoch) on_epoch(epoch, history.train.back(), history.validation.back());
  }
  return history;
}

std::vector<int> respaced_timesteps(int total_steps, int steps) {
  if (steps < 1 || steps > total_steps) {
    throw UsageError("sampling steps must be in [1, " + std::to_string(total_steps) + "]");
  }
  std::vector<int> out;
  for (int i = steps; i >= 1; --i) {
    out.push_back(static_cast<int>((static_cast<long long>(i) * total_steps) / steps));
  }
  return out;
}

DdmSample ddm_sample(const DdmModel& model, const TextEmbedding& embedding, std::uint64_t seed,
                     const SampleOptions& options) {
  const auto& cfg = model.config;
  if (embedding.size() != cfg.embed_dim) {
    throw DataError("ddm expects " + std::to_string(cfg.embed_dim) + "-d embeddings, got " +
                    std::to_string(embedding.size()));
  }
  nn::enable_flush_to_zero();
  nn::NoGradGuard no_grad;
  const int hw = cfg.height * cfg.width;
  const std::vector<int> ts = respaced_timesteps(cfg.steps, options.steps == 0 ? cfg.steps : options.steps);
  const int S = static_cast<int>(ts.size());
  const auto ctx = conditioning(embedding);
  Rng rng(seed);
  nn::Mat<float> m(cfg.channels, hw);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = static_cast<float>(rng.normal());

  auto snapshot = [&] {
    return argmax_decode(unscale_map(Eigen::Map<const Eigen::ArrayXf>(m.data(), m.size()), cfg.height, cfg.width));
  };
  std::vector<int> frame_at;
  if (options.dump_frames) {
    for (int i = 0; i < 10; ++i) frame_at.push_back(i * S / 10);
  }
  DdmSample out;
  std::size_t next_frame = 0;
  for (int i = 0; i < S; ++i) {
    while (next_frame < frame_at.size() && frame_at[next_frame] == i) {
      out.frames.push_back(snapshot());
      ++next_frame;
    }
    const int t = ts[static_cast<std::size_t>(i)];
    const double bar = model.schedule.alpha_bar_at(t);
    const double bar_prev = i + 1 < S ? model.schedule.alpha_bar_at(ts[static_cast<std::size_t>(i + 1)]) : 1.0;
    const double alpha = bar / bar_prev;
    const double beta = 1.0 - alpha;
    const auto eps = unet_forward<float>(model.params, nn::constant<float>(m, nn::Layout{1, cfg.height, cfg.width}),
                                         {t}, ctx);
    ++out.network_evaluations;
    const auto inv_sqrt_alpha = static_cast<float>(1.0 / std::sqrt(alpha));
    const auto coef = static_cast<float>(beta / std::sqrt(1.0 - bar));
    m = inv_sqrt_alpha * (m - coef * eps->value);
    if (i + 1 < S) {
      const auto sigma = static_cast<float>(std::sqrt(beta));
      for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] += sigma * static_cast<float>(rng.normal());
    }
  }
  const Eigen::Map<const Eigen::ArrayXf> flat(m.data(), m.size());
  if (!flat.allFinite()) throw DataError("diffusion sampler produced non-finite values");
  out.grid = argmax_decode(unscale_map(flat, cfg.height, cfg.width));
  out.decoded = one_hot_encode<float>(out.grid);
  if (options.dump_frames) out.frames.push_back(out.grid);
  return out;
}

DdmSample ddm_sample(const DdmModel& model, const std::string& prompt, std::uint64_t seed,
                     const SampleOptions& options) {
  return ddm_sample(model, hashed_embed(prompt, model.config.embed_dim), seed, options);
}

void save_ddm(const std::filesystem::path& path, const DdmModel& model) {
  nn::save_model(path, model.config.to_json(), model.params);
}

DdmModel load_ddm(const std::filesystem::path& path) {
  const auto loaded = nn::load_model_file(path);
  DdmModel model = ddm_init(DdmConfig::from_json(loaded.config));
  nn::assign_parameters(model.params, loaded);
  return model;
}

}  // namespace moonshine
