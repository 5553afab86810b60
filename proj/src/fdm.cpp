#include "moonshine/fdm.hpp"

#include <cmath>

#include "moonshine/error.hpp"
#include "moonshine/nn/layers.hpp"

namespace moonshine {

namespace {

constexpr int kUpsamplings = 3;

std::string block_name(int i) { return "up" + std::to_string(i); }

nn::Var<float> fdm_loss(const FdmModel& model, const nn::Var<float>& logits, const nn::Mat<float>& target) {
  if (model.config.loss == FdmLoss::CrossEntropy) return nn::cross_entropy_channels<float>(logits, target);
  return nn::mse_loss<float>(nn::softmax_channels<float>(logits), target);
}

}  // namespace

void FdmConfig::validate() const {
  if (embed_dim < 1 || noise_dim < 0) throw UsageError("fdm: embed_dim must be positive and noise_dim non-negative");
  if (height <= 0 || width <= 0 || height % 8 != 0 || width % 8 != 0) {
    throw UsageError("fdm: map height and width must be positive multiples of 8");
  }
  if (channels != kTileCount) throw UsageError("fdm: channel count must equal the tileset size");
  if (base_channels < 4 || base_channels % 4 != 0) throw UsageError("fdm: base_channels must be a multiple of 4");
  if (!(lr > 0) || epochs < 0 || batch_size < 1) throw UsageError("fdm: lr, epochs and batch_size must be positive");
  if (captions_per_map < 1 || captions_per_map > kDescriptionCount) throw UsageError("fdm: captions_per_map must be in 1..10");
}

nlohmann::ordered_json FdmConfig::to_json() const {
  return {{"model", "fdm"},         {"embed_dim", embed_dim}, {"noise_dim", noise_dim},
          {"base_channels", base_channels}, {"height", height}, {"width", width},
          {"channels", channels},   {"lr", lr},               {"epochs", epochs},
          {"batch_size", batch_size}, {"captions_per_map", captions_per_map}, {"seed", seed},
          {"loss", loss == FdmLoss::Mse ? "mse" : "cross_entropy"}};
}

FdmConfig FdmConfig::from_json(const nlohmann::json& j) {
  FdmConfig c;
  try {
    if (j.value("model", "fdm") != "fdm") throw DataError("model file is not an fdm model");
    c.embed_dim = j.value("embed_dim", c.embed_dim);
    c.noise_dim = j.value("noise_dim", c.noise_dim);
    c.base_channels = j.value("base_channels", c.base_channels);
    c.height = j.value("height", c.height);
    c.width = j.value("width", c.width);
    c.channels = j.value("channels", c.channels);
    c.lr = j.value("lr", c.lr);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.captions_per_map = j.value("captions_per_map", c.captions_per_map);
    c.seed = j.value("seed", c.seed);
    const std::string loss = j.value("loss", "mse");
    if (loss == "mse") {
      c.loss = FdmLoss::Mse;
    } else if (loss == "cross_entropy") {
      c.loss = FdmLoss::CrossEntropy;
    } else {
      throw DataError("unknown fdm loss " + loss);
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad fdm config: ") + e.what());
  }
  try {
    c.validate();
  } catch (const UsageError& e) {
    throw DataError(e.what());
  }
  return c;
}

FdmModel fdm_init(const FdmConfig& cfg) {
  cfg.validate();
  FdmModel model{cfg, {}};
  Rng rng(derive_seed(cfg.seed, 0));
  const int start = (cfg.height / 8) * (cfg.width / 8) * cfg.base_channels;
  nn::declare_dense(model.params, "input", cfg.embed_dim + cfg.noise_dim, start, rng);
  for (int i = 0; i < kUpsamplings; ++i) {
    nn::declare_resblock(model.params, block_name(i), cfg.base_channels, cfg.base_channels, 0, rng);
  }
  nn::declare_group_norm(model.params, "output_norm", cfg.base_channels);
  nn::declare_conv3(model.params, "output", cfg.base_channels, cfg.channels, rng);
  return model;
}

nn::Var<float> fdm_logits(const FdmModel& model, const nn::Mat<float>& embeddings, const nn::Mat<float>& noise) {
  const auto& cfg = model.config;
  if (embeddings.rows() != cfg.embed_dim) {
    throw DataError("fdm expects " + std::to_string(cfg.embed_dim) + "-d embeddings, got " +
                    std::to_string(embeddings.rows()));
  }
  if (noise.rows() != cfg.noise_dim || noise.cols() != embeddings.cols()) throw UsageError("fdm: noise shape mismatch");
  nn::Mat<float> input(cfg.embed_dim + cfg.noise_dim, embeddings.cols());
  // Unit-norm embeddings have per-entry scale 1/sqrt(E); match the unit-variance noise.
  input.topRows(cfg.embed_dim) = embeddings * std::sqrt(static_cast<float>(cfg.embed_dim));
  input.bottomRows(cfg.noise_dim) = noise;
  auto h = nn::apply_dense(model.params, "input", nn::constant<float>(std::move(input)));
  h = nn::unflatten(h, cfg.base_channels, cfg.height / 8, cfg.width / 8);
  for (int i = 0; i < kUpsamplings; ++i) {
    h = nn::upsample_nearest2(nn::apply_resblock(model.params, block_name(i), h, nn::Var<float>{}));
  }
  return nn::apply_conv3(model.params, "output", nn::silu(nn::apply_group_norm(model.params, "output_norm", h)));
}

Eigen::VectorXf fdm_noise(int noise_dim, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::VectorXf z(noise_dim);
  for (int i = 0; i < noise_dim; ++i) z[i] = static_cast<float>(rng.normal());
  return z;
}

ProbMap fdm_forward(const FdmModel& model, const TextEmbedding& embedding, const Eigen::VectorXf& noise) {
  nn::NoGradGuard no_grad;
  const auto probs = nn::softmax_channels(fdm_logits(model, embedding, noise));
  const auto& cfg = model.config;
  ProbMap pm(cfg.height, cfg.width, cfg.channels);
  Eigen::Map<nn::Mat<float>>(pm.values().data(), cfg.channels, cfg.height * cfg.width) = probs->value;
  return pm;
}

double fdm_evaluate(const FdmModel& model, const std::vector<TrainExample>& examples, std::uint64_t seed) {
  if (examples.empty()) return std::numeric_limits<double>::quiet_NaN();
  nn::NoGradGuard no_grad;
  const auto& cfg = model.config;
  Rng rng(seed);
  double total = 0;
  std::size_t count = 0;
  for (std::size_t start = 0; start < examples.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
    const std::size_t end = std::min(examples.size(), start + static_cast<std::size_t>(cfg.batch_size));
    std::vector<const MapGrid*> maps;
    std::vector<const TextEmbedding*> embs;
    for (std::size_t i = start; i < end; ++i) {
      maps.push_back(&examples[i].map);
      embs.push_back(&examples[i].captions.front());
    }
    nn::Mat<float> noise(cfg.noise_dim, static_cast<Eigen::Index>(maps.size()));
    for (Eigen::Index k = 0; k < noise.size(); ++k) noise.data()[k] = static_cast<float>(rng.normal());
    const auto loss = fdm_loss(model, fdm_logits(model, embedding_batch(embs), noise), one_hot_batch(maps));
    total += static_cast<double>(loss->value(0, 0)) * static_cast<double>(maps.size());
    count += maps.size();
  }
  return total / static_cast<double>(count);
}

LossHistory fdm_train(FdmModel& model, const std::vector<TrainExample>& train,
                      const std::vector<TrainExample>& validation, const EpochCallback& on_epoch) {
  if (train.empty()) throw UsageError("fdm training needs at least one example");
  nn::enable_flush_to_zero();
  const auto& cfg = model.config;
  auto pairs = training_pairs(train, cfg.captions_per_map);
  const std::uint64_t eval_seed = derive_seed(cfg.seed, 2);
  Rng rng(derive_seed(cfg.seed, 1));
  const nn::AdamConfig adam{cfg.lr};
  LossHistory history;
  history.train.push_back(fdm_evaluate(model, train, eval_seed));
  history.validation.push_back(fdm_evaluate(model, validation, eval_seed));

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(pairs);
    double total = 0;
    for (std::size_t start = 0; start < pairs.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(pairs.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<const MapGrid*> maps;
      std::vector<const TextEmbedding*> embs;
      for (std::size_t i = start; i < end; ++i) {
        const auto& ex = train[pairs[i].example];
        maps.push_back(&ex.map);
        embs.push_back(&ex.captions[pairs[i].caption]);
      }
      nn::Mat<float> noise(cfg.noise_dim, static_cast<Eigen::Index>(maps.size()));
      for (Eigen::Index k = 0; k < noise.size(); ++k) noise.data()[k] = static_cast<float>(rng.normal());
      model.params.zero_grad();
      const auto loss = fdm_loss(model, fdm_logits(model, embedding_batch(embs), noise), one_hot_batch(maps));
      nn::backward(loss);
      nn::adam_step(model.params, adam);
      total += static_cast<double>(loss->value(0, 0)) * static_cast<double>(maps.size());
    }
    model.params.zero_grad();
    history.train.push_back(total / static_cast<double>(pairs.size()));
    history.validation.push_back(fdm_evaluate(model, validation, eval_seed));
    if (on_epoch) on_epoch(epoch, history.train.back(), history.validation.back());
  }
  return history;
}

MapGrid fdm_generate(const FdmModel& model, const TextEmbedding& embedding, std::uint64_t seed) {
  return argmax_decode(fdm_forward(model, embedding, fdm_noise(model.config.noise_dim, seed)));
}

MapGrid fdm_generate(const FdmModel& model, const std::string& prompt, std::uint64_t seed) {
  return fdm_generate(model, hashed_embed(prompt, model.config.embed_dim), seed);
}

void save_fdm(const std::filesystem::path& path, const FdmModel& model) {
  nn::save_model(path, model.config.to_json(), model.params);
}

FdmModel load_fdm(const std::filesystem::path& path) {
  const auto loaded = nn::load_model_file(path);
  FdmModel model = fdm_init(FdmConfig::from_json(loaded.config));
  nn::assign_parameters(model.params, loaded);
  return model;
}

}  // namespace moonshine
