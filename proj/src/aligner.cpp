#include "moonshine/aligner.hpp"

#include <cmath>
#include <numeric>

#include "moonshine/error.hpp"
#include "moonshine/nn/layers.hpp"

namespace moonshine {

namespace {

constexpr int kEncoderWidths[] = {16, 32, 64};

nn::Var<float> encode_maps(const AlignerModel& model, const std::vector<const MapGrid*>& maps) {
  const auto& cfg = model.config;
  auto h = nn::constant<float>(one_hot_batch(maps), nn::Layout{static_cast<int>(maps.size()), cfg.height, cfg.width});
  for (int i = 0; i < 3; ++i) {
    const std::string name = "map.block" + std::to_string(i);
    h = nn::avg_pool2(nn::silu(nn::apply_group_norm(model.params, name + ".norm", nn::apply_conv3(model.params, name + ".conv", h))));
  }
  return nn::l2_normalize_columns(nn::apply_dense(model.params, "map.proj", nn::flatten(h)));
}

nn::Var<float> encode_texts(const AlignerModel& model, const std::vector<const TextEmbedding*>& embeddings) {
  const auto e = embedding_batch(embeddings);
  if (e.rows() != model.config.embed_dim) throw DataError("aligner embedding dimension mismatch");
  const auto x = nn::constant<float>(e * std::sqrt(static_cast<float>(e.rows())));
  return nn::l2_normalize_columns(nn::apply_dense(model.params, "text.proj", x));
}

nn::Var<float> batch_loss(const AlignerModel& model, const std::vector<const MapGrid*>& maps,
                          const std::vector<const TextEmbedding*>& texts) {
  const auto logits = nn::scale_by_exp(nn::matmul_tn(encode_maps(model, maps), encode_texts(model, texts)),
                                       model.params.get("logit_scale"));
  return nn::symmetric_info_nce(logits);
}

// Consecutive batches of distinct examples; a short tail merges into the previous batch.
std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n, std::size_t batch) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t s = 0; s < n; s += batch) out.emplace_back(s, std::min(n, s + batch));
  if (out.size() > 1 && out.back().second - out.back().first < 2) {
    out[out.size() - 2].second = out.back().second;
    out.pop_back();
  }
  return out;
}

}  // namespace

void AlignerConfig::validate() const {
  if (embed_dim < 1 || proj_dim < 1) throw UsageError("aligner: dimensions must be positive");
  if (height <= 0 || width <= 0 || height % 8 != 0 || width % 8 != 0) {
    throw UsageError("aligner: map height and width must be positive multiples of 8");
  }
  if (channels != kTileCount) throw UsageError("aligner: channel count must equal the tileset size");
  if (!(lr > 0) || epochs < 0) throw UsageError("aligner: lr must be positive and epochs non-negative");
  if (batch_size < 2) throw UsageError("aligner: batch_size must be at least 2");
  if (captions_per_map < 1 || captions_per_map > kDescriptionCount) throw UsageError("aligner: captions_per_map must be in 1..10");
}

nlohmann::ordered_json AlignerConfig::to_json() const {
  return {{"model", "aligner"}, {"embed_dim", embed_dim}, {"proj_dim", proj_dim},   {"height", height},
          {"width", width},     {"channels", channels},   {"lr", lr},               {"epochs", epochs},
          {"batch_size", batch_size}, {"captions_per_map", captions_per_map}, {"seed", seed}};
}

AlignerConfig AlignerConfig::from_json(const nlohmann::json& j) {
  AlignerConfig c;
  try {
    if (j.value("model", "aligner") != "aligner") throw DataError("model file is not an aligner model");
    c.embed_dim = j.value("embed_dim", c.embed_dim);
    c.proj_dim = j.value("proj_dim", c.proj_dim);
    c.height = j.value("height", c.height);
    c.width = j.value("width", c.width);
    c.channels = j.value("channels", c.channels);
    c.lr = j.value("lr", c.lr);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.captions_per_map = j.value("captions_per_map", c.captions_per_map);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad aligner config: ") + e.what());
  }
  try {
    c.validate();
  } catch (const UsageError& e) {
    throw DataError(e.what());
  }
  return c;
}

AlignerModel aligner_init(const AlignerConfig& cfg) {
  cfg.validate();
  AlignerModel model{cfg, {}};
  Rng rng(derive_seed(cfg.seed, 0));
  int in = cfg.channels;
  for (int i = 0; i < 3; ++i) {
    const std::string name = "map.block" + std::to_string(i);
    nn::declare_conv3(model.params, name + ".conv", in, kEncoderWidths[i], rng);
    nn::declare_group_norm(model.params, name + ".norm", kEncoderWidths[i]);
    in = kEncoderWidths[i];
  }
  const int flat = in * (cfg.height / 8) * (cfg.width / 8);
  nn::declare_dense(model.params, "map.proj", flat, cfg.proj_dim, rng);
  nn::declare_dense(model.params, "text.proj", cfg.embed_dim, cfg.proj_dim, rng);
  model.params.add("logit_scale", nn::Mat<float>::Constant(1, 1, std::log(1.0f / 0.07f)));
  return model;
}

nn::Mat<float> aligner_map_features(const AlignerModel& model, const std::vector<const MapGrid*>& maps) {
  nn::NoGradGuard no_grad;
  return encode_maps(model, maps)->value;
}

nn::Mat<float> aligner_text_features(const AlignerModel& model, const std::vector<const TextEmbedding*>& embeddings) {
  nn::NoGradGuard no_grad;
  return encode_texts(model, embeddings)->value;
}

double aligner_evaluate(const AlignerModel& model, const std::vector<TrainExample>& examples) {
  if (examples.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  nn::NoGradGuard no_grad;
  double total = 0;
  std::size_t count = 0;
  for (const auto& [s, e] : batch_ranges(examples.size(), static_cast<std::size_t>(model.config.batch_size))) {
    std::vector<const MapGrid*> maps;
    std::vector<const TextEmbedding*> texts;
    for (std::size_t i = s; i < e; ++i) {
      maps.push_back(&examples[i].map);
      texts.push_back(&examples[i].captions.front());
    }
    total += static_cast<double>(batch_loss(model, maps, texts)->value(0, 0)) * static_cast<double>(e - s);
    count += e - s;
  }
  return total / static_cast<double>(count);
}

LossHistory train_aligner(AlignerModel& model, const std::vector<TrainExample>& train,
                          const std::vector<TrainExample>& validation, const EpochCallback& on_epoch) {
  if (train.size() < 2) throw UsageError("aligner training needs at least 2 examples");
  for (const auto& ex : train) {
    if (ex.captions.empty()) throw DataError("training example without captions");
  }
  nn::enable_flush_to_zero();
  const auto& cfg = model.config;
  Rng rng(derive_seed(cfg.seed, 1));
  const nn::AdamConfig adam{cfg.lr};
  LossHistory history;
  history.train.push_back(aligner_evaluate(model, train));
  history.validation.push_back(aligner_evaluate(model, validation));
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double total = 0;
    for (const auto& [s, e] : batch_ranges(order.size(), static_cast<std::size_t>(cfg.batch_size))) {
      std::vector<const MapGrid*> maps;
      std::vector<const TextEmbedding*> texts;
      for (std::size_t i = s; i < e; ++i) {
        const auto& ex = train[order[i]];
        const std::size_t k = std::min(ex.captions.size(), static_cast<std::size_t>(cfg.captions_per_map));
        maps.push_back(&ex.map);
        texts.push_back(&ex.captions[rng.below(k)]);
      }
      model.params.zero_grad();
      const auto loss = batch_loss(model, maps, texts);
      nn::backward(loss);
      nn::adam_step(model.params, adam);
      total += static_cast<double>(loss->value(0, 0)) * static_cast<double>(e - s);
    }
    model.params.zero_grad();
    history.train.push_back(total / static_cast<double>(order.size()));
    history.validation.push_back(aligner_evaluate(model, validation));
    if (on_epoch) on_epoch(epoch, history.train.back(), history.validation.back());
  }
  return history;
}

double align_score(const AlignerModel& model, const TextEmbedding& prompt, const MapGrid& map) {
  const auto m = aligner_map_features(model, {&map});
  const auto t = aligner_text_features(model, {&prompt});
  const double cos = static_cast<double>(m.col(0).dot(t.col(0)));
  return 100.0 * std::clamp(cos, 0.0, 1.0);
}

double align_score(const AlignerModel& model, const std::string& prompt, const MapGrid& map) {
  return align_score(model, hashed_embed(prompt, model.config.embed_dim), map);
}

double retrieval_accuracy(const AlignerModel& model, const std::vector<TrainExample>& examples, int group) {
  if (examples.size() < 2 || group < 2) throw UsageError("retrieval needs at least 2 examples per group");
  int hits = 0;
  for (const auto& [s, e] : batch_ranges(examples.size(), static_cast<std::size_t>(group))) {
    std::vector<const MapGrid*> maps;
    std::vector<const TextEmbedding*> texts;
    for (std::size_t i = s; i < e; ++i) {
      maps.push_back(&examples[i].map);
      texts.push_back(&examples[i].captions.front());
    }
    const nn::Mat<float> sim = aligner_text_features(model, texts).transpose() * aligner_map_features(model, maps);
    for (Eigen::Index i = 0; i < sim.rows(); ++i) {
      Eigen::Index best = 0;
      sim.row(i).maxCoeff(&best);
      if (best == i) ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(examples.size());
}

void save_aligner(const std::filesystem::path& path, const AlignerModel& model) {
  nn::save_model(path, model.config.to_json(), model.params);
}

AlignerModel load_aligner(const std::filesystem::path& path) {
  const auto loaded = nn::load_model_file(path);
  AlignerModel model = aligner_init(AlignerConfig::from_json(loaded.config));
  nn::assign_parameters(model.params, loaded);
  return model;
}

}  // namespace moonshine
