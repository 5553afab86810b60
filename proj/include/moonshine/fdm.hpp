#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "moonshine/embed.hpp"
#include "moonshine/map_grid.hpp"
#include "moonshine/nn/params.hpp"
#include "moonshine/training.hpp"

namespace moonshine {

enum class FdmLoss { Mse, CrossEntropy };

struct FdmConfig {
  int embed_dim = kDefaultEmbedDim;
  int noise_dim = 16;
  int base_channels = 64;
  int height = kDefaultMapSize;
  int width = kDefaultMapSize;
  int channels = kTileCount;
  double lr = 1e-3;
  int epochs = 200;
  int batch_size = 16;
  int captions_per_map = 1;  // leading descriptions of each map used as training pairs
  std::uint64_t seed = 0;
  FdmLoss loss = FdmLoss::Mse;

  // Throws UsageError; H and W must be divisible by 8, base_channels by 4.
  void validate() const;
  nlohmann::ordered_json to_json() const;
  static FdmConfig from_json(const nlohmann::json& j);
};

/// Feed-forward text-to-map generator:
/// [embedding ; noise] -> dense -> (base, H/8, W/8) -> 3 x (residual block, nearest x2) -> conv3x3 -> softmax.
struct FdmModel {
  FdmConfig config;
  nn::ParamStore<float> params;
};

// Fresh parameters drawn from config.seed.
FdmModel fdm_init(const FdmConfig& cfg);

// Batched logits (C x batch*H*W) for embedding columns (E x B) and noise columns (noise_dim x B).
nn::Var<float> fdm_logits(const FdmModel& model, const nn::Mat<float>& embeddings, const nn::Mat<float>& noise);

ProbMap fdm_forward(const FdmModel& model, const TextEmbedding& embedding, const Eigen::VectorXf& noise);

// Standard normal noise vector drawn from seed.
Eigen::VectorXf fdm_noise(int noise_dim, std::uint64_t seed);

// Adam on MSE (or cross-entropy) against one-hot targets. Each epoch visits every
// (map, caption) pair once in shuffled order with fresh noise. Validation uses caption 0 and fixed noise.
// Throws UsageError when `train` is empty.
LossHistory fdm_train(FdmModel& model, const std::vector<TrainExample>& train,
                      const std::vector<TrainExample>& validation, const EpochCallback& on_epoch = {});

// Loss of the current parameters over a fixed evaluation pass (caption 0, noise seeded by `seed`).
double fdm_evaluate(const FdmModel& model, const std::vector<TrainExample>& examples, std::uint64_t seed);

MapGrid fdm_generate(const FdmModel& model, const TextEmbedding& embedding, std::uint64_t seed);
MapGrid fdm_generate(const FdmModel& model, const std::string& prompt, std::uint64_t seed);

void save_fdm(const std::filesystem::path& path, const FdmModel& model);
FdmModel load_fdm(const std::filesystem::path& path);

}  // namespace moonshine
