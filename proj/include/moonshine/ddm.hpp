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

/// Linear-beta DDPM schedule. Vectors are indexed by t - 1 for t in [1, T].
struct DiffusionSchedule {
  int steps = 0;
  std::vector<double> beta;
  std::vector<double> alpha;
  std::vector<double> alpha_bar;
  std::vector<double> sigma;

  double beta_at(int t) const { return beta[static_cast<std::size_t>(t - 1)]; }
  double alpha_at(int t) const { return alpha[static_cast<std::size_t>(t - 1)]; }
  double alpha_bar_at(int t) const { return alpha_bar[static_cast<std::size_t>(t - 1)]; }
  double sigma_at(int t) const { return sigma[static_cast<std::size_t>(t - 1)]; }
};

// Throws UsageError for T < 2 or betas outside (0, 1).
DiffusionSchedule make_schedule(int steps, double beta_start = 1e-4, double beta_end = 0.02);

// x -> 2x - 1 and back. No clipping.
Eigen::ArrayXf scale_map(const ProbMap& one_hot);
ProbMap unscale_map(const Eigen::ArrayXf& scaled, int height, int width, int channels = kTileCount);

// sqrt(abar_t) m0 + sqrt(1 - abar_t) eps. Throws UsageError for t outside [1, T] or shape mismatch.
Eigen::ArrayXf forward_diffuse(const DiffusionSchedule& schedule, const Eigen::ArrayXf& m0, int t,
                               const Eigen::ArrayXf& eps);

// argmax of the unscaled array, re-encoded one-hot.
ProbMap ddm_decode(const Eigen::ArrayXf& scaled, int height, int width);

struct UNetShape {
  int channels = kTileCount;
  int base_channels = 32;
  int time_dim = 64;
  int embed_dim = kDefaultEmbedDim;
};

/// Three-resolution UNet (base, 2 base, 4 base) with a time-embedding MLP feeding every
/// residual block and single-token cross-attention on the text embedding after each one.
template <typename Scalar>
void declare_unet(nn::ParamStore<Scalar>& ps, const UNetShape& shape, Rng& rng);

// x: channels x batch*H*W (H, W divisible by 4); timesteps: one per sample; embeddings: E x batch.
template <typename Scalar>
nn::Var<Scalar> unet_forward(const nn::ParamStore<Scalar>& ps, const nn::Var<Scalar>& x,
                             const std::vector<int>& timesteps, const nn::Var<Scalar>& embeddings);

struct DdmConfig {
  int embed_dim = kDefaultEmbedDim;
  int base_channels = 32;
  int time_dim = 64;
  int steps = 200;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  int height = kDefaultMapSize;
  int width = kDefaultMapSize;
  int channels = kTileCount;
  double lr = 1e-3;
  int epochs = 100;
  int batch_size = 8;
  int captions_per_map = 1;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::ordered_json to_json() const;
  static DdmConfig from_json(const nlohmann::json& j);
  UNetShape unet_shape() const { return {channels, base_channels, time_dim, embed_dim}; }
};

struct DdmModel {
  DdmConfig config;
  DiffusionSchedule schedule;
  nn::ParamStore<float> params;
};

DdmModel ddm_init(const DdmConfig& cfg);

// Per step: pair, t ~ U{1..T}, eps ~ N(0, I); minimize mean-squared error of the noise
// prediction with Adam. Validation draws t and eps from a fixed seed with caption 0.
LossHistory ddm_train(DdmModel& model, const std::vector<TrainExample>& train,
                      const std::vector<TrainExample>& validation, const EpochCallback& on_epoch = {});

double ddm_evaluate(const DdmModel& model, const std::vector<TrainExample>& examples, std::uint64_t seed);

struct SampleOptions {
  int steps = 0;             // 0 = full schedule; otherwise an evenly respaced subsequence
  bool dump_frames = false;  // argmax snapshots, 10 evenly spaced plus the final map
};

struct DdmSample {
  MapGrid grid;
  ProbMap decoded{kDefaultMapSize, kDefaultMapSize};
  std::vector<MapGrid> frames;
  int network_evaluations = 0;
};

// Ancestral sampling from m_T ~ N(0, I); the final step adds no noise.
DdmSample ddm_sample(const DdmModel& model, const TextEmbedding& embedding, std::uint64_t seed,
                     const SampleOptions& options = {});
DdmSample ddm_sample(const DdmModel& model, const std::string& prompt, std::uint64_t seed,
                     const SampleOptions& options = {});

// Timesteps visited by a respaced sampler, descending from T (size = steps).
std::vector<int> respaced_timesteps(int total_steps, int steps);

void save_ddm(const std::filesystem::path& path, const DdmModel& model);
DdmModel load_ddm(const std::filesystem::path& path);

}  // namespace moonshine
