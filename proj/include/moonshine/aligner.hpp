#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "moonshine/embed.hpp"
#include "moonshine/map_grid.hpp"
#include "moonshine/nn/params.hpp"
#include "moonshine/training.hpp"

namespace moonshine {

struct AlignerConfig {
  int embed_dim = kDefaultEmbedDim;
  int proj_dim = 128;
  int height = kDefaultMapSize;
  int width = kDefaultMapSize;
  int channels = kTileCount;
  double lr = 1e-3;
  int epochs = 60;
  int batch_size = 32;
  int captions_per_map = kDescriptionCount;  // one of these is drawn per map each epoch
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::ordered_json to_json() const;
  static AlignerConfig from_json(const nlohmann::json& j);
};

/// Dual encoder: map branch = 3 x (conv3x3, GN, SiLU, avg-pool) -> flatten -> dense;
/// text branch = dense on the embedding; learned logit scale initialised to ln(1/0.07).
struct AlignerModel {
  AlignerConfig config;
  nn::ParamStore<float> params;
};

AlignerModel aligner_init(const AlignerConfig& cfg);

// Unit-norm projections, one column per input.
nn::Mat<float> aligner_map_features(const AlignerModel& model, const std::vector<const MapGrid*>& maps);
nn::Mat<float> aligner_text_features(const AlignerModel& model, const std::vector<const TextEmbedding*>& embeddings);

// Symmetric InfoNCE over in-batch negatives; batches hold distinct maps.
// Throws UsageError with fewer than 2 examples or batch_size < 2.
LossHistory train_aligner(AlignerModel& model, const std::vector<TrainExample>& train,
                          const std::vector<TrainExample>& validation, const EpochCallback& on_epoch = {});

// Mean loss over fixed batches (caption 0).
double aligner_evaluate(const AlignerModel& model, const std::vector<TrainExample>& examples);

// 100 * max(cos(map projection, text projection), 0).
double align_score(const AlignerModel& model, const TextEmbedding& prompt, const MapGrid& map);
double align_score(const AlignerModel& model, const std::string& prompt, const MapGrid& map);

// Fraction of examples whose caption-0 text ranks its own map first within consecutive
// groups of `group` examples (the last partial group is folded into the previous one).
double retrieval_accuracy(const AlignerModel& model, const std::vector<TrainExample>& examples, int group);

void save_aligner(const std::filesystem::path& path, const AlignerModel& model);
AlignerModel load_aligner(const std::filesystem::path& path);

}  // namespace moonshine
