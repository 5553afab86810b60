#pragma once

#include <functional>
#include <vector>

#include <json.hpp>

#include "moonshine/dataset.hpp"
#include "moonshine/embed.hpp"
#include "moonshine/map_grid.hpp"
#include "moonshine/nn/tensor.hpp"

namespace moonshine {

/// A target map with every caption embedding that describes it.
struct TrainExample {
  MapGrid map;
  std::vector<TextEmbedding> captions;
};

// Pairs each record with its 10 embeddings ("<id>/long/<i>", "<id>/short/<i>").
// Throws DataError when an embedding is missing or has the wrong dimension.
std::vector<TrainExample> make_examples(const std::vector<MapRecord>& records, const EmbeddingFile& embeddings);

struct PairRef {
  std::size_t example;
  std::size_t caption;
};

// (map, caption) training pairs: the first `captions_per_map` captions of every example.
// Throws DataError when an example has no captions.
std::vector<PairRef> training_pairs(const std::vector<TrainExample>& examples, int captions_per_map);

/// Per-epoch losses. Index 0 is the untrained model; index e is after epoch e.
struct LossHistory {
  std::vector<double> train;
  std::vector<double> validation;

  nlohmann::ordered_json to_json() const;
};

// Called after each epoch with (epoch, train loss, validation loss or NaN).
using EpochCallback = std::function<void(int, double, double)>;

// One-hot targets for a batch, laid out channels x (batch * H * W).
nn::Mat<float> one_hot_batch(const std::vector<const MapGrid*>& maps);

// Column n = embedding n.
nn::Mat<float> embedding_batch(const std::vector<const TextEmbedding*>& embeddings);

// Epoch of the lowest validation loss divided by the number of epochs; 1 means it never turned up.
double validation_minimum_position(const LossHistory& history);

}  // namespace moonshine
