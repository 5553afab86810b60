#include "moonshine/training.hpp"

#include <algorithm>
#include <unordered_map>

#include "moonshine/error.hpp"

namespace moonshine {

std::vector<TrainExample> make_examples(const std::vector<MapRecord>& records, const EmbeddingFile& embeddings) {
  std::unordered_map<std::string, std::size_t> index;
  index.reserve(embeddings.entries.size());
  for (std::size_t i = 0; i < embeddings.entries.size(); ++i) index.emplace(embeddings.entries[i].id, i);
  std::vector<TrainExample> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    TrainExample ex{r.grid, {}};
    for (int d = 0; d < kDescriptionCount; ++d) {
      const std::string id = description_id(r.id, d);
      const auto it = index.find(id);
      if (it == index.end()) throw DataError("no embedding for " + id);
      ex.captions.push_back(embeddings.entries[it->second].values);
    }
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<PairRef> training_pairs(const std::vector<TrainExample>& examples, int captions_per_map) {
  if (captions_per_map < 1) throw UsageError("captions per map must be at least 1");
  std::vector<PairRef> pairs;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (examples[i].captions.empty()) throw DataError("training example without captions");
    const std::size_t n = std::min(examples[i].captions.size(), static_cast<std::size_t>(captions_per_map));
    for (std::size_t c = 0; c < n; ++c) pairs.push_back({i, c});
  }
  return pairs;
}

nlohmann::ordered_json LossHistory::to_json() const {
  nlohmann::ordered_json j;
  j["train"] = train;
  j["validation"] = validation;
  return j;
}

nn::Mat<float> one_hot_batch(const std::vector<const MapGrid*>& maps) {
  if (maps.empty()) throw UsageError("empty batch");
  const int hw = maps.front()->size();
  nn::Mat<float> out = nn::Mat<float>::Zero(kTileCount, static_cast<Eigen::Index>(maps.size()) * hw);
  for (std::size_t n = 0; n < maps.size(); ++n) {
    if (maps[n]->size() != hw) throw DataError("maps in a batch must share one shape");
    const auto cells = maps[n]->cells();
    for (int p = 0; p < hw; ++p) out(tile_id(cells[static_cast<std::size_t>(p)]), static_cast<Eigen::Index>(n) * hw + p) = 1.0f;
  }
  return out;
}

nn::Mat<float> embedding_batch(const std::vector<const TextEmbedding*>& embeddings) {
  if (embeddings.empty()) throw UsageError("empty batch");
  const auto dim = embeddings.front()->size();
  nn::Mat<float> out(dim, static_cast<Eigen::Index>(embeddings.size()));
  for (std::size_t n = 0; n < embeddings.size(); ++n) {
    if (embeddings[n]->size() != dim) throw DataError("embedding dimension mismatch in batch");
    out.col(static_cast<Eigen::Index>(n)) = *embeddings[n];
  }
  return out;
}

double validation_minimum_position(const LossHistory& history) {
  if (history.validation.size() < 2) return 1.0;
  const auto best = std::min_element(history.validation.begin(), history.validation.end());
  return static_cast<double>(best - history.validation.begin()) / static_cast<double>(history.validation.size() - 1);
}

}  // namespace moonshine
