#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "moonshine/dataset.hpp"
#include "moonshine/dungeon.hpp"
#include "moonshine/embed.hpp"
#include "moonshine/labeling.hpp"
#include "moonshine/metadata.hpp"
#include "moonshine/training.hpp"

namespace fixtures {

using namespace moonshine;

inline void fill_rect(MapGrid& m, int r0, int c0, int h, int w, Tile t) {
  for (int r = r0; r < r0 + h; ++r)
    for (int c = c0; c < c0 + w; ++c) m.at(r, c) = t;
}

// Depth-first flood fill written independently of the library's BFS labelling.
inline std::vector<int> component_sizes(const MapGrid& m) {
  std::vector<char> seen(static_cast<std::size_t>(m.size()), 0);
  std::vector<int> sizes;
  for (int start = 0; start < m.size(); ++start) {
    if (seen[static_cast<std::size_t>(start)] || !is_walkable(m[start])) continue;
    int size = 0;
    std::vector<int> stack{start};
    seen[static_cast<std::size_t>(start)] = 1;
    while (!stack.empty()) {
      const int i = stack.back();
      stack.pop_back();
      ++size;
      const int r = i / m.width(), c = i % m.width();
      const int nr[4] = {r - 1, r + 1, r, r};
      const int nc[4] = {c, c, c - 1, c + 1};
      for (int k = 0; k < 4; ++k) {
        if (nr[k] < 0 || nr[k] >= m.height() || nc[k] < 0 || nc[k] >= m.width()) continue;
        const int j = nr[k] * m.width() + nc[k];
        if (seen[static_cast<std::size_t>(j)] || !is_walkable(m[j])) continue;
        seen[static_cast<std::size_t>(j)] = 1;
        stack.push_back(j);
      }
    }
    sizes.push_back(size);
  }
  return sizes;
}

inline MapGrid random_map(std::mt19937_64& gen, int h = 32, int w = 32) {
  MapGrid m(h, w);
  std::uniform_int_distribution<int> tile(0, kTileCount - 1);
  for (int i = 0; i < m.size(); ++i) m[i] = tile_from_id(tile(gen));
  return m;
}

// Generated, analyzed and template-labeled records.
inline std::vector<MapRecord> labeled_records(int count, std::uint64_t seed) {
  std::vector<MapRecord> out;
  for (auto& g : generate_corpus(count, seed, GenConfig{})) {
    MapRecord r;
    r.id = record_id(static_cast<int>(out.size()));
    r.seed = g.seed;
    r.regions = segment_regions(g);
    r.meta = analyze(g);
    r.descriptions = template_label(*r.meta, whole_map_census(g.grid), g.seed);
    r.grid = std::move(g.grid);
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<TrainExample> examples(const std::vector<MapRecord>& records, int dim = kDefaultEmbedDim) {
  EmbedCorpusConfig cfg;
  cfg.dim = dim;
  return make_examples(records, embed_corpus(records, cfg));
}

// Examples on the central size x size crop of generated maps, with captions
// hashed at `dim` from the template labels.
inline std::vector<TrainExample> small_examples(int count, int size, int dim, std::uint64_t seed) {
  std::vector<TrainExample> out;
  const int offset = (kDefaultMapSize - size) / 2;
  for (const auto& r : labeled_records(count, seed)) {
    TrainExample ex;
    ex.map = MapGrid(size, size);
    for (int i = 0; i < size; ++i)
      for (int j = 0; j < size; ++j) ex.map.at(i, j) = r.grid.at(i + offset, j + offset);
    for (int k = 0; k < kDescriptionCount; ++k) ex.captions.push_back(hashed_embed(r.descriptions->at(k), dim));
    out.push_back(std::move(ex));
  }
  return out;
}

inline double cell_accuracy(const MapGrid& a, const MapGrid& b) {
  int same = 0;
  for (int i = 0; i < a.size(); ++i) same += a[i] == b[i];
  return static_cast<double>(same) / a.size();
}

// Unique scratch directory under the system temp dir, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path = std::filesystem::temp_directory_path() / ("moonshine-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::filesystem::path operator/(const std::string& name) const { return path / name; }
};

}  // namespace fixtures
