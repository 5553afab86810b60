#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "moonshine/map_grid.hpp"

namespace moonshine {

struct IntRange {
  int lo = 0;
  int hi = 0;
};

// Relative weights of the lake fluid. Ice stands for a frozen lake.
struct FluidWeights {
  double water = 0.6;
  double lava = 0.3;
  double ice = 0.1;
};

struct GenConfig {
  std::uint64_t seed = 0;
  int height = kDefaultMapSize;
  int width = kDefaultMapSize;
  IntRange room_count{4, 9};
  double lake_probability = 0.6;
  FluidWeights lake_fluid{};
  int vegetation_passes = 3;
  int decoration_budget = 12;

  // Throws UsageError when a range is empty or a probability is outside [0,1].
  void validate() const;
};

/// A generated dungeon plus the generator's own region annotations.
/// Rooms and corridors are sorted flat cell indices. They are disjoint, hold
/// only walkable cells, and together cover every walkable cell.
struct GeneratedMap {
  MapGrid grid;
  std::vector<std::vector<int>> rooms;
  std::vector<std::vector<int>> corridors;
  std::uint64_t seed = 0;
};

// Room-accretion generator. Pure function of the config; always returns a map
// whose walkable cells form a single 4-connected component.
GeneratedMap generate(const GenConfig& config);

// Seed for corpus entry `index`.
std::uint64_t corpus_seed(std::uint64_t base_seed, std::uint64_t index);

// Streams `count` maps to `sink` in index order. Entry i is generate() with seed corpus_seed(base, i).
void generate_corpus(int count, std::uint64_t base_seed, const GenConfig& config,
                     const std::function<void(int, GeneratedMap&&)>& sink);

std::vector<GeneratedMap> generate_corpus(int count, std::uint64_t base_seed, const GenConfig& config);

}  // namespace moonshine
