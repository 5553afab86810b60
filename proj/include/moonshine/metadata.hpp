#pragma once

#include <array>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "moonshine/dungeon.hpp"
#include "moonshine/map_grid.hpp"

namespace moonshine {

enum class Direction : std::uint8_t { NW, N, NE, W, C, E, SW, S, SE };

std::string_view direction_label(Direction d);
std::optional<Direction> direction_from_label(std::string_view label);
// "northwest", "north", ..., "central".
std::string_view direction_words(Direction d);

using TileCount = std::pair<Tile, int>;

struct RoomMeta {
  int room_id = 0;
  std::vector<Cell> cells;  // row-major order
  Direction direction = Direction::C;
  std::vector<TileCount> tile_counts;

  friend bool operator==(const RoomMeta&, const RoomMeta&) = default;
};

struct PathMeta {
  std::pair<int, int> room_pair;  // first < second
  std::vector<Cell> path_cells;

  friend bool operator==(const PathMeta&, const PathMeta&) = default;
};

struct MapMeta {
  std::vector<RoomMeta> rooms;
  std::vector<PathMeta> paths;

  friend bool operator==(const MapMeta&, const MapMeta&) = default;
};

struct Regions {
  std::vector<std::vector<int>> rooms;      // sorted flat indices
  std::vector<std::vector<int>> corridors;  // sorted flat indices
};

// Generator annotations are passed through unchanged.
Regions segment_regions(const GeneratedMap& generated);

// Structural fallback for bare grids: corridor = chain (>= 3 cells) of walkable
// cells with walkable-degree <= 2; rooms = remaining walkable components of
// size >= 4, with smaller fragments merged into the nearest room.
Regions segment_regions(const MapGrid& map);

// Thirds-based compass band of the cells' midpoint. Precondition: cells non-empty.
Direction assign_direction(const std::vector<Cell>& cells, int height, int width);

// Counts sorted by count descending, then tile id ascending.
std::vector<TileCount> tile_census(const std::vector<Cell>& cells, const MapGrid& map);

// Census over the whole grid, same ordering, zero counts omitted.
std::vector<TileCount> whole_map_census(const MapGrid& map);

std::vector<PathMeta> connected_pairs(const MapGrid& map, const Regions& regions);

MapMeta analyze(const MapGrid& map, const Regions& regions);
MapMeta analyze(const GeneratedMap& generated);
MapMeta analyze(const MapGrid& map);

nlohmann::ordered_json meta_to_json(const MapMeta& meta);
// Throws DataError on schema violations.
MapMeta meta_from_json(const nlohmann::json& j);

nlohmann::ordered_json regions_to_json(const Regions& regions);
Regions regions_from_json(const nlohmann::json& j, int cell_count);

}  // namespace moonshine
