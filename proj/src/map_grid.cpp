#include "moonshine/map_grid.hpp"

#include <queue>

namespace moonshine {

MapGrid::MapGrid(int height, int width, Tile fill) : height_(height), width_(width) {
  if (height <= 0 || width <= 0) throw DataError("map dimensions must be positive");
  cells_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), fill);
}

MapGrid::MapGrid(int height, int width, std::vector<Tile> cells)
    : height_(height), width_(width), cells_(std::move(cells)) {
  if (height <= 0 || width <= 0) throw DataError("map dimensions must be positive");
  if (cells_.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width)) {
    throw DataError("cell count does not match map dimensions");
  }
  for (Tile t : cells_) {
    if (!valid_tile_id(static_cast<int>(t))) throw DataError("invalid tile id in map");
  }
}

ComponentLabels walkable_components(const MapGrid& map) {
  ComponentLabels out;
  out.label.assign(static_cast<std::size_t>(map.size()), -1);
  std::queue<int> frontier;
  constexpr int dr[4] = {-1, 1, 0, 0};
  constexpr int dc[4] = {0, 0, -1, 1};
  for (int start = 0; start < map.size(); ++start) {
    if (!is_walkable(map[start]) || out.label[static_cast<std::size_t>(start)] >= 0) continue;
    const int id = out.count();
    int size = 0;
    out.label[static_cast<std::size_t>(start)] = id;
    frontier.push(start);
    while (!frontier.empty()) {
      const int cur = frontier.front();
      frontier.pop();
      ++size;
      const Cell c = map.cell_of(cur);
      for (int d = 0; d < 4; ++d) {
        const int r = c.row + dr[d];
        const int k = c.col + dc[d];
        if (!map.in_bounds(r, k)) continue;
        const int n = map.index(r, k);
        if (!is_walkable(map[n]) || out.label[static_cast<std::size_t>(n)] >= 0) continue;
        out.label[static_cast<std::size_t>(n)] = id;
        frontier.push(n);
      }
    }
    out.sizes.push_back(size);
  }
  return out;
}

std::array<int, kTileCount> tile_histogram(const MapGrid& map) {
  std::array<int, kTileCount> hist{};
  for (Tile t : map.cells()) ++hist[static_cast<std::size_t>(t)];
  return hist;
}

}  // namespace moonshine
