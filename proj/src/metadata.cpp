#include "moonshine/metadata.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>

namespace moonshine {

namespace {

constexpr std::array<std::string_view, 9> kDirectionLabels{"NW", "N", "NE", "W", "C", "E", "SW", "S", "SE"};
constexpr std::array<std::string_view, 9> kDirectionWords{"northwest", "north", "northeast", "west",     "central",
                                                          "east",      "southwest", "south", "southeast"};
constexpr int kDr[4] = {-1, 1, 0, 0};
constexpr int kDc[4] = {0, 0, -1, 1};

// 4-connected components of the cells accepted by `member`, ordered by smallest index.
template <typename Pred>
std::vector<std::vector<int>> components(const MapGrid& map, Pred&& member) {
  std::vector<int> seen(static_cast<std::size_t>(map.size()), 0);
  std::vector<std::vector<int>> out;
  for (int start = 0; start < map.size(); ++start) {
    if (seen[static_cast<std::size_t>(start)] || !member(start)) continue;
    std::vector<int> comp{start};
    seen[static_cast<std::size_t>(start)] = 1;
    for (std::size_t q = 0; q < comp.size(); ++q) {
      const Cell c = map.cell_of(comp[q]);
      for (int d = 0; d < 4; ++d) {
        const int r = c.row + kDr[d], k = c.col + kDc[d];
        if (!map.in_bounds(r, k)) continue;
        const int n = map.index(r, k);
        if (seen[static_cast<std::size_t>(n)] || !member(n)) continue;
        seen[static_cast<std::size_t>(n)] = 1;
        comp.push_back(n);
      }
    }
    std::sort(comp.begin(), comp.end());
    out.push_back(std::move(comp));
  }
  return out;
}

std::vector<Cell> to_cells(const MapGrid& map, const std::vector<int>& idx) {
  std::vector<Cell> cells;
  cells.reserve(idx.size());
  for (int i : idx) cells.push_back(map.cell_of(i));
  return cells;
}

nlohmann::ordered_json cells_json(const std::vector<Cell>& cells) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& c : cells) arr.push_back({c.row, c.col});
  return arr;
}

std::vector<Cell> cells_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw DataError("cells must be an array of [row, col] pairs");
  std::vector<Cell> out;
  out.reserve(j.size());
  for (const auto& p : j) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer() || !p[1].is_number_integer()) {
      throw DataError("cells must be an array of [row, col] pairs");
    }
    out.push_back({p[0].get<int>(), p[1].get<int>()});
  }
  return out;
}

}  // namespace

std::string_view direction_label(Direction d) { return kDirectionLabels[static_cast<std::size_t>(d)]; }

std::string_view direction_words(Direction d) { return kDirectionWords[static_cast<std::size_t>(d)]; }

std::optional<Direction> direction_from_label(std::string_view label) {
  for (std::size_t i = 0; i < kDirectionLabels.size(); ++i) {
    if (kDirectionLabels[i] == label) return static_cast<Direction>(i);
  }
  return std::nullopt;
}

Regions segment_regions(const GeneratedMap& generated) { return {generated.rooms, generated.corridors}; }

Regions segment_regions(const MapGrid& map) {
  Regions out;
  auto walkable = [&](int i) { return is_walkable(map[i]); };
  auto degree = [&](int i) {
    const Cell c = map.cell_of(i);
    int n = 0;
    for (int d = 0; d < 4; ++d) {
      const int r = c.row + kDr[d], k = c.col + kDc[d];
      if (map.in_bounds(r, k) && walkable(map.index(r, k))) ++n;
    }
    return n;
  };

  std::vector<int> in_corridor(static_cast<std::size_t>(map.size()), 0);
  for (auto& chain : components(map, [&](int i) { return walkable(i) && degree(i) <= 2; })) {
    if (chain.size() < 3) continue;
    for (int i : chain) in_corridor[static_cast<std::size_t>(i)] = 1;
    out.corridors.push_back(std::move(chain));
  }

  std::vector<std::vector<int>> fragments;
  for (auto& comp : components(map, [&](int i) { return walkable(i) && !in_corridor[static_cast<std::size_t>(i)]; })) {
    if (comp.size() >= 4) {
      out.rooms.push_back(std::move(comp));
    } else {
      fragments.push_back(std::move(comp));
    }
  }
  if (out.rooms.empty()) {
    out.rooms = std::move(fragments);
    return out;
  }
  // Fragments join the room with the smallest Manhattan distance; ties go to the lower room id.
  std::vector<std::vector<int>> extra(out.rooms.size());
  for (const auto& frag : fragments) {
    std::size_t best = 0;
    int best_dist = std::numeric_limits<int>::max();
    for (std::size_t r = 0; r < out.rooms.size(); ++r) {
      for (int a : frag) {
        const Cell ca = map.cell_of(a);
        for (int b : out.rooms[r]) {
          const Cell cb = map.cell_of(b);
          const int dist = std::abs(ca.row - cb.row) + std::abs(ca.col - cb.col);
          if (dist < best_dist) {
            best_dist = dist;
            best = r;
          }
        }
      }
    }
    extra[best].insert(extra[best].end(), frag.begin(), frag.end());
  }
  for (std::size_t r = 0; r < out.rooms.size(); ++r) {
    out.rooms[r].insert(out.rooms[r].end(), extra[r].begin(), extra[r].end());
    std::sort(out.rooms[r].begin(), out.rooms[r].end());
  }
  return out;
}

Direction assign_direction(const std::vector<Cell>& cells, int height, int width) {
  double sr = 0.0, sc = 0.0;
  for (const auto& c : cells) {
    sr += c.row;
    sc += c.col;
  }
  const double n = static_cast<double>(std::max<std::size_t>(cells.size(), 1));
  const double mr = sr / n, mc = sc / n;
  const int br = std::clamp(static_cast<int>(std::floor(3.0 * mr / height)), 0, 2);
  const int bc = std::clamp(static_cast<int>(std::floor(3.0 * mc / width)), 0, 2);
  return static_cast<Direction>(br * 3 + bc);
}

namespace {

std::vector<TileCount> sorted_counts(const std::array<int, kTileCount>& hist) {
  std::vector<TileCount> out;
  for (int k = 0; k < kTileCount; ++k)
    if (hist[static_cast<std::size_t>(k)] > 0) out.emplace_back(tile_from_id(k), hist[static_cast<std::size_t>(k)]);
  std::stable_sort(out.begin(), out.end(), [](const TileCount& a, const TileCount& b) { return a.second > b.second; });
  return out;
}

}  // namespace

std::vector<TileCount> tile_census(const std::vector<Cell>& cells, const MapGrid& map) {
  std::array<int, kTileCount> hist{};
  for (const auto& c : cells) {
    if (!map.in_bounds(c.row, c.col)) throw DataError("census cell out of bounds");
    ++hist[static_cast<std::size_t>(map.at(c.row, c.col))];
  }
  return sorted_counts(hist);
}

std::vector<TileCount> whole_map_census(const MapGrid& map) { return sorted_counts(tile_histogram(map)); }

std::vector<PathMeta> connected_pairs(const MapGrid& map, const Regions& regions) {
  std::vector<int> room_of(static_cast<std::size_t>(map.size()), -1);
  for (std::size_t r = 0; r < regions.rooms.size(); ++r)
    for (int i : regions.rooms[r]) room_of[static_cast<std::size_t>(i)] = static_cast<int>(r);

  std::map<std::pair<int, int>, PathMeta> pairs;
  std::vector<int> member(static_cast<std::size_t>(map.size()), 0);
  for (const auto& corridor : regions.corridors) {
    if (corridor.empty()) continue;
    for (int i : corridor) member[static_cast<std::size_t>(i)] = 1;

    auto neighbors = [&](int i, auto&& fn) {
      const Cell c = map.cell_of(i);
      for (int d = 0; d < 4; ++d) {
        const int r = c.row + kDr[d], k = c.col + kDc[d];
        if (map.in_bounds(r, k)) fn(map.index(r, k));
      }
    };
    // BFS distances and parents inside the corridor from `src`.
    auto bfs = [&](int src) {
      std::map<int, std::pair<int, int>> info;  // cell -> (dist, parent)
      std::queue<int> q;
      info[src] = {0, -1};
      q.push(src);
      while (!q.empty()) {
        const int cur = q.front();
        q.pop();
        neighbors(cur, [&](int n) {
          if (!member[static_cast<std::size_t>(n)] || info.contains(n)) return;
          info[n] = {info[cur].first + 1, cur};
          q.push(n);
        });
      }
      return info;
    };

    int end_a = corridor.front();
    for (int i : corridor) {
      int deg = 0;
      neighbors(i, [&](int n) { deg += member[static_cast<std::size_t>(n)]; });
      if (deg <= 1) {
        end_a = i;
        break;
      }
    }
    auto from_a = bfs(end_a);
    int end_b = end_a;
    for (const auto& [cell, di] : from_a)
      if (di.first > from_a[end_b].first) end_b = cell;
    auto from_b = bfs(end_b);

    // Nearest room to an endpoint: smallest corridor distance to a contact cell.
    struct Contact {
      int room = -1;
      int dist = std::numeric_limits<int>::max();
      int cell = -1;
    };
    auto nearest = [&](const std::map<int, std::pair<int, int>>& dist, int exclude) {
      Contact best;
      for (int i : corridor) {
        auto it = dist.find(i);
        if (it == dist.end()) continue;
        neighbors(i, [&](int n) {
          const int r = room_of[static_cast<std::size_t>(n)];
          if (r < 0 || r == exclude) return;
          const int d = it->second.first;
          if (d < best.dist || (d == best.dist && r < best.room)) best = {r, d, i};
        });
      }
      return best;
    };
    const Contact first = nearest(from_a, -1);
    const Contact second = nearest(from_b, first.room);
    for (int i : corridor) member[static_cast<std::size_t>(i)] = 0;
    if (first.room < 0 || second.room < 0) continue;

    for (int i : corridor) member[static_cast<std::size_t>(i)] = 1;
    auto from_first = bfs(first.cell);
    for (int i : corridor) member[static_cast<std::size_t>(i)] = 0;
    if (!from_first.contains(second.cell)) continue;
    std::vector<Cell> path;
    for (int i = second.cell; i >= 0; i = from_first[i].second) path.push_back(map.cell_of(i));
    std::reverse(path.begin(), path.end());

    auto key = std::minmax(first.room, second.room);
    if (first.room > second.room) std::reverse(path.begin(), path.end());
    auto it = pairs.find(key);
    if (it == pairs.end() || path.size() < it->second.path_cells.size()) {
      pairs[key] = PathMeta{key, std::move(path)};
    }
  }
  std::vector<PathMeta> out;
  out.reserve(pairs.size());
  for (auto& [k, v] : pairs) out.push_back(std::move(v));
  return out;
}

MapMeta analyze(const MapGrid& map, const Regions& regions) {
  MapMeta meta;
  for (std::size_t r = 0; r < regions.rooms.size(); ++r) {
    RoomMeta room;
    room.room_id = static_cast<int>(r);
    std::vector<int> idx = regions.rooms[r];
    std::sort(idx.begin(), idx.end());
    room.cells = to_cells(map, idx);
    if (room.cells.empty()) continue;
    room.direction = assign_direction(room.cells, map.height(), map.width());
    room.tile_counts = tile_census(room.cells, map);
    meta.rooms.push_back(std::move(room));
  }
  meta.paths = connected_pairs(map, regions);
  return meta;
}

MapMeta analyze(const GeneratedMap& generated) { return analyze(generated.grid, segment_regions(generated)); }

MapMeta analyze(const MapGrid& map) { return analyze(map, segment_regions(map)); }

nlohmann::ordered_json meta_to_json(const MapMeta& meta) {
  nlohmann::ordered_json j;
  j["rooms"] = nlohmann::ordered_json::array();
  for (const auto& room : meta.rooms) {
    nlohmann::ordered_json r;
    r["id"] = room.room_id;
    r["direction"] = std::string(direction_label(room.direction));
    auto tiles = nlohmann::ordered_json::array();
    for (const auto& [tile, count] : room.tile_counts) tiles.push_back({std::string(tile_name(tile)), count});
    r["tiles"] = std::move(tiles);
    r["cells"] = cells_json(room.cells);
    j["rooms"].push_back(std::move(r));
  }
  j["paths"] = nlohmann::ordered_json::array();
  for (const auto& path : meta.paths) {
    nlohmann::ordered_json p;
    p["rooms"] = {path.room_pair.first, path.room_pair.second};
    p["cells"] = cells_json(path.path_cells);
    j["paths"].push_back(std::move(p));
  }
  return j;
}

MapMeta meta_from_json(const nlohmann::json& j) {
  try {
    MapMeta meta;
    for (const auto& r : j.at("rooms")) {
      RoomMeta room;
      room.room_id = r.at("id").get<int>();
      const auto dir = direction_from_label(r.at("direction").get<std::string>());
      if (!dir) throw DataError("unknown direction label");
      room.direction = *dir;
      for (const auto& t : r.at("tiles")) {
        const auto tile = tile_from_name(t.at(0).get<std::string>());
        if (!tile) throw DataError("unknown tile name in census");
        room.tile_counts.emplace_back(*tile, t.at(1).get<int>());
      }
      room.cells = cells_from_json(r.at("cells"));
      meta.rooms.push_back(std::move(room));
    }
    for (const auto& p : j.at("paths")) {
      PathMeta path;
      path.room_pair = {p.at("rooms").at(0).get<int>(), p.at("rooms").at(1).get<int>()};
      path.path_cells = cells_from_json(p.at("cells"));
      meta.paths.push_back(std::move(path));
    }
    return meta;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed meta: ") + e.what());
  }
}

nlohmann::ordered_json regions_to_json(const Regions& regions) {
  nlohmann::ordered_json j;
  j["rooms"] = regions.rooms;
  j["corridors"] = regions.corridors;
  return j;
}

Regions regions_from_json(const nlohmann::json& j, int cell_count) {
  try {
    Regions out;
    out.rooms = j.at("rooms").get<std::vector<std::vector<int>>>();
    out.corridors = j.at("corridors").get<std::vector<std::vector<int>>>();
    for (const auto* list : {&out.rooms, &out.corridors}) {
      for (const auto& region : *list)
        for (int i : region)
          if (i < 0 || i >= cell_count) throw DataError("region cell index out of range");
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed regions: ") + e.what());
  }
}

}  // namespace moonshine
