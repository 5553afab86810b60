#include "moonshine/dungeon.hpp"

#include <algorithm>
#include <array>
#include <queue>
#include <unordered_set>

#include "moonshine/rng.hpp"

namespace moonshine {

void GenConfig::validate() const {
  if (height < 8 || width < 8) throw UsageError("map dimensions must be at least 8");
  if (room_count.lo < 1 || room_count.hi < room_count.lo) throw UsageError("room count range is empty");
  if (lake_probability < 0.0 || lake_probability > 1.0) throw UsageError("lake probability must lie in [0,1]");
  if (lake_fluid.water < 0 || lake_fluid.lava < 0 || lake_fluid.ice < 0 ||
      lake_fluid.water + lake_fluid.lava + lake_fluid.ice <= 0) {
    throw UsageError("lake fluid weights must be non-negative with a positive sum");
  }
  if (vegetation_passes < 0) throw UsageError("vegetation passes must be non-negative");
  if (decoration_budget < 0) throw UsageError("decoration budget must be non-negative");
}

std::uint64_t corpus_seed(std::uint64_t base_seed, std::uint64_t index) { return derive_seed(base_seed, index); }

namespace {

constexpr int kDr[4] = {-1, 1, 0, 0};
constexpr int kDc[4] = {0, 0, -1, 1};
constexpr int kDr8[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
constexpr int kDc8[8] = {-1, 0, 1, -1, 1, -1, 0, 1};

struct Shape {
  std::vector<Cell> cells;  // relative offsets
};

Shape rect_shape(int h, int w) {
  Shape s;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) s.cells.push_back({r, c});
  return s;
}

Shape cross_shape(Rng& rng) {
  const int h1 = rng.range(3, 4), w1 = rng.range(5, 8);
  const int h2 = rng.range(5, 8), w2 = rng.range(3, 4);
  std::vector<Cell> cells;
  const int r1 = (h2 - h1) / 2;
  const int c2 = (w1 - w2) / 2;
  for (int r = 0; r < h1; ++r)
    for (int c = 0; c < w1; ++c) cells.push_back({r + r1, c});
  for (int r = 0; r < h2; ++r)
    for (int c = 0; c < w2; ++c) cells.push_back({r, c + c2});
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  return {cells};
}

// Two-pass cellular-automata blob, largest 4-connected piece.
Shape cave_shape(Rng& rng, int h, int w) {
  std::vector<int> on(static_cast<std::size_t>(h * w));
  for (auto& v : on) v = rng.chance(0.55) ? 1 : 0;
  for (int pass = 0; pass < 2; ++pass) {
    std::vector<int> next(on.size());
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        int n = 0;
        for (int d = 0; d < 8; ++d) {
          const int rr = r + kDr8[d], cc = c + kDc8[d];
          if (rr >= 0 && rr < h && cc >= 0 && cc < w) n += on[static_cast<std::size_t>(rr * w + cc)];
        }
        const int self = on[static_cast<std::size_t>(r * w + c)];
        next[static_cast<std::size_t>(r * w + c)] = (self && n >= 4) || (!self && n >= 5) ? 1 : 0;
      }
    }
    on.swap(next);
  }
  std::vector<int> label(on.size(), -1);
  std::vector<int> best;
  for (int start = 0; start < h * w; ++start) {
    if (!on[static_cast<std::size_t>(start)] || label[static_cast<std::size_t>(start)] >= 0) continue;
    std::vector<int> comp{start};
    label[static_cast<std::size_t>(start)] = start;
    for (std::size_t q = 0; q < comp.size(); ++q) {
      const int r = comp[q] / w, c = comp[q] % w;
      for (int d = 0; d < 4; ++d) {
        const int rr = r + kDr[d], cc = c + kDc[d];
        if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
        const int n = rr * w + cc;
        if (!on[static_cast<std::size_t>(n)] || label[static_cast<std::size_t>(n)] >= 0) continue;
        label[static_cast<std::size_t>(n)] = start;
        comp.push_back(n);
      }
    }
    if (comp.size() > best.size()) best = std::move(comp);
  }
  Shape s;
  std::sort(best.begin(), best.end());
  for (int idx : best) s.cells.push_back({idx / w, idx % w});
  return s;
}

class Builder {
 public:
  Builder(const GenConfig& cfg, std::uint64_t seed)
      : cfg_(cfg), rng_(seed), grid_(cfg.height, cfg.width, Tile::None),
        room_of_(static_cast<std::size_t>(grid_.size()), -1), corridor_of_(static_cast<std::size_t>(grid_.size()), -1) {}

  // Returns false when fewer rooms than the configured minimum could be placed.
  bool run() {
    carve_seed_room();
    const int target = rng_.range(cfg_.room_count.lo, cfg_.room_count.hi);
    for (int attempt = 0; attempt < 400 && room_count_ < target; ++attempt) try_accrete();
    if (room_count_ < cfg_.room_count.lo) return false;
    add_extra_corridors();
    if (rng_.chance(cfg_.lake_probability)) add_lake();
    grow_vegetation();
    decorate();
    repair_connectivity();
    fix_bridges();
    return true;
  }

  GeneratedMap finish(std::uint64_t seed) && {
    GeneratedMap out{std::move(grid_), {}, {}, seed};
    std::vector<std::vector<int>> rooms(static_cast<std::size_t>(room_count_));
    std::vector<std::vector<int>> corridors(static_cast<std::size_t>(corridor_count_));
    for (int idx = 0; idx < out.grid.size(); ++idx) {
      if (!is_walkable(out.grid[idx])) continue;
      const auto i = static_cast<std::size_t>(idx);
      if (room_of_[i] >= 0) {
        rooms[static_cast<std::size_t>(room_of_[i])].push_back(idx);
      } else if (corridor_of_[i] >= 0) {
        corridors[static_cast<std::size_t>(corridor_of_[i])].push_back(idx);
      } else {
        // Every carving step assigns an owner; keep the partition total regardless.
        corridors.push_back({idx});
      }
    }
    for (auto& r : rooms)
      if (!r.empty()) out.rooms.push_back(std::move(r));
    for (auto& c : corridors)
      if (!c.empty()) out.corridors.push_back(std::move(c));
    return out;
  }

 private:
  int idx(int r, int c) const { return grid_.index(r, c); }
  bool interior(int r, int c) const { return r >= 1 && r < grid_.height() - 1 && c >= 1 && c < grid_.width() - 1; }
  bool carved(int i) const { return grid_[i] != Tile::None; }
  int& room_at(int i) { return room_of_[static_cast<std::size_t>(i)]; }
  int& corridor_at(int i) { return corridor_of_[static_cast<std::size_t>(i)]; }

  void stamp_room(const std::vector<int>& cells) {
    for (int i : cells) {
      grid_[i] = Tile::Ground;
      room_at(i) = room_count_;
    }
    room_cells_.push_back(cells);
    ++room_count_;
  }

  void stamp_corridor(const std::vector<int>& cells) {
    for (int i : cells) {
      if (!is_walkable(grid_[i])) grid_[i] = Tile::Ground;
      corridor_at(i) = corridor_count_;
    }
    ++corridor_count_;
  }

  Shape propose_shape() {
    const double u = rng_.uniform();
    if (u < 0.6) return rect_shape(rng_.range(3, 6), rng_.range(3, 8));
    if (u < 0.8) return cross_shape(rng_);
    Shape cave = cave_shape(rng_, rng_.range(6, 8), rng_.range(7, 10));
    if (cave.cells.size() < 10) return rect_shape(rng_.range(3, 5), rng_.range(4, 7));
    return cave;
  }

  void carve_seed_room() {
    Shape shape = rng_.chance(0.35) ? cave_shape(rng_, 10, 12) : rect_shape(rng_.range(4, 7), rng_.range(4, 8));
    if (shape.cells.size() < 12) shape = rect_shape(rng_.range(4, 7), rng_.range(4, 8));
    int max_r = 0, max_c = 0;
    for (auto c : shape.cells) {
      max_r = std::max(max_r, c.row);
      max_c = std::max(max_c, c.col);
    }
    const int top = std::clamp(grid_.height() / 2 - (max_r + 1) / 2 + rng_.range(-4, 4), 1, grid_.height() - 2 - max_r);
    const int left = std::clamp(grid_.width() / 2 - (max_c + 1) / 2 + rng_.range(-4, 4), 1, grid_.width() - 2 - max_c);
    std::vector<int> cells;
    for (auto c : shape.cells) cells.push_back(idx(top + c.row, left + c.col));
    stamp_room(cells);
  }

  // Attach a new room to an existing room's wall through a straight hallway.
  void try_accrete() {
    const int parent = static_cast<int>(rng_.below(static_cast<std::uint64_t>(room_count_)));
    const auto& pcells = room_cells_[static_cast<std::size_t>(parent)];
    const int from = pcells[rng_.below(pcells.size())];
    const int dir = static_cast<int>(rng_.below(4));
    const Cell fc = grid_.cell_of(from);
    const int door_r = fc.row + kDr[dir], door_c = fc.col + kDc[dir];
    if (!interior(door_r, door_c) || carved(idx(door_r, door_c))) return;

    const int len = rng_.range(2, 5);
    std::vector<Cell> hall;
    for (int k = 0; k < len; ++k) hall.push_back({door_r + kDr[dir] * k, door_c + kDc[dir] * k});
    const Cell anchor{hall.back().row + kDr[dir], hall.back().col + kDc[dir]};

    const Shape shape = propose_shape();
    std::vector<Cell> facing;
    std::unordered_set<int> rel;
    for (auto c : shape.cells) rel.insert(c.row * 64 + c.col);
    for (auto c : shape.cells)
      if (!rel.contains((c.row - kDr[dir]) * 64 + (c.col - kDc[dir]))) facing.push_back(c);
    const Cell pick = facing[rng_.below(facing.size())];
    const int dr = anchor.row - pick.row, dc = anchor.col - pick.col;

    std::vector<int> room;
    std::unordered_set<int> room_set, hall_set;
    for (auto c : shape.cells) {
      const int r = c.row + dr, k = c.col + dc;
      if (!interior(r, k)) return;
      room.push_back(idx(r, k));
    }
    room_set.insert(room.begin(), room.end());
    std::vector<int> hall_idx;
    for (auto c : hall) {
      if (!interior(c.row, c.col)) return;
      hall_idx.push_back(idx(c.row, c.col));
    }
    hall_set.insert(hall_idx.begin(), hall_idx.end());

    for (int i : room) {
      if (carved(i)) return;
      const Cell c = grid_.cell_of(i);
      for (int d = 0; d < 8; ++d) {
        const int r = c.row + kDr8[d], k = c.col + kDc8[d];
        if (!grid_.in_bounds(r, k)) continue;
        const int n = idx(r, k);
        if (room_set.contains(n)) continue;
        if (carved(n)) return;
        if (hall_set.contains(n) && n != hall_idx.back()) return;
      }
    }
    for (std::size_t h = 0; h < hall_idx.size(); ++h) {
      const int i = hall_idx[h];
      if (carved(i) || room_set.contains(i)) return;
      const Cell c = grid_.cell_of(i);
      for (int d = 0; d < 8; ++d) {
        const int r = c.row + kDr8[d], k = c.col + kDc8[d];
        if (!grid_.in_bounds(r, k)) continue;
        const int n = idx(r, k);
        if (hall_set.contains(n)) continue;
        if (carved(n)) {
          if (h != 0 || room_at(n) != parent) return;
        } else if (room_set.contains(n) && h + 1 != hall_idx.size()) {
          return;
        }
      }
    }
    stamp_corridor(hall_idx);
    stamp_room(room);
  }

  // L-shaped extra corridors between existing rooms, accepted only when they
  // touch nothing but their two end rooms.
  void add_extra_corridors() {
    if (room_count_ < 3) return;
    const int wanted = rng_.range(0, 3);
    int added = 0;
    for (int attempt = 0; attempt < 40 && added < wanted; ++attempt) {
      const int a = static_cast<int>(rng_.below(static_cast<std::uint64_t>(room_count_)));
      const int b = static_cast<int>(rng_.below(static_cast<std::uint64_t>(room_count_)));
      if (a == b) continue;
      const auto& ac = room_cells_[static_cast<std::size_t>(a)];
      const auto& bc = room_cells_[static_cast<std::size_t>(b)];
      const Cell p = grid_.cell_of(ac[rng_.below(ac.size())]);
      const Cell q = grid_.cell_of(bc[rng_.below(bc.size())]);
      const bool horizontal_first = rng_.chance(0.5);
      std::vector<int> path;
      Cell cur = p;
      path.push_back(idx(cur.row, cur.col));
      auto walk_to = [&](bool horiz) {
        if (horiz) {
          while (cur.col != q.col) {
            cur.col += cur.col < q.col ? 1 : -1;
            path.push_back(idx(cur.row, cur.col));
          }
        } else {
          while (cur.row != q.row) {
            cur.row += cur.row < q.row ? 1 : -1;
            path.push_back(idx(cur.row, cur.col));
          }
        }
      };
      walk_to(horizontal_first);
      walk_to(!horizontal_first);

      int first_b = -1;
      for (std::size_t k = 0; k < path.size(); ++k) {
        if (room_at(path[k]) == b) {
          first_b = static_cast<int>(k);
          break;
        }
      }
      int last_a = -1;
      for (int k = 0; k < first_b; ++k)
        if (room_at(path[static_cast<std::size_t>(k)]) == a) last_a = k;
      if (last_a < 0 || first_b - last_a < 3) continue;
      std::vector<int> seg(path.begin() + last_a + 1, path.begin() + first_b);
      std::unordered_set<int> seg_set(seg.begin(), seg.end());
      bool ok = true;
      for (std::size_t s = 0; s < seg.size() && ok; ++s) {
        const Cell c = grid_.cell_of(seg[s]);
        if (!interior(c.row, c.col) || carved(seg[s])) {
          ok = false;
          break;
        }
        for (int d = 0; d < 8 && ok; ++d) {
          const int r = c.row + kDr8[d], k = c.col + kDc8[d];
          if (!grid_.in_bounds(r, k)) continue;
          const int n = idx(r, k);
          if (seg_set.contains(n) || !carved(n)) continue;
          const bool touches_a = s == 0 && room_at(n) == a;
          const bool touches_b = s + 1 == seg.size() && room_at(n) == b;
          if (!touches_a && !touches_b) ok = false;
        }
      }
      if (!ok) continue;
      stamp_corridor(seg);
      ++added;
    }
  }

  // Room cells touching a corridor stay dry so every hallway keeps its rooms.
  bool protected_cell(int i) const {
    if (room_of_[static_cast<std::size_t>(i)] < 0) return false;
    const Cell c = grid_.cell_of(i);
    for (int d = 0; d < 4; ++d) {
      const int r = c.row + kDr[d], k = c.col + kDc[d];
      if (grid_.in_bounds(r, k) && corridor_of_[static_cast<std::size_t>(idx(r, k))] >= 0) return true;
    }
    return false;
  }

  int walkable_room_cells(int room) const {
    int n = 0;
    for (int i : room_cells_[static_cast<std::size_t>(room)])
      if (is_walkable(grid_[i]) && room_of_[static_cast<std::size_t>(i)] == room) ++n;
    return n;
  }

  int room_floor(int room) const {
    const int size = static_cast<int>(room_cells_[static_cast<std::size_t>(room)].size());
    return std::max(4, (size * 2) / 5);
  }

  void add_lake() {
    const double total = cfg_.lake_fluid.water + cfg_.lake_fluid.lava + cfg_.lake_fluid.ice;
    const double u = rng_.uniform() * total;
    const Tile fluid = u < cfg_.lake_fluid.water ? Tile::Water
                       : u < cfg_.lake_fluid.water + cfg_.lake_fluid.lava ? Tile::Lava
                                                                           : Tile::Ice;
    const int size = rng_.range(20, 120);
    Cell cur;
    if (rng_.chance(0.5)) {
      const auto& cells = room_cells_[rng_.below(static_cast<std::uint64_t>(room_count_))];
      cur = grid_.cell_of(cells[rng_.below(cells.size())]);
    } else {
      cur = {rng_.range(2, grid_.height() - 3), rng_.range(2, grid_.width() - 3)};
    }
    std::vector<int> blob;
    std::unordered_set<int> in_blob;
    for (int step = 0; step < size * 12 && static_cast<int>(blob.size()) < size; ++step) {
      const int i = idx(cur.row, cur.col);
      if (in_blob.insert(i).second) blob.push_back(i);
      const int d = static_cast<int>(rng_.below(4));
      const int r = cur.row + kDr[d], k = cur.col + kDc[d];
      if (interior(r, k)) cur = {r, k};
    }

    std::vector<int> remaining(static_cast<std::size_t>(room_count_));
    for (int r = 0; r < room_count_; ++r) remaining[static_cast<std::size_t>(r)] = walkable_room_cells(r);
    for (int i : blob) {
      const int room = room_at(i);
      if (fluid == Tile::Ice) {
        if (room >= 0 && grid_[i] == Tile::Ground) grid_[i] = Tile::Ice;
        continue;
      }
      if (corridor_at(i) >= 0) {
        grid_[i] = Tile::Bridge;
      } else if (room >= 0) {
        if (protected_cell(i) || remaining[static_cast<std::size_t>(room)] - 1 < room_floor(room)) continue;
        --remaining[static_cast<std::size_t>(room)];
        grid_[i] = fluid;
        room_at(i) = -1;
      } else if (!carved(i)) {
        grid_[i] = fluid;
      }
    }
  }

  void grow_vegetation() {
    std::vector<int> ground;
    for (int i = 0; i < grid_.size(); ++i)
      if (grid_[i] == Tile::Ground && room_at(i) >= 0) ground.push_back(i);
    if (ground.empty()) return;
    const int seeds = rng_.range(1, 5);
    for (int s = 0; s < seeds; ++s) {
      const int i = ground[rng_.below(ground.size())];
      grid_[i] = rng_.chance(0.6) ? Tile::Grass : Tile::Fungus;
    }
    for (int pass = 0; pass < cfg_.vegetation_passes; ++pass) {
      std::vector<int> growing;
      for (int i = 0; i < grid_.size(); ++i)
        if (grid_[i] == Tile::Grass || grid_[i] == Tile::Fungus) growing.push_back(i);
      for (int i : growing) {
        const Cell c = grid_.cell_of(i);
        for (int d = 0; d < 4; ++d) {
          const int r = c.row + kDr[d], k = c.col + kDc[d];
          if (!grid_.in_bounds(r, k)) continue;
          const int n = idx(r, k);
          if (grid_[n] == Tile::Ground && rng_.chance(0.4)) grid_[n] = grid_[i];
        }
      }
    }
  }

  bool water_adjacent(int i) const {
    const Cell c = grid_.cell_of(i);
    for (int d = 0; d < 4; ++d) {
      const int r = c.row + kDr[d], k = c.col + kDc[d];
      if (grid_.in_bounds(r, k) && grid_[idx(r, k)] == Tile::Water) return true;
    }
    return false;
  }

  bool sand_biome() {
    const int room = static_cast<int>(rng_.below(static_cast<std::uint64_t>(room_count_)));
    bool changed = false;
    for (int i : room_cells_[static_cast<std::size_t>(room)]) {
      if (room_at(i) == room && grid_[i] == Tile::Ground && rng_.chance(0.85)) {
        grid_[i] = Tile::Sand;
        changed = true;
      }
    }
    return changed;
  }

  // Spread `tile` over cells accepted by `eligible`, starting from a random eligible seed.
  template <typename Pred>
  int patch(Tile tile, int max_cells, Pred&& eligible) {
    std::vector<int> seeds;
    for (int i = 0; i < grid_.size(); ++i)
      if (eligible(i)) seeds.push_back(i);
    if (seeds.empty()) return 0;
    std::vector<int> queue{seeds[rng_.below(seeds.size())]};
    std::unordered_set<int> seen{queue.front()};
    int placed = 0;
    for (std::size_t q = 0; q < queue.size() && placed < max_cells; ++q) {
      const int i = queue[q];
      if (!eligible(i)) continue;
      grid_[i] = tile;
      ++placed;
      const Cell c = grid_.cell_of(i);
      std::array<int, 4> order{0, 1, 2, 3};
      rng_.shuffle(order);
      for (int d : order) {
        const int r = c.row + kDr[d], k = c.col + kDc[d];
        if (!grid_.in_bounds(r, k)) continue;
        const int n = idx(r, k);
        if (seen.insert(n).second) queue.push_back(n);
      }
    }
    return placed;
  }

  bool bog_patch() {
    return patch(Tile::Bog, rng_.range(3, 9), [&](int i) {
             return room_at(i) >= 0 && (grid_[i] == Tile::Ground || grid_[i] == Tile::Grass) && water_adjacent(i);
           }) > 0;
  }

  bool ice_patch() {
    return patch(Tile::Ice, rng_.range(3, 8), [&](int i) {
             return room_at(i) >= 0 && grid_[i] == Tile::Ground && water_adjacent(i);
           }) > 0;
  }

  bool rock_cluster(Tile tile) {
    auto near_floor = [&](int i) {
      if (grid_[i] != Tile::None) return false;
      const Cell c = grid_.cell_of(i);
      for (int d = 0; d < 8; ++d) {
        const int r = c.row + kDr8[d], k = c.col + kDc8[d];
        if (grid_.in_bounds(r, k) && room_at(idx(r, k)) >= 0) return true;
      }
      return false;
    };
    return patch(tile, rng_.range(2, 6), near_floor) > 0;
  }

  // Ashes patch inside one room with a few Fire cells, each touching Ashes.
  bool burn_patch() {
    const int room = static_cast<int>(rng_.below(static_cast<std::uint64_t>(room_count_)));
    auto burnable = [&](int i) {
      const Tile t = grid_[i];
      return room_at(i) == room && !protected_cell(i) && (t == Tile::Ground || t == Tile::Grass || t == Tile::Fungus);
    };
    std::vector<int> before;
    for (int i : room_cells_[static_cast<std::size_t>(room)])
      if (burnable(i)) before.push_back(i);
    const int placed = patch(Tile::Ashes, rng_.range(4, 10), burnable);
    if (placed == 0) return false;
    std::vector<int> ashes;
    for (int i : before)
      if (grid_[i] == Tile::Ashes) ashes.push_back(i);

    int fires = rng_.range(0, placed / 3);
    int walkable = walkable_room_cells(room);
    rng_.shuffle(ashes);
    for (int i : ashes) {
      if (fires == 0 || walkable - 1 < room_floor(room)) break;
      if (!can_ignite(i)) continue;
      grid_[i] = Tile::Fire;
      room_at(i) = -1;
      --fires;
      --walkable;
    }
    return true;
  }

  int ashes_neighbors(int i) const {
    int n = 0;
    const Cell c = grid_.cell_of(i);
    for (int d = 0; d < 4; ++d) {
      const int r = c.row + kDr[d], k = c.col + kDc[d];
      if (grid_.in_bounds(r, k) && grid_[idx(r, k)] == Tile::Ashes) ++n;
    }
    return n;
  }

  // An Ashes cell may ignite if it keeps an Ashes neighbor and is not the last
  // Ashes neighbor of an existing Fire cell.
  bool can_ignite(int i) const {
    if (ashes_neighbors(i) == 0) return false;
    const Cell c = grid_.cell_of(i);
    for (int d = 0; d < 4; ++d) {
      const int r = c.row + kDr[d], k = c.col + kDc[d];
      if (!grid_.in_bounds(r, k)) continue;
      const int n = idx(r, k);
      if (grid_[n] == Tile::Fire && ashes_neighbors(n) <= 1) return false;
    }
    return true;
  }

  void decorate() {
    int budget = cfg_.decoration_budget;
    for (int attempt = 0; attempt < 60 && budget > 0; ++attempt) {
      const double u = rng_.uniform();
      bool done = false;
      int cost = 1;
      if (u < 0.18) {
        done = sand_biome();
        cost = 3;
      } else if (u < 0.33) {
        done = bog_patch();
        cost = 2;
      } else if (u < 0.50) {
        done = burn_patch();
        cost = 2;
      } else if (u < 0.68) {
        done = rock_cluster(Tile::Stone);
      } else if (u < 0.82) {
        done = rock_cluster(Tile::Crystal);
      } else {
        done = ice_patch();
        cost = 2;
      }
      if (done) budget -= cost;
    }
  }

  // Carve a BFS tunnel from every minor walkable component to the largest one.
  void repair_connectivity() {
    for (int round = 0; round < 64; ++round) {
      const ComponentLabels comps = walkable_components(grid_);
      if (comps.count() <= 1) return;
      const int main = static_cast<int>(std::max_element(comps.sizes.begin(), comps.sizes.end()) - comps.sizes.begin());
      int source = -1;
      for (int i = 0; i < grid_.size() && source < 0; ++i) {
        const int l = comps.label[static_cast<std::size_t>(i)];
        if (l >= 0 && l != main) source = l;
      }
      std::vector<int> parent(static_cast<std::size_t>(grid_.size()), -2);
      std::queue<int> frontier;
      for (int i = 0; i < grid_.size(); ++i) {
        if (comps.label[static_cast<std::size_t>(i)] == source) {
          parent[static_cast<std::size_t>(i)] = -1;
          frontier.push(i);
        }
      }
      int hit = -1;
      while (!frontier.empty() && hit < 0) {
        const int cur = frontier.front();
        frontier.pop();
        const Cell c = grid_.cell_of(cur);
        for (int d = 0; d < 4; ++d) {
          const int r = c.row + kDr[d], k = c.col + kDc[d];
          if (!grid_.in_bounds(r, k)) continue;
          const int n = idx(r, k);
          if (parent[static_cast<std::size_t>(n)] != -2) continue;
          parent[static_cast<std::size_t>(n)] = cur;
          if (comps.label[static_cast<std::size_t>(n)] == main) {
            hit = n;
            break;
          }
          frontier.push(n);
        }
      }
      if (hit < 0) return;
      std::vector<int> tunnel;
      for (int i = parent[static_cast<std::size_t>(hit)]; i >= 0 && comps.label[static_cast<std::size_t>(i)] != source;
           i = parent[static_cast<std::size_t>(i)]) {
        tunnel.push_back(i);
      }
      // Walkable cells of other components on the way keep their owner; each
      // run of newly carved cells becomes its own corridor.
      bool open_run = false;
      for (int i : tunnel) {
        const Tile t = grid_[i];
        if (is_walkable(t)) {
          if (open_run) ++corridor_count_;
          open_run = false;
          continue;
        }
        if (is_fluid(t)) {
          grid_[i] = Tile::Bridge;
        } else if (t == Tile::Fire) {
          grid_[i] = Tile::Ashes;
        } else {
          grid_[i] = Tile::Ground;
        }
        corridor_at(i) = corridor_count_;
        open_run = true;
      }
      if (open_run) ++corridor_count_;
    }
  }

  void fix_bridges() {
    for (int i = 0; i < grid_.size(); ++i) {
      if (grid_[i] != Tile::Bridge) continue;
      bool wet = false;
      const Cell c = grid_.cell_of(i);
      for (int d = 0; d < 4; ++d) {
        const int r = c.row + kDr[d], k = c.col + kDc[d];
        if (grid_.in_bounds(r, k) && is_fluid(grid_[idx(r, k)])) wet = true;
      }
      if (!wet) grid_[i] = Tile::Ground;
    }
  }

  const GenConfig& cfg_;
  Rng rng_;
  MapGrid grid_;
  std::vector<int> room_of_;
  std::vector<int> corridor_of_;
  std::vector<std::vector<int>> room_cells_;
  int room_count_ = 0;
  int corridor_count_ = 0;
};

}  // namespace

GeneratedMap generate(const GenConfig& config) {
  config.validate();
  for (std::uint64_t attempt = 0;; ++attempt) {
    const std::uint64_t internal = attempt == 0 ? config.seed : derive_seed(config.seed, attempt);
    Builder builder(config, internal);
    if (builder.run() || attempt >= 32) return std::move(builder).finish(config.seed);
  }
}

void generate_corpus(int count, std::uint64_t base_seed, const GenConfig& config,
                     const std::function<void(int, GeneratedMap&&)>& sink) {
  if (count < 1) throw UsageError("corpus count must be at least 1");
  GenConfig cfg = config;
  for (int i = 0; i < count; ++i) {
    cfg.seed = corpus_seed(base_seed, static_cast<std::uint64_t>(i));
    sink(i, generate(cfg));
  }
}

std::vector<GeneratedMap> generate_corpus(int count, std::uint64_t base_seed, const GenConfig& config) {
  std::vector<GeneratedMap> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  generate_corpus(count, base_seed, config, [&](int, GeneratedMap&& m) { out.push_back(std::move(m)); });
  return out;
}

}  // namespace moonshine
