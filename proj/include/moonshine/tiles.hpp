#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace moonshine {

// Terrain tileset, alphabetical. The numeric ids are part of the dataset format.
enum class Tile : std::uint8_t {
  Ashes = 0,
  Bog,
  Bridge,
  Crystal,
  Fire,
  Fungus,
  Grass,
  Ground,
  Ice,
  Lava,
  None,
  Sand,
  Stone,
  Water,
};

inline constexpr int kTileCount = 14;

enum class TileClass : std::uint8_t { Walkable, Hazard, Solid };

struct Rgb {
  std::uint8_t r, g, b;
};

struct TileInfo {
  Tile tile;
  std::string_view name;
  char glyph;
  Rgb color;
  TileClass cls;
};

inline constexpr std::array<TileInfo, kTileCount> kTileTable{{
    {Tile::Ashes, "Ashes", ',', {120, 116, 110}, TileClass::Walkable},
    {Tile::Bog, "Bog", '&', {84, 96, 52}, TileClass::Walkable},
    {Tile::Bridge, "Bridge", '=', {150, 100, 50}, TileClass::Walkable},
    {Tile::Crystal, "Crystal", '*', {170, 120, 230}, TileClass::Solid},
    {Tile::Fire, "Fire", '^', {250, 120, 20}, TileClass::Hazard},
    {Tile::Fungus, "Fungus", ';', {60, 200, 170}, TileClass::Walkable},
    {Tile::Grass, "Grass", '"', {70, 160, 60}, TileClass::Walkable},
    {Tile::Ground, "Ground", '.', {190, 175, 150}, TileClass::Walkable},
    {Tile::Ice, "Ice", '+', {200, 235, 250}, TileClass::Walkable},
    {Tile::Lava, "Lava", '%', {200, 40, 20}, TileClass::Hazard},
    {Tile::None, "None", '#', {20, 20, 24}, TileClass::Solid},
    {Tile::Sand, "Sand", ':', {225, 205, 130}, TileClass::Walkable},
    {Tile::Stone, "Stone", 'o', {110, 110, 125}, TileClass::Solid},
    {Tile::Water, "Water", '~', {40, 80, 200}, TileClass::Hazard},
}};

constexpr int tile_id(Tile t) { return static_cast<int>(t); }

constexpr bool valid_tile_id(long long id) { return id >= 0 && id < kTileCount; }

constexpr Tile tile_from_id(int id) { return static_cast<Tile>(id); }

constexpr const TileInfo& tile_info(Tile t) { return kTileTable[static_cast<std::size_t>(t)]; }

constexpr std::string_view tile_name(Tile t) { return tile_info(t).name; }

constexpr TileClass tile_class(Tile t) { return tile_info(t).cls; }

constexpr bool is_walkable(Tile t) { return tile_class(t) == TileClass::Walkable; }

constexpr bool is_hazard(Tile t) { return tile_class(t) == TileClass::Hazard; }

constexpr bool is_fluid(Tile t) { return t == Tile::Water || t == Tile::Lava; }

constexpr std::string_view tile_class_name(TileClass c) {
  switch (c) {
    case TileClass::Walkable: return "walkable";
    case TileClass::Hazard: return "hazard";
    case TileClass::Solid: return "solid";
  }
  return "solid";
}

// Exact, case-sensitive match against the canonical names.
constexpr std::optional<Tile> tile_from_name(std::string_view name) {
  for (const auto& info : kTileTable) {
    if (info.name == name) return info.tile;
  }
  return std::nullopt;
}

constexpr std::optional<Tile> tile_from_glyph(char glyph) {
  for (const auto& info : kTileTable) {
    if (info.glyph == glyph) return info.tile;
  }
  return std::nullopt;
}

}  // namespace moonshine
