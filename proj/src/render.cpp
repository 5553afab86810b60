#include "moonshine/render.hpp"

#include <algorithm>

namespace moonshine {

std::string render_ascii(const MapGrid& map) {
  std::string out;
  out.reserve(static_cast<std::size_t>(map.size() + map.height()));
  for (int i = 0; i < map.height(); ++i) {
    if (i > 0) out.push_back('\n');
    for (int j = 0; j < map.width(); ++j) out.push_back(tile_info(map.at(i, j)).glyph);
  }
  return out;
}

MapGrid parse_ascii(std::string_view text) {
  std::vector<Tile> cells;
  int height = 0;
  int width = -1;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = end + 1;
    if (line.empty()) continue;
    if (width < 0) width = static_cast<int>(line.size());
    if (static_cast<int>(line.size()) != width) throw DataError("ragged ascii map rows");
    for (char ch : line) {
      const auto tile = tile_from_glyph(ch);
      if (!tile) throw DataError(std::string("unknown map glyph '") + ch + "'");
      cells.push_back(*tile);
    }
    ++height;
  }
  if (height == 0) throw DataError("empty ascii map");
  return MapGrid(height, width, std::move(cells));
}

namespace {

std::string ppm_header(int width, int height) {
  return "P6\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
}

template <typename ColorOf>
std::string render_with(const MapGrid& map, int scale, ColorOf&& color_of) {
  scale = std::max(scale, 1);
  const int w = map.width() * scale;
  const int h = map.height() * scale;
  std::string out = ppm_header(w, h);
  const std::size_t header = out.size();
  out.resize(header + static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3);
  std::size_t p = header;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Rgb c = color_of(map.index(y / scale, x / scale));
      out[p++] = static_cast<char>(c.r);
      out[p++] = static_cast<char>(c.g);
      out[p++] = static_cast<char>(c.b);
    }
  }
  return out;
}

// Distinct hues for overlays; cycles after 12 regions.
constexpr Rgb kRegionPalette[] = {
    {230, 25, 75},  {60, 180, 75},  {255, 225, 25}, {0, 130, 200},  {245, 130, 48}, {145, 30, 180},
    {70, 240, 240}, {240, 50, 230}, {210, 245, 60}, {250, 190, 212}, {0, 128, 128}, {220, 190, 255},
};

}  // namespace

std::string render_ppm(const MapGrid& map, int scale) {
  return render_with(map, scale, [&](int idx) { return tile_info(map[idx]).color; });
}

std::string render_region_overlay_ppm(const MapGrid& map, const std::vector<std::vector<int>>& regions, int scale) {
  std::vector<int> owner(static_cast<std::size_t>(map.size()), -1);
  for (std::size_t r = 0; r < regions.size(); ++r) {
    for (int idx : regions[r]) {
      if (idx >= 0 && idx < map.size()) owner[static_cast<std::size_t>(idx)] = static_cast<int>(r);
    }
  }
  constexpr std::size_t kPaletteSize = std::size(kRegionPalette);
  return render_with(map, scale, [&](int idx) {
    const Rgb base = tile_info(map[idx]).color;
    const int o = owner[static_cast<std::size_t>(idx)];
    if (o < 0) return base;
    const Rgb tint = kRegionPalette[static_cast<std::size_t>(o) % kPaletteSize];
    return Rgb{static_cast<std::uint8_t>((base.r + 2 * tint.r) / 3), static_cast<std::uint8_t>((base.g + 2 * tint.g) / 3),
               static_cast<std::uint8_t>((base.b + 2 * tint.b) / 3)};
  });
}

}  // namespace moonshine
