#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "moonshine/map_grid.hpp"

namespace moonshine {

// One glyph per tile (see kTileTable), rows separated by '\n', no trailing newline.
std::string render_ascii(const MapGrid& map);

// Inverse of render_ascii. Throws DataError on ragged rows or unknown glyphs.
MapGrid parse_ascii(std::string_view text);

// Binary P6 image, `scale` x `scale` pixels per cell.
std::string render_ppm(const MapGrid& map, int scale = 8);

// P6 image where each listed region is tinted with its own color; cells outside
// every region keep their tile color. Region cells are flat indices.
std::string render_region_overlay_ppm(const MapGrid& map, const std::vector<std::vector<int>>& regions,
                                      int scale = 8);

}  // namespace moonshine
