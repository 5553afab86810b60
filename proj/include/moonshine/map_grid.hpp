#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "moonshine/error.hpp"
#include "moonshine/tiles.hpp"

namespace moonshine {

inline constexpr int kDefaultMapSize = 32;

struct Cell {
  int row = 0;
  int col = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

/// Rectangular grid of tiles, row-major.
class MapGrid {
 public:
  MapGrid() : MapGrid(kDefaultMapSize, kDefaultMapSize) {}
  MapGrid(int height, int width, Tile fill = Tile::None);
  MapGrid(int height, int width, std::vector<Tile> cells);

  int height() const { return height_; }
  int width() const { return width_; }
  int size() const { return height_ * width_; }

  bool in_bounds(int row, int col) const { return row >= 0 && row < height_ && col >= 0 && col < width_; }
  int index(int row, int col) const { return row * width_ + col; }
  Cell cell_of(int index) const { return {index / width_, index % width_}; }

  Tile at(int row, int col) const { return cells_[static_cast<std::size_t>(index(row, col))]; }
  Tile& at(int row, int col) { return cells_[static_cast<std::size_t>(index(row, col))]; }
  Tile operator[](int idx) const { return cells_[static_cast<std::size_t>(idx)]; }
  Tile& operator[](int idx) { return cells_[static_cast<std::size_t>(idx)]; }

  std::span<const Tile> cells() const { return cells_; }

  friend bool operator==(const MapGrid&, const MapGrid&) = default;

 private:
  int height_;
  int width_;
  std::vector<Tile> cells_;
};

/// H x W x C per-cell categorical distribution, stored channel-major
/// (value(i,j,k) at (k*H + i)*W + j) so it maps directly onto an NCHW tensor.
template <typename Scalar>
class BasicProbMap {
 public:
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  BasicProbMap(int height, int width, int channels = kTileCount)
      : height_(height), width_(width), channels_(channels),
        values_(Array::Zero(static_cast<Eigen::Index>(height) * width * channels)) {}

  BasicProbMap(int height, int width, int channels, Array values)
      : height_(height), width_(width), channels_(channels), values_(std::move(values)) {
    if (values_.size() != static_cast<Eigen::Index>(height) * width * channels) {
      throw DataError("probability map value count does not match its shape");
    }
  }

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }

  Scalar operator()(int i, int j, int k) const { return values_(offset(i, j, k)); }
  Scalar& operator()(int i, int j, int k) { return values_(offset(i, j, k)); }

  const Array& values() const { return values_; }
  Array& values() { return values_; }

  // Largest |sum_k p(i,j,k) - 1| over all cells.
  Scalar max_simplex_error() const {
    Scalar worst = 0;
    for (int i = 0; i < height_; ++i) {
      for (int j = 0; j < width_; ++j) {
        Scalar sum = 0;
        for (int k = 0; k < channels_; ++k) sum += (*this)(i, j, k);
        worst = std::max(worst, static_cast<Scalar>(std::abs(sum - Scalar(1))));
      }
    }
    return worst;
  }

  bool on_simplex(Scalar tol = Scalar(1e-6)) const {
    return (values_ >= Scalar(0)).all() && max_simplex_error() <= tol;
  }

 private:
  Eigen::Index offset(int i, int j, int k) const {
    return (static_cast<Eigen::Index>(k) * height_ + i) * width_ + j;
  }

  int height_;
  int width_;
  int channels_;
  Array values_;
};

using ProbMap = BasicProbMap<float>;

template <typename Scalar = float>
BasicProbMap<Scalar> one_hot_encode(const MapGrid& map) {
  BasicProbMap<Scalar> pm(map.height(), map.width(), kTileCount);
  for (int i = 0; i < map.height(); ++i) {
    for (int j = 0; j < map.width(); ++j) pm(i, j, tile_id(map.at(i, j))) = Scalar(1);
  }
  return pm;
}

/// Most probable tile per cell; ties go to the lowest tile id.
/// Accepts any real-valued H x W x C array (simplex or not). Throws DataError on NaN.
template <typename Scalar>
MapGrid argmax_decode(const BasicProbMap<Scalar>& pm) {
  if (pm.channels() != kTileCount) throw DataError("probability map must have one channel per tile");
  MapGrid out(pm.height(), pm.width());
  for (int i = 0; i < pm.height(); ++i) {
    for (int j = 0; j < pm.width(); ++j) {
      int best = 0;
      Scalar best_value = pm(i, j, 0);
      if (std::isnan(best_value)) throw DataError("NaN in probability map");
      for (int k = 1; k < kTileCount; ++k) {
        const Scalar v = pm(i, j, k);
        if (std::isnan(v)) throw DataError("NaN in probability map");
        if (v > best_value) {
          best_value = v;
          best = k;
        }
      }
      out.at(i, j) = tile_from_id(best);
    }
  }
  return out;
}

/// Component label per cell (-1 for non-walkable), 4-connectivity.
struct ComponentLabels {
  std::vector<int> label;
  std::vector<int> sizes;
  int count() const { return static_cast<int>(sizes.size()); }
};

ComponentLabels walkable_components(const MapGrid& map);

// Histogram of tile ids over the whole grid.
std::array<int, kTileCount> tile_histogram(const MapGrid& map);

}  // namespace moonshine
