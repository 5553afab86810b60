#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "moonshine/descriptions.hpp"
#include "moonshine/map_grid.hpp"
#include "moonshine/metadata.hpp"

namespace moonshine {

/// One line of a dataset JSONL file:
///   {"id", "seed", "grid": [[int]*W]*H, "regions"?, "meta"?, "descriptions"? {"long":[5], "short":[5]}}
/// `regions` carries the generator's room/corridor annotations when known.
struct MapRecord {
  std::string id;
  std::uint64_t seed = 0;
  MapGrid grid;
  std::optional<Regions> regions;
  std::optional<MapMeta> meta;
  std::optional<DescriptionSet> descriptions;
};

struct GridShape {
  int height = kDefaultMapSize;
  int width = kDefaultMapSize;
};

std::string record_id(int index);

nlohmann::ordered_json grid_to_json(const MapGrid& grid);
// Throws DataError on ragged rows, wrong shape or tile ids outside [0,13].
MapGrid grid_from_json(const nlohmann::json& j, std::optional<GridShape> expected = GridShape{});

nlohmann::ordered_json descriptions_to_json(const DescriptionSet& d);
DescriptionSet descriptions_from_json(const nlohmann::json& j);

nlohmann::ordered_json record_to_json(const MapRecord& record);
MapRecord record_from_json(const nlohmann::json& j, std::optional<GridShape> expected = GridShape{});

// Canonical single-line serialization.
std::string record_to_line(const MapRecord& record);

void write_jsonl(const std::filesystem::path& path, const std::vector<MapRecord>& records);

// Errors name the 1-based line number.
std::vector<MapRecord> read_jsonl(const std::filesystem::path& path, std::optional<GridShape> expected = GridShape{});

struct SplitCounts {
  std::size_t train = 0;
  std::size_t test = 0;
  std::size_t validation = 0;
};

// Train/test/validation sizes; rounding remainder goes to validation.
SplitCounts split_counts(std::size_t total, double train_ratio = 0.7, double test_ratio = 0.2,
                         double validation_ratio = 0.1);

struct DatasetSplit {
  std::vector<MapRecord> train;
  std::vector<MapRecord> test;
  std::vector<MapRecord> validation;
};

// Contiguous split in input order.
DatasetSplit split_dataset(std::vector<MapRecord> records, double train_ratio = 0.7, double test_ratio = 0.2,
                           double validation_ratio = 0.1);

}  // namespace moonshine
