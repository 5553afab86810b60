#include "moonshine/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace moonshine {

std::string record_id(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "map-%06d", index);
  return buf;
}

nlohmann::ordered_json grid_to_json(const MapGrid& grid) {
  auto rows = nlohmann::ordered_json::array();
  for (int i = 0; i < grid.height(); ++i) {
    auto row = nlohmann::ordered_json::array();
    for (int j = 0; j < grid.width(); ++j) row.push_back(tile_id(grid.at(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

MapGrid grid_from_json(const nlohmann::json& j, std::optional<GridShape> expected) {
  if (!j.is_array() || j.empty()) throw DataError("grid must be a non-empty array of rows");
  const int height = static_cast<int>(j.size());
  const int width = j[0].is_array() ? static_cast<int>(j[0].size()) : 0;
  if (width == 0) throw DataError("grid rows must be non-empty arrays");
  if (expected && (height != expected->height || width != expected->width)) {
    throw DataError("grid is " + std::to_string(height) + "x" + std::to_string(width) + ", expected " +
                    std::to_string(expected->height) + "x" + std::to_string(expected->width));
  }
  std::vector<Tile> cells;
  cells.reserve(static_cast<std::size_t>(height * width));
  for (const auto& row : j) {
    if (!row.is_array() || static_cast<int>(row.size()) != width) throw DataError("ragged grid rows");
    for (const auto& v : row) {
      if (!v.is_number_integer()) throw DataError("grid values must be integers");
      const auto id = v.get<long long>();
      if (!valid_tile_id(id)) throw DataError("tile id " + std::to_string(id) + " outside [0,13]");
      cells.push_back(tile_from_id(static_cast<int>(id)));
    }
  }
  return MapGrid(height, width, std::move(cells));
}

nlohmann::ordered_json descriptions_to_json(const DescriptionSet& d) {
  nlohmann::ordered_json j;
  j["long"] = d.long_texts;
  j["short"] = d.short_texts;
  return j;
}

DescriptionSet descriptions_from_json(const nlohmann::json& j) {
  DescriptionSet d;
  const auto& l = j.at("long");
  const auto& s = j.at("short");
  if (!l.is_array() || l.size() != kLongCount || !s.is_array() || s.size() != kShortCount) {
    throw DataError("descriptions need exactly 5 long and 5 short entries");
  }
  for (int i = 0; i < kLongCount; ++i) d.long_texts[static_cast<std::size_t>(i)] = l[static_cast<std::size_t>(i)].get<std::string>();
  for (int i = 0; i < kShortCount; ++i) d.short_texts[static_cast<std::size_t>(i)] = s[static_cast<std::size_t>(i)].get<std::string>();
  return d;
}

nlohmann::ordered_json record_to_json(const MapRecord& record) {
  nlohmann::ordered_json j;
  j["id"] = record.id;
  j["seed"] = record.seed;
  j["grid"] = grid_to_json(record.grid);
  if (record.regions) j["regions"] = regions_to_json(*record.regions);
  if (record.meta) j["meta"] = meta_to_json(*record.meta);
  if (record.descriptions) j["descriptions"] = descriptions_to_json(*record.descriptions);
  return j;
}

MapRecord record_from_json(const nlohmann::json& j, std::optional<GridShape> expected) {
  try {
    if (!j.is_object()) throw DataError("record must be a JSON object");
    MapRecord r;
    r.id = j.at("id").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.grid = grid_from_json(j.at("grid"), expected);
    if (j.contains("regions")) r.regions = regions_from_json(j["regions"], r.grid.size());
    if (j.contains("meta")) r.meta = meta_from_json(j["meta"]);
    if (j.contains("descriptions")) r.descriptions = descriptions_from_json(j["descriptions"]);
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed record: ") + e.what());
  }
}

std::string record_to_line(const MapRecord& record) { return record_to_json(record).dump(); }

void write_jsonl(const std::filesystem::path& path, const std::vector<MapRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  for (const auto& r : records) out << record_to_line(r) << '\n';
  if (!out) throw DataError("write failed: " + path.string());
}

std::vector<MapRecord> read_jsonl(const std::filesystem::path& path, std::optional<GridShape> expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<MapRecord> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(nlohmann::json::parse(line), expected));
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": invalid JSON: " + e.what());
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

SplitCounts split_counts(std::size_t total, double train_ratio, double test_ratio, double validation_ratio) {
  if (train_ratio < 0 || test_ratio < 0 || validation_ratio < 0 ||
      std::abs(train_ratio + test_ratio + validation_ratio - 1.0) > 1e-9) {
    throw UsageError("split ratios must be non-negative and sum to 1");
  }
  SplitCounts c;
  c.train = static_cast<std::size_t>(std::llround(static_cast<double>(total) * train_ratio));
  c.test = std::min(total - c.train, static_cast<std::size_t>(std::llround(static_cast<double>(total) * test_ratio)));
  c.validation = total - c.train - c.test;
  return c;
}

DatasetSplit split_dataset(std::vector<MapRecord> records, double train_ratio, double test_ratio,
                           double validation_ratio) {
  const SplitCounts c = split_counts(records.size(), train_ratio, test_ratio, validation_ratio);
  DatasetSplit s;
  auto it = std::make_move_iterator(records.begin());
  s.train.assign(it, it + static_cast<std::ptrdiff_t>(c.train));
  it += static_cast<std::ptrdiff_t>(c.train);
  s.test.assign(it, it + static_cast<std::ptrdiff_t>(c.test));
  it += static_cast<std::ptrdiff_t>(c.test);
  s.validation.assign(it, std::make_move_iterator(records.end()));
  return s;
}

}  // namespace moonshine
