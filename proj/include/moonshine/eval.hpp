#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "moonshine/dataset.hpp"
#include "moonshine/metrics.hpp"

namespace moonshine {

struct TextProtocolRow {
  std::string kind;  // "long", "short" or "files"
  std::size_t pairs = 0;
  TextMetricReport mean;
};

// Per map and per kind: description 0 is the reference, the other four are hypotheses.
// Throws DataError on an empty corpus or a record without descriptions.
std::vector<TextProtocolRow> text_protocol(const std::vector<MapRecord>& records);

// Line i of `hypotheses` against line i of `references`; a reference line may carry
// several references separated by tabs. Throws DataError on empty input or a count mismatch.
TextProtocolRow text_pairs(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references);

// JSON report with a null "spice" column per row.
nlohmann::ordered_json text_report_json(const std::vector<TextProtocolRow>& rows);
std::string text_report_csv(const std::vector<TextProtocolRow>& rows);

struct Stat {
  double mean = 0;
  double stddev = 0;  // population
};
Stat mean_stddev(const std::vector<double>& values);

struct ConnectivitySummary {
  std::string model;
  std::size_t maps = 0;
  Stat components;
  Stat largest;
  Stat fragmentation;
};

// Throws DataError on an empty corpus.
ConnectivitySummary summarize_connectivity(const std::string& model, const std::vector<MapGrid>& maps);

// When both "fdm" and "ddm" summaries are present the report states whether DDM
// has the lower mean component count.
nlohmann::ordered_json map_report_json(const std::vector<ConnectivitySummary>& summaries);
std::string map_report_csv(const std::vector<ConnectivitySummary>& summaries);

struct ScatterRow {
  std::string map_id;
  std::string model;
  double ground_truth_score = 0;
  double generated_score = 0;
};

std::string scatter_csv(const std::vector<ScatterRow>& rows);
// Per-model mean of both score columns plus their Pearson correlation.
nlohmann::ordered_json scatter_report_json(const std::vector<ScatterRow>& rows);

// Mean Levenshtein distance over all unordered pairs of maps (0 for fewer than 2).
double mean_pairwise_edit_distance(const std::vector<MapGrid>& maps);

}  // namespace moonshine
