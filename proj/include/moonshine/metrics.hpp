#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "moonshine/map_grid.hpp"

namespace moonshine {

// Lowercased tokens split on non-alphanumeric bytes (same rule as the hashed embedder).
std::vector<std::string> metric_tokens(std::string_view text);

// Cumulative BLEU-1..4 in [0, 100] with clipped n-gram precision and
// brevity penalty min(1, exp(1 - r/c)), r = closest reference length (shorter on ties).
// A zero precision at order i zeroes every cumulative score from i on.
// Throws UsageError for an empty reference list; an empty hypothesis scores 0.
std::array<double, 4> bleu(std::string_view hypothesis, const std::vector<std::string>& references);

// LCS F-measure with beta = 1.2: R = LCS/|ref|, P = LCS/|hyp|. Empty input scores 0.
double rouge_l(std::string_view hypothesis, std::string_view reference);

// Unigram alignment (exact, then suffix-stripped stems), F = 10PR/(R+9P),
// penalty 0.5 (chunks/matches)^3. No synonym stage.
double meteor_lite(std::string_view hypothesis, std::string_view reference);

// Stems considered equal when these candidate sets intersect.
std::vector<std::string> stem_candidates(const std::string& word);

// Unit-cost Levenshtein distance.
int edit_distance(std::string_view a, std::string_view b);
// Over the row-major tile sequences.
int map_edit_distance(const MapGrid& a, const MapGrid& b);

struct ConnectivityReport {
  int components = 0;
  int largest = 0;
  double fragmentation = 0;  // 1 - largest / walkable, 0 without walkable cells
};

ConnectivityReport connectivity_report(const MapGrid& map);

struct TextMetricReport {
  std::array<double, 4> bleu{};
  double meteor = 0;
  double rouge_l = 0;
};

TextMetricReport score_pair(std::string_view hypothesis, std::string_view reference);

}  // namespace moonshine
