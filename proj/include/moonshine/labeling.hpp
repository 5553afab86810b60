#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "moonshine/descriptions.hpp"
#include "moonshine/map_grid.hpp"
#include "moonshine/metadata.hpp"

namespace moonshine {

enum class DescriptionKind { Long, Short };

enum class ViolationKind { Empty, SentenceCount, WordCount, BannedWord, Duplicate };

std::string_view violation_name(ViolationKind v);

struct Violation {
  ViolationKind kind;
  std::string detail;
};

inline constexpr std::string_view kBannedWords[] = {"serene", "labyrinth"};

// Words are whitespace-separated tokens containing at least one alphanumeric byte.
int count_words(std::string_view text);
// Sentences are non-empty segments after splitting on '.', '!' and '?'.
int count_sentences(std::string_view text);

// Long: 1-3 sentences. Short: 5-15 words. Both: non-empty, no banned words.
std::vector<Violation> validate_description(std::string_view text, DescriptionKind kind);

// Every entry valid and no two entries identical.
std::vector<Violation> validate_set(const DescriptionSet& set);

/// The four-section system prompt sent before any map.
struct PromptBundle {
  std::string setting;
  std::string response_format;
  std::string examples;
  std::string rules;

  // Markdown with one "## " heading per section.
  std::string render() const;
};

// Precondition: at least one few-shot example (throws UsageError otherwise).
PromptBundle build_pregen_prompt(const std::vector<std::string>& few_shot);

// Human-authored style examples used when no few-shot file is given.
std::vector<std::string> default_few_shot_examples();

// Per-map user message: integer grid, id->name dictionary, metadata, instructions.
std::string build_round_prompt(const MapGrid& map, const MapMeta& meta);

// Deterministic grammar-based labeler. Pure function of its arguments.
DescriptionSet template_label(const MapMeta& meta, const std::vector<TileCount>& census, std::uint64_t seed);

}  // namespace moonshine
