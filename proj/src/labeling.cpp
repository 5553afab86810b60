#include "moonshine/labeling.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <set>
#include <sstream>

#include "moonshine/rng.hpp"

namespace moonshine {

std::string_view violation_name(ViolationKind v) {
  switch (v) {
    case ViolationKind::Empty: return "empty";
    case ViolationKind::SentenceCount: return "sentence_count";
    case ViolationKind::WordCount: return "word_count";
    case ViolationKind::BannedWord: return "banned_word";
    case ViolationKind::Duplicate: return "duplicate";
  }
  return "unknown";
}

namespace {

bool is_alnum(unsigned char c) { return std::isalnum(c) != 0 && c < 0x80; }

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (auto& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

}  // namespace

int count_words(std::string_view text) {
  int words = 0;
  bool in_token = false, has_alnum = false;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    const bool space = i == text.size() || std::isspace(static_cast<unsigned char>(text[i])) != 0;
    if (space) {
      if (in_token && has_alnum) ++words;
      in_token = has_alnum = false;
    } else {
      in_token = true;
      has_alnum = has_alnum || is_alnum(static_cast<unsigned char>(text[i]));
    }
  }
  return words;
}

int count_sentences(std::string_view text) {
  int sentences = 0;
  bool content = false;
  for (char c : text) {
    if (c == '.' || c == '!' || c == '?') {
      if (content) ++sentences;
      content = false;
    } else if (is_alnum(static_cast<unsigned char>(c))) {
      content = true;
    }
  }
  if (content) ++sentences;
  return sentences;
}

std::vector<Violation> validate_description(std::string_view text, DescriptionKind kind) {
  std::vector<Violation> out;
  const int words = count_words(text);
  if (words == 0) {
    out.push_back({ViolationKind::Empty, "description is empty"});
    return out;
  }
  if (kind == DescriptionKind::Long) {
    const int sentences = count_sentences(text);
    if (sentences < 1 || sentences > 3) {
      out.push_back({ViolationKind::SentenceCount, std::to_string(sentences) + " sentences, expected 1-3"});
    }
  } else if (words < 5 || words > 15) {
    out.push_back({ViolationKind::WordCount, std::to_string(words) + " words, expected 5-15"});
  }
  const std::string lowered = lower_ascii(text);
  for (std::string_view banned : kBannedWords) {
    if (lowered.find(banned) != std::string::npos) {
      out.push_back({ViolationKind::BannedWord, "uses \"" + std::string(banned) + "\""});
    }
  }
  return out;
}

std::vector<Violation> validate_set(const DescriptionSet& set) {
  std::vector<Violation> out;
  std::set<std::string> seen;
  for (int i = 0; i < kDescriptionCount; ++i) {
    const auto kind = i < kLongCount ? DescriptionKind::Long : DescriptionKind::Short;
    for (auto& v : validate_description(set.at(i), kind)) {
      v.detail = "entry " + std::to_string(i + 1) + ": " + v.detail;
      out.push_back(std::move(v));
    }
    if (!seen.insert(set.at(i)).second) {
      out.push_back({ViolationKind::Duplicate, "entry " + std::to_string(i + 1) + " repeats an earlier entry"});
    }
  }
  return out;
}

std::string PromptBundle::render() const {
  std::string out;
  out += "## Setting\n" + setting + "\n\n";
  out += "## Response Format\n" + response_format + "\n\n";
  out += "## Examples\n" + examples + "\n\n";
  out += "## Rules\n" + rules + "\n";
  return out;
}

std::vector<std::string> default_few_shot_examples() {
  return {
      "A diverse terrain with four main areas, each featuring a combination of fungus and ground. The northwest "
      "region is dotted with stone and ashes amidst more ground and fungus.",
      "Four area division: ground, fungus, scarce stones, and ash fragments.",
      "The lake to the left. The desert to the right. Connected by bridges.",
      "Some lakes in the north, and a lot of magma and lava.",
      "A vast sandy area.",
  };
}

PromptBundle build_pregen_prompt(const std::vector<std::string>& few_shot) {
  if (few_shot.empty()) throw UsageError("at least one few-shot example is required");
  PromptBundle b;
  b.setting =
      "You are a **helpful data annotator** for a **2D text-to-game-map generative model**. You will receive a "
      "**map** and its **metadata**, where integers correspond to terrain tiles. Your goal is to write descriptions "
      "that a designer could use as prompts to obtain this map. You may write sentences beyond standard English "
      "grammar when it makes a description more natural.";
  b.response_format =
      "Write **10 diverse, human-like, and creative descriptions** of the map, one per line, numbered 1 to 10, with "
      "**no repetitions**. Lines 1-5 are **long** descriptions; lines 6-10 are **short** descriptions. Output "
      "nothing else.";
  std::string examples;
  for (std::size_t i = 0; i < few_shot.size(); ++i) {
    examples += "- " + few_shot[i];
    if (i + 1 < few_shot.size()) examples += "\n";
  }
  b.examples = examples;
  b.rules =
      "1. Balance the descriptions: long ones use 1–3 sentences, short ones use 5–15 words.\n"
      "2. Avoid repetitive terms like \"serene\" or \"labyrinth\".\n"
      "3. Describe all major map areas.\n"
      "4. Do not repeat a description, and do not use pronouns or identifiers taken from the metadata.\n"
      "5. Follow the metadata: directions and tile names must match it.";
  return b;
}

std::string build_round_prompt(const MapGrid& map, const MapMeta& meta) {
  std::ostringstream out;
  out << "### Tile dictionary\n";
  for (const auto& info : kTileTable) out << tile_id(info.tile) << ": " << info.name << "\n";
  out << "\n### Map (" << map.height() << "x" << map.width() << " integer grid)\n";
  for (int i = 0; i < map.height(); ++i) {
    for (int j = 0; j < map.width(); ++j) {
      if (j > 0) out << ' ';
      out << tile_id(map.at(i, j));
    }
    out << "\n";
  }
  out << "\n### Metadata\n";
  out << "Rooms: " << meta.rooms.size() << "\n";
  for (const auto& room : meta.rooms) {
    out << "- Room " << room.room_id << " (" << direction_label(room.direction) << ", " << room.cells.size()
        << " cells): ";
    for (std::size_t k = 0; k < room.tile_counts.size(); ++k) {
      if (k > 0) out << ", ";
      out << tile_name(room.tile_counts[k].first) << " " << room.tile_counts[k].second;
    }
    out << "\n";
  }
  out << "Connected room pairs:\n";
  if (meta.paths.empty()) out << "- none\n";
  for (const auto& p : meta.paths) {
    out << "- Room " << p.room_pair.first << " <-> Room " << p.room_pair.second << " via a path of "
        << p.path_cells.size() << " cells\n";
  }
  out << "\nGenerate 10 text descriptions for this map. Lines 1-5 must be long descriptions (1–3 sentences). "
         "Lines 6-10 must be short descriptions (5–15 words). Number each line.\n";
  return out.str();
}

namespace {

constexpr std::array<std::string_view, 13> kNumberWords{"zero", "one", "two",   "three", "four",   "five",  "six",
                                                        "seven", "eight", "nine", "ten", "eleven", "twelve"};
constexpr std::array<std::string_view, 8> kAdjectives{"diverse",  "varied",  "rugged", "winding",
                                                      "sprawling", "compact", "broken", "patchwork"};

std::string number_word(int n) {
  return n >= 0 && n < static_cast<int>(kNumberWords.size()) ? std::string(kNumberWords[static_cast<std::size_t>(n)])
                                                              : std::to_string(n);
}

std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

std::string tile_noun(Tile t) {
  switch (t) {
    case Tile::Bridge: return "bridges";
    case Tile::Crystal: return "crystals";
    case Tile::Stone: return "stone";
    default: return lower_ascii(tile_name(t));
  }
}

std::string join_and(const std::vector<std::string>& items) {
  if (items.empty()) return "";
  if (items.size() == 1) return items[0];
  if (items.size() == 2) return items[0] + " and " + items[1];
  std::string out;
  for (std::size_t i = 0; i + 1 < items.size(); ++i) out += items[i] + ", ";
  return out + "and " + items.back();
}

std::string areas_phrase(int k) { return number_word(k) + (k == 1 ? " main area" : " main areas"); }

struct RoomView {
  const RoomMeta* room;
  int size;
};

// "dominated by ground, with patches of fungus, and dotted with stone and ashes"
std::string room_phrase(const RoomMeta& room, Rng& rng) {
  const double size = static_cast<double>(std::max<std::size_t>(room.cells.size(), 1));
  std::vector<std::string> big, mid, small;
  int listed = 0;
  for (const auto& [tile, count] : room.tile_counts) {
    if (tile == Tile::None || listed == 4) continue;
    ++listed;
    const double frac = count / size;
    (frac >= 0.3 ? big : frac >= 0.1 ? mid : small).push_back(tile_noun(tile));
  }
  std::vector<std::string> parts;
  if (!big.empty()) parts.push_back((rng.chance(0.5) ? "dominated by " : "a vast expanse of ") + join_and(big));
  if (!mid.empty()) parts.push_back((parts.empty() ? "covered in patches of " : "with patches of ") + join_and(mid));
  if (!small.empty()) {
    const std::string_view lead = parts.empty() ? (rng.chance(0.5) ? "dotted with " : "scattered with ")
                                                : (rng.chance(0.5) ? "dotted with " : "with a few ");
    parts.push_back(std::string(lead) + join_and(small));
  }
  if (parts.empty()) return "open ground";
  std::string out = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) out += (i + 1 == parts.size() && i > 1 ? ", and " : ", ") + parts[i];
  return out;
}

std::string_view place_noun(Direction d) {
  switch (d) {
    case Direction::NW:
    case Direction::NE:
    case Direction::SW:
    case Direction::SE:
      return "corner";
    case Direction::C:
      return "part";
    default:
      return "side";
  }
}

DescriptionSet empty_map_labels() {
  DescriptionSet d;
  d.long_texts = {"A solid mass of rock with no open areas.",
                  "The whole map is sealed stone without any walkable ground.",
                  "Nothing but unbroken rock fills this map. There are no rooms to explore.",
                  "An empty map of solid walls, with no paths or chambers.",
                  "No main areas exist here. Every cell is closed rock."};
  d.short_texts = {"A solid block of rock everywhere.", "No rooms, only closed solid walls.",
                   "An empty map without any open floor.", "Sealed rock with nothing to walk on.",
                   "Completely filled map with no open areas."};
  return d;
}

}  // namespace

DescriptionSet template_label(const MapMeta& meta, const std::vector<TileCount>& census, std::uint64_t seed) {
  if (meta.rooms.empty()) return empty_map_labels();
  Rng rng(derive_seed(seed, 0x7A6E));

  std::vector<RoomView> rooms;
  for (const auto& r : meta.rooms) rooms.push_back({&r, static_cast<int>(r.cells.size())});
  std::stable_sort(rooms.begin(), rooms.end(), [](const RoomView& a, const RoomView& b) { return a.size > b.size; });
  const int k = static_cast<int>(rooms.size());

  // Tiles ranked over all room cells.
  std::map<Tile, int> totals;
  for (const auto& r : meta.rooms)
    for (const auto& [t, c] : r.tile_counts) totals[t] += c;
  std::vector<TileCount> ranked(totals.begin(), totals.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const TileCount& a, const TileCount& b) { return a.second > b.second; });
  const std::string t1 = tile_noun(ranked[0].first);
  const std::string t2 = ranked.size() > 1 ? tile_noun(ranked[1].first) : "";
  const std::string t3 = ranked.size() > 2 ? tile_noun(ranked[2].first) : "";

  // Largest rooms' leading tiles, distinct, in room-size order.
  std::vector<std::string> leading;
  for (const auto& rv : rooms) {
    for (const auto& [t, c] : rv.room->tile_counts) {
      const std::string noun = tile_noun(t);
      if (std::find(leading.begin(), leading.end(), noun) == leading.end()) {
        leading.push_back(noun);
        break;
      }
    }
    if (leading.size() == 3) break;
  }
  for (const auto& [t, c] : ranked) {
    if (leading.size() >= 3) break;
    const std::string noun = tile_noun(t);
    if (std::find(leading.begin(), leading.end(), noun) == leading.end()) leading.push_back(noun);
  }

  std::string fluid_sentence;
  for (const auto& [t, c] : census) {
    if ((t == Tile::Water || t == Tile::Lava) && c >= 8) {
      fluid_sentence = t == Tile::Water ? " A lake of water spreads across part of the map."
                                        : " A pool of lava cuts through part of the map.";
      break;
    }
  }
  const bool connected = !meta.paths.empty();
  auto adjective = [&] { return std::string(kAdjectives[rng.below(kAdjectives.size())]); };
  const int offset = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
  auto room_at = [&](int i) -> const RoomMeta& { return *rooms[static_cast<std::size_t>((i + offset) % k)].room; };
  auto dir_of = [&](const RoomMeta& r) { return std::string(direction_words(r.direction)); };
  auto region_sentence = [&](const RoomMeta& r, std::string_view noun) {
    return "The " + dir_of(r) + " " + std::string(noun) + " is " + room_phrase(r, rng) + ".";
  };
  const std::string featuring = t2.empty() ? t1 : t1 + " and " + t2;

  DescriptionSet d;
  d.long_texts[0] = "A " + adjective() + " terrain with " + areas_phrase(k) + (k == 1 ? ", featuring " : ", each featuring ") +
                    featuring + ". " + region_sentence(room_at(0), "region");
  d.long_texts[1] = "This map is divided into " + areas_phrase(k) + (connected ? " connected by pathways. " : ". ") +
                    region_sentence(room_at(1), "area");
  d.long_texts[2] = capitalize(areas_phrase(k)) + " make up this " + adjective() + " dungeon, mostly " + t1 +
                    (t2.empty() ? "" : " with some " + t2) + ". " + region_sentence(room_at(2), "region") +
                    fluid_sentence;
  d.long_texts[3] = region_sentence(room_at(3), "region") + " Across the " + areas_phrase(k) + ", " +
                    (t2.empty() ? t1 + " is the most common tile." : t1 + " and " + t2 + " are the most common tiles.");
  d.long_texts[4] = "A " + adjective() + " layout of " + areas_phrase(k) + (connected ? " linked by narrow paths. " : ". ") +
                    region_sentence(room_at(4), place_noun(room_at(4).direction)) + (connected ? "" : fluid_sentence);

  const std::string K = capitalize(number_word(k));
  const std::string a = leading[0];
  if (leading.size() >= 3) {
    d.short_texts[0] = K + "-area division: " + leading[0] + ", " + leading[1] + ", and " + leading[2] + ".";
  } else if (leading.size() == 2) {
    d.short_texts[0] = K + "-area division: " + leading[0] + " and " + leading[1] + " throughout.";
  } else {
    d.short_texts[0] = K + "-area division: mostly " + a + " throughout the map.";
  }
  d.short_texts[1] = capitalize(areas_phrase(k)) + " of " + featuring + (connected ? " linked by paths." : " standing apart.");

  const RoomMeta& side = room_at(1);
  std::string b = tile_noun(side.tile_counts.front().first);
  for (const auto& [t, c] : side.tile_counts) {
    if (tile_noun(t) != a) {
      b = tile_noun(t);
      break;
    }
  }
  d.short_texts[2] = "Mostly " + a + ", with " + b + " in the " + dir_of(side) + " area.";
  if (t3.empty()) {
    d.short_texts[3] = "A " + adjective() + " map made of " + featuring + ".";
  } else {
    d.short_texts[3] = "A " + adjective() + " map of " + t1 + ", " + t2 + ", and " + t3 + ".";
  }
  const RoomMeta& other = room_at(2);
  d.short_texts[4] = "A " + dir_of(other) + " area of " + tile_noun(other.tile_counts.front().first) + " among " +
                     number_word(k) + (k == 1 ? " region." : " regions.");
  return d;
}

}  // namespace moonshine
