#include <doctest.h>

#include "fixtures.hpp"
#include "moonshine/error.hpp"

using namespace moonshine;

namespace {

bool has_kind(const std::vector<Violation>& v, ViolationKind k) {
  return std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.kind == k; });
}

MapMeta four_room_exemplar() {
  MapMeta m;
  auto room = [&](int id, Direction d, std::vector<TileCount> tc) {
    RoomMeta r;
    r.room_id = id;
    r.direction = d;
    r.tile_counts = tc;
    int n = 0;
    for (auto& [t, c] : tc) n += c;
    for (int i = 0; i < n; ++i) r.cells.push_back({id, i});
    m.rooms.push_back(r);
  };
  room(0, Direction::NW, {{Tile::Ground, 20}, {Tile::Stone, 6}, {Tile::Ashes, 4}});
  room(1, Direction::NE, {{Tile::Ground, 30}, {Tile::Fungus, 12}});
  room(2, Direction::SW, {{Tile::Fungus, 25}, {Tile::Ground, 10}});
  room(3, Direction::SE, {{Tile::Ground, 28}, {Tile::Fungus, 8}});
  m.paths = {{{0, 1}, {}}, {{1, 2}, {}}, {{2, 3}, {}}};
  return m;
}

const std::vector<TileCount> kExemplarCensus{
    {Tile::None, 700}, {Tile::Ground, 88}, {Tile::Fungus, 45}, {Tile::Stone, 6}, {Tile::Ashes, 4}};

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

TEST_SUITE("labeling") {
  TEST_CASE("word and sentence counting") {
    CHECK(count_words("") == 0);
    CHECK(count_words("  Hello,   world!  ") == 2);
    CHECK(count_words("a - b") == 2);
    CHECK(count_words("3 rooms") == 2);
    CHECK(count_sentences("One. Two! Three?") == 3);
    CHECK(count_sentences("No terminator") == 1);
    CHECK(count_sentences("...") == 0);
  }

  TEST_CASE("description validators") {
    CHECK(validate_description("A dark map. With two rooms.", DescriptionKind::Long).empty());
    CHECK(has_kind(validate_description("One. Two. Three. Four.", DescriptionKind::Long), ViolationKind::SentenceCount));
    CHECK(has_kind(validate_description("   ", DescriptionKind::Long), ViolationKind::Empty));
    CHECK(validate_description("Five words make this line.", DescriptionKind::Short).empty());
    CHECK(has_kind(validate_description("Only four words here.", DescriptionKind::Short), ViolationKind::WordCount));
    CHECK(has_kind(validate_description(
                       "one two three four five six seven eight nine ten eleven twelve thirteen fourteen fifteen sixteen",
                       DescriptionKind::Short),
                   ViolationKind::WordCount));
    CHECK(validate_description("one two three four five six seven eight nine ten eleven twelve thirteen fourteen fifteen",
                               DescriptionKind::Short)
              .empty());
    CHECK(has_kind(validate_description("A Serene grassy field.", DescriptionKind::Long), ViolationKind::BannedWord));
    CHECK(has_kind(validate_description("A twisting LABYRINTH of stone walls.", DescriptionKind::Short),
                   ViolationKind::BannedWord));

    DescriptionSet set;
    for (int i = 0; i < kLongCount; ++i) set.long_texts[static_cast<std::size_t>(i)] = "Long line number " + std::to_string(i) + ".";
    for (int i = 0; i < kShortCount; ++i)
      set.short_texts[static_cast<std::size_t>(i)] = "short line number " + std::to_string(i) + " here";
    CHECK(validate_set(set).empty());
    set.short_texts[3] = set.short_texts[1];
    CHECK(has_kind(validate_set(set), ViolationKind::Duplicate));
  }

  TEST_CASE("prompt bundle") {
    const auto bundle = build_pregen_prompt(default_few_shot_examples());
    const auto text = bundle.render();
    CHECK(std::count(text.begin(), text.end(), '#') >= 8);
    CHECK(text.find("## ") != std::string::npos);
    CHECK_THROWS_AS(build_pregen_prompt({}), UsageError);
    const auto records = fixtures::labeled_records(1, 3);
    const auto round = build_round_prompt(records[0].grid, *records[0].meta);
    CHECK(round.find("Ground") != std::string::npos);
    CHECK(round.find("Room 0") != std::string::npos);
  }

  TEST_CASE("template labels for the four-room exemplar") {
    const auto d = template_label(four_room_exemplar(), kExemplarCensus, 1);
    CHECK(validate_set(d).empty());
    bool found = false;
    for (const auto& text : d.long_texts) {
      const auto t = lower(text);
      found = found || (t.find("four main areas") != std::string::npos && t.find("northwest") != std::string::npos &&
                        t.find("stone") != std::string::npos && t.find("ashes") != std::string::npos);
    }
    CHECK(found);
    CHECK(template_label(four_room_exemplar(), kExemplarCensus, 1) == d);
    CHECK(template_label(four_room_exemplar(), kExemplarCensus, 2) != d);
  }

  TEST_CASE("template labels satisfy the rules on generated maps") {
    int bad = 0;
    for (const auto& r : fixtures::labeled_records(500, 17)) {
      REQUIRE(r.descriptions);
      const auto v = validate_set(*r.descriptions);
      if (!v.empty()) {
        ++bad;
        MESSAGE(r.id << ": " << v.front().detail);
      }
      for (const auto& s : r.descriptions->short_texts) {
        CHECK(count_words(s) >= 5);
        CHECK(count_words(s) <= 15);
      }
    }
    CHECK(bad == 0);
  }

  TEST_CASE("template labels for an empty map") {
    const auto d = template_label(MapMeta{}, {{Tile::None, 1024}}, 4);
    CHECK(validate_set(d).empty());
  }
}
