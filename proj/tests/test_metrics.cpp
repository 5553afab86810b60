#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "moonshine/error.hpp"
#include "moonshine/eval.hpp"
#include "moonshine/metrics.hpp"

using namespace moonshine;
using doctest::Approx;

namespace {

// ROUGE-L F-measure from an LCS length, beta = 1.2.
double rouge_oracle(double lcs, double hyp_len, double ref_len) {
  const double p = lcs / hyp_len, r = lcs / ref_len, b2 = 1.44;
  return 100.0 * (1 + b2) * p * r / (r + b2 * p);
}

std::string random_sentence(std::mt19937_64& gen) {
  static const char* words[] = {"the", "cave", "lava", "north", "room", "of", "ice", "big", "small", "water"};
  std::uniform_int_distribution<int> len(1, 12), pick(0, 9);
  std::string s;
  for (int i = len(gen); i > 0; --i) s += std::string(words[pick(gen)]) + " ";
  return s;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("bleu") {
    const auto b = bleu("the cat sat on the mat", {"the cat is on the mat"});
    CHECK(b[0] == Approx(100.0 * 5 / 6));
    CHECK(b[1] == Approx(100.0 * std::sqrt(5.0 / 6 * 3.0 / 5)));
    // Trigrams: "on the mat" only.
    CHECK(b[2] == Approx(100.0 * std::cbrt(5.0 / 6 * 3.0 / 5 * 1.0 / 4)));
    CHECK(b[3] == 0.0);
    CHECK(bleu("the cat", {"the cat sat"})[0] == Approx(60.65).epsilon(5e-5));
    const auto short_hyp = bleu("the cat", {"the cat sat on the mat"});
    CHECK(short_hyp[0] == Approx(100.0 * std::exp(1.0 - 3.0)));
    CHECK(bleu("the the the the", {"the cat"})[0] == Approx(25.0));
    const auto exact = bleu("a dark cave of ice", {"a dark cave of ice"});
    for (double v : exact) CHECK(v == Approx(100.0));
    CHECK(bleu("", {"x y"})[0] == 0.0);
    CHECK_THROWS_AS(bleu("x", {}), UsageError);
    // Multi-reference clipping takes the max count over references.
    CHECK(bleu("the the", {"the cat", "the the"})[0] == Approx(100.0));
  }

  TEST_CASE("bleu is monotone non-increasing in n") {
    std::mt19937_64 gen(1);
    for (int i = 0; i < 300; ++i) {
      const auto b = bleu(random_sentence(gen), {random_sentence(gen), random_sentence(gen)});
      CHECK(b[0] >= b[1] - 1e-9);
      CHECK(b[1] >= b[2] - 1e-9);
      CHECK(b[2] >= b[3] - 1e-9);
    }
  }

  TEST_CASE("rouge-l") {
    CHECK(rouge_l("the cat sat on the mat", "the cat is on the mat") == Approx(rouge_oracle(5, 6, 6)));
    CHECK(rouge_l("the cat", "the cat sat on the mat") == Approx(rouge_oracle(2, 2, 6)));
    CHECK(rouge_l("the cat sat on the mat", "the cat") == Approx(rouge_oracle(2, 6, 2)));
    CHECK(rouge_l("the cat", "the cat sat on the mat") != Approx(rouge_l("the cat sat on the mat", "the cat")));
    // LCS 3 of hyp 4 / ref 3 is 87.98 with R = LCS/|ref|; the roles swapped give 83.56.
    CHECK(rouge_l("a b c d", "a c d") == Approx(87.98).epsilon(5e-5));
    CHECK(rouge_l("a c d", "a b c d") == Approx(83.56).epsilon(5e-5));
    CHECK(rouge_l("a b c", "a b c") == Approx(100.0));
    CHECK(rouge_l("", "a") == 0.0);
    CHECK(rouge_l("x y", "a b") == 0.0);
  }

  TEST_CASE("meteor") {
    for (int n : {1, 2, 5, 9}) {
      std::string s;
      for (int i = 0; i < n; ++i) s += "w" + std::to_string(i) + " ";
      CHECK(meteor_lite(s, s) == Approx(100.0 * (1 - 0.5 / (n * n * n))));
    }
    CHECK(meteor_lite("running water", "run water") == Approx(meteor_lite("run water", "run water")));
    const auto stems = stem_candidates("running");
    CHECK(std::find(stems.begin(), stems.end(), "run") != stems.end());
    CHECK(meteor_lite("cave", "lava") == 0.0);
    // Two matches in two chunks: F = 1 (P = R = 1), penalty 0.5 * (2/2)^3.
    CHECK(meteor_lite("b a", "a b") == Approx(50.0));
  }

  TEST_CASE("edit distance") {
    CHECK(edit_distance("kitten", "sitting") == 3);
    CHECK(edit_distance("", "abc") == 3);
    CHECK(edit_distance("abc", "abc") == 0);
    std::mt19937_64 gen(7);
    std::uniform_int_distribution<int> len(0, 8), ch('a', 'c');
    auto rnd = [&] {
      std::string s;
      for (int i = len(gen); i > 0; --i) s.push_back(static_cast<char>(ch(gen)));
      return s;
    };
    for (int i = 0; i < 300; ++i) {
      const auto a = rnd(), b = rnd(), c = rnd();
      CHECK(edit_distance(a, c) <= edit_distance(a, b) + edit_distance(b, c));
      CHECK(edit_distance(a, b) == edit_distance(b, a));
    }
    MapGrid m1(4, 4, Tile::Ground), m2 = m1;
    m2.at(1, 1) = Tile::Lava;
    m2.at(3, 0) = Tile::Ice;
    CHECK(map_edit_distance(m1, m2) == 2);
  }

  TEST_CASE("connectivity") {
    MapGrid m(32, 32, Tile::None);
    fixtures::fill_rect(m, 2, 2, 2, 5, Tile::Ground);
    fixtures::fill_rect(m, 20, 20, 1, 5, Tile::Grass);
    const auto r = connectivity_report(m);
    CHECK(r.components == 2);
    CHECK(r.largest == 10);
    CHECK(r.fragmentation == Approx(1.0 / 3).epsilon(1e-4));
    const auto none = connectivity_report(MapGrid(8, 8, Tile::Stone));
    CHECK(none.components == 0);
    CHECK(none.fragmentation == 0.0);
    // Hazards split walkable regions.
    MapGrid river(3, 5, Tile::Ground);
    for (int r2 = 0; r2 < 3; ++r2) river.at(r2, 2) = Tile::Water;
    CHECK(connectivity_report(river).components == 2);
    river.at(1, 2) = Tile::Bridge;
    CHECK(connectivity_report(river).components == 1);

    std::mt19937_64 gen(9);
    for (int i = 0; i < 200; ++i) {
      const auto map = fixtures::random_map(gen);
      const auto sizes = fixtures::component_sizes(map);
      const auto rep = connectivity_report(map);
      CHECK(rep.components == static_cast<int>(sizes.size()));
      CHECK(rep.largest == (sizes.empty() ? 0 : *std::max_element(sizes.begin(), sizes.end())));
    }
  }

  TEST_CASE("text protocol over template labels") {
    const auto records = fixtures::labeled_records(10, 21);
    const auto rows = text_protocol(records);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].kind == "long");
    CHECK(rows[1].kind == "short");
    CHECK(rows[0].pairs == 40);
    double bleu1 = 0;
    for (const auto& r : records) bleu1 += bleu(r.descriptions->long_texts[3], {r.descriptions->long_texts[0]})[0];
    const auto row = text_pairs({records[0].descriptions->long_texts[3]}, {records[0].descriptions->long_texts[0]});
    CHECK(row.mean.bleu[0] == Approx(bleu(records[0].descriptions->long_texts[3], {records[0].descriptions->long_texts[0]})[0]));
    CHECK(bleu1 > 0);
    const auto j = text_report_json(rows);
    CHECK(j["rows"][0]["spice"].is_null());
    CHECK(j["rows"][1]["pairs"] == 40);
    const auto csv = text_report_csv(rows);
    CHECK(csv.rfind("kind,", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
    CHECK_THROWS_AS(text_pairs({"a"}, {"a", "b"}), DataError);
    const auto multi = text_pairs({"a b c d"}, {"x y z\ta b c d"});
    CHECK(multi.mean.rouge_l == Approx(100.0));
    CHECK(multi.mean.meteor == Approx(meteor_lite("a b c d", "a b c d")));
  }

  TEST_CASE("map report and comparison") {
    MapGrid one(8, 8, Tile::Ground), two(8, 8, Tile::None);
    fixtures::fill_rect(two, 0, 0, 2, 2, Tile::Ground);
    fixtures::fill_rect(two, 5, 5, 2, 2, Tile::Ground);
    const auto fdm = summarize_connectivity("fdm", {two, two, one});
    const auto ddm = summarize_connectivity("ddm", {one, one, one});
    CHECK(fdm.components.mean == Approx(5.0 / 3));
    CHECK(fdm.components.stddev == Approx(std::sqrt(2.0 / 9)));
    CHECK(ddm.fragmentation.mean == 0.0);
    const auto j = map_report_json({fdm, ddm});
    CHECK(j["comparison"]["holds"] == true);
    CHECK(j["models"].size() == 2);
    const auto flipped = map_report_json({ddm, summarize_connectivity("fdm", {one})});
    CHECK(flipped["comparison"]["holds"] == false);
    CHECK(map_report_csv({fdm}).find("fdm,3,") != std::string::npos);
    CHECK_THROWS_AS(summarize_connectivity("x", {}), DataError);
    const auto ms = mean_stddev({1, 2, 3, 4});
    CHECK(ms.mean == Approx(2.5));
    CHECK(ms.stddev == Approx(std::sqrt(1.25)));
  }

  TEST_CASE("scatter report") {
    std::vector<ScatterRow> rows{{"a", "fdm", 10, 20}, {"b", "fdm", 20, 40}, {"c", "fdm", 30, 60}, {"a", "ddm", 10, 5}};
    const auto csv = scatter_csv(rows);
    CHECK(csv.rfind("map_id,model,ground_truth_score,generated_score\n", 0) == 0);
    const auto j = scatter_report_json(rows);
    REQUIRE(j["models"].size() == 2);
    const auto& fdm = j["models"][1];
    CHECK(fdm["model"] == "fdm");
    CHECK(fdm["maps"] == 3);
    CHECK(fdm["generated_score"]["mean"].get<double>() == Approx(40.0));
    CHECK(fdm["pearson"].get<double>() == Approx(1.0));
    CHECK(j["models"][0]["pearson"].is_null());
  }

  TEST_CASE("pairwise diversity") {
    MapGrid a(2, 2, Tile::Ground), b = a, c = a;
    b.at(0, 0) = Tile::Ice;
    c.at(0, 0) = Tile::Ice;
    c.at(1, 1) = Tile::Ice;
    CHECK(mean_pairwise_edit_distance({a, b, c}) == Approx((1 + 2 + 1) / 3.0));
    CHECK(mean_pairwise_edit_distance({a}) == 0.0);
  }
}
