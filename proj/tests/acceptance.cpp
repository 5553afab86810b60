// Acceptance gate: one PASS/FAIL line per primary criterion.
// Usage: moonshine_acceptance [criterion numbers...]   (default: all)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "grad_check.hpp"
#include "moonshine/aligner.hpp"
#include "moonshine/ddm.hpp"
#include "moonshine/eval.hpp"
#include "moonshine/fdm.hpp"
#include "moonshine/metrics.hpp"
#include "moonshine/nn/layers.hpp"

using namespace moonshine;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Independent per-cell sum check in double; also rejects negative or non-finite entries.
double simplex_error(const ProbMap& pm) {
  double worst = 0;
  for (int i = 0; i < pm.height(); ++i) {
    for (int j = 0; j < pm.width(); ++j) {
      double sum = 0;
      for (int k = 0; k < pm.channels(); ++k) {
        const double p = pm(i, j, k);
        if (!std::isfinite(p) || p < 0) return INFINITY;
        sum += p;
      }
      worst = std::max(worst, std::abs(sum - 1.0));
    }
  }
  return worst;
}

std::string grid_bytes(const MapGrid& m) {
  std::string s;
  s.reserve(static_cast<std::size_t>(m.size()));
  for (int i = 0; i < m.size(); ++i) s.push_back(static_cast<char>(tile_id(m[i])));
  return s;
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + MOONSHINE_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int rc = std::system(cmd.c_str());
  return rc == -1 ? -1 : WEXITSTATUS(rc);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Desk-scale runs shared between the training and connectivity criteria.
struct DeskRuns {
  std::vector<TrainExample> train;       // 64 template-labeled maps
  std::vector<TrainExample> validation;  // 16 more from the same generator stream
  std::optional<FdmModel> fdm;
  std::optional<DdmModel> ddm;
  LossHistory fdm_history;
  LossHistory ddm_history;

  void data() {
    if (!train.empty()) return;
    auto all = fixtures::examples(fixtures::labeled_records(80, 101));
    validation.assign(all.begin() + 64, all.end());
    all.resize(64);
    train = std::move(all);
  }
  const FdmModel& trained_fdm() {
    if (!fdm) {
      data();
      FdmConfig cfg;
      cfg.seed = 11;
      fdm = fdm_init(cfg);
      fdm_history = fdm_train(*fdm, train, validation);
    }
    return *fdm;
  }
  const DdmModel& trained_ddm() {
    if (!ddm) {
      data();
      DdmConfig cfg;
      cfg.seed = 12;
      ddm = ddm_init(cfg);
      ddm_history = ddm_train(*ddm, train, validation);
    }
    return *ddm;
  }
};

DeskRuns desk;

Outcome map_representation() {
  std::mt19937_64 gen(7);
  double worst = 0;
  int maps = 0;
  for (int n = 0; n < 200; ++n, ++maps) worst = std::max(worst, simplex_error(one_hot_encode(fixtures::random_map(gen))));
  for (const auto& g : generate_corpus(100, 3, GenConfig{})) {
    worst = std::max(worst, simplex_error(one_hot_encode(g.grid)));
    ++maps;
  }
  FdmConfig cfg;
  cfg.seed = 5;
  const auto model = fdm_init(cfg);
  Rng rng(9);
  for (int n = 0; n < 40; ++n, ++maps) {
    const float scale = n % 4 == 3 ? 1000.0f : 1.0f;
    TextEmbedding e(cfg.embed_dim);
    for (int k = 0; k < e.size(); ++k) e[k] = scale * static_cast<float>(rng.normal());
    if (n % 2 == 0) normalize_embedding(e);
    Eigen::VectorXf z = scale * fdm_noise(cfg.noise_dim, static_cast<std::uint64_t>(n));
    worst = std::max(worst, simplex_error(fdm_forward(model, e, z)));
  }
  const int cells = kDefaultMapSize * kDefaultMapSize * kTileCount;
  for (int n = 0; n < 200; ++n, ++maps) {
    Eigen::ArrayXf a(cells);
    const float scale = n % 2 ? 50.0f : 1.0f;
    for (int k = 0; k < cells; ++k) a[k] = scale * static_cast<float>(rng.normal());
    worst = std::max(worst, simplex_error(ddm_decode(a, kDefaultMapSize, kDefaultMapSize)));
  }
  return {worst <= 1e-6, std::to_string(maps) + " maps from encode, FDM forward, DDM decode; max |sum-1| = " +
                             fmt("%.2e", worst) + " (tol 1e-6)"};
}

Outcome generator_playability() {
  const auto a = generate_corpus(1000, 2024, GenConfig{});
  const auto b = generate_corpus(1000, 2024, GenConfig{});
  int bad = 0, differing = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (fixtures::component_sizes(a[i].grid).size() != 1) ++bad;
    if (grid_bytes(a[i].grid) != grid_bytes(b[i].grid) || a[i].rooms != b[i].rooms ||
        a[i].corridors != b[i].corridors || a[i].seed != b[i].seed) {
      ++differing;
    }
  }
  return {a.size() == 1000 && bad == 0 && differing == 0,
          std::to_string(a.size()) + " maps, " + std::to_string(bad) + " with != 1 walkable component (flood-fill oracle), " +
              std::to_string(differing) + " differing on regeneration"};
}

std::vector<Cell> rect_cells(int r0, int c0, int h, int w) {
  std::vector<Cell> out;
  for (int r = r0; r < r0 + h; ++r)
    for (int c = c0; c < c0 + w; ++c) out.push_back({r, c});
  return out;
}

Outcome metadata_fixtures() {
  MapGrid two(32, 32, Tile::None);
  fixtures::fill_rect(two, 2, 2, 5, 5, Tile::Ground);
  fixtures::fill_rect(two, 4, 7, 1, 6, Tile::Ground);
  fixtures::fill_rect(two, 2, 13, 5, 5, Tile::Ground);
  two.at(2, 3) = Tile::Grass;
  two.at(3, 3) = Tile::Grass;
  two.at(5, 5) = Tile::Grass;
  two.at(6, 17) = Tile::Sand;
  MapMeta want_two;
  want_two.rooms = {{0, rect_cells(2, 2, 5, 5), Direction::NW, {{Tile::Ground, 22}, {Tile::Grass, 3}}},
                    {1, rect_cells(2, 13, 5, 5), Direction::N, {{Tile::Ground, 24}, {Tile::Sand, 1}}}};
  want_two.paths = {{{0, 1}, rect_cells(4, 7, 1, 6)}};

  MapGrid three(32, 32, Tile::None);
  fixtures::fill_rect(three, 13, 2, 5, 5, Tile::Ground);
  fixtures::fill_rect(three, 15, 7, 1, 6, Tile::Ground);
  fixtures::fill_rect(three, 13, 13, 5, 5, Tile::Fungus);
  fixtures::fill_rect(three, 15, 18, 1, 6, Tile::Bridge);
  fixtures::fill_rect(three, 13, 24, 5, 5, Tile::Ground);
  three.at(14, 14) = Tile::Grass;
  three.at(14, 15) = Tile::Grass;
  three.at(16, 25) = Tile::Ice;
  MapMeta want_three;
  want_three.rooms = {{0, rect_cells(13, 2, 5, 5), Direction::W, {{Tile::Ground, 25}}},
                      {1, rect_cells(13, 13, 5, 5), Direction::C, {{Tile::Fungus, 23}, {Tile::Grass, 2}}},
                      {2, rect_cells(13, 24, 5, 5), Direction::E, {{Tile::Ground, 24}, {Tile::Ice, 1}}}};
  want_three.paths = {{{0, 1}, rect_cells(15, 7, 1, 6)}, {{1, 2}, rect_cells(15, 18, 1, 6)}};

  const bool ok2 = analyze(two) == want_two;
  const bool ok3 = analyze(three) == want_three;
  return {ok2 && ok3, std::string("two-room/one-corridor ") + (ok2 ? "exact" : "MISMATCH") +
                          ", three-room/two-corridor " + (ok3 ? "exact" : "MISMATCH")};
}

struct InversionErrors {
  double reconstruction = 0;  // |recovered m0 - m0|
  double residual = 0;        // |m_t - (sqrt(abar) m0 + sqrt(1 - abar) eps)|
};

InversionErrors inversion_errors(const DiffusionSchedule& sched, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  Rng rng(seed + 1);
  InversionErrors e;
  for (int t = 1; t <= sched.steps; ++t) {
    const auto m0 = scale_map(one_hot_encode(fixtures::random_map(gen, 8, 8)));
    Eigen::ArrayXf eps(m0.size());
    for (Eigen::Index k = 0; k < eps.size(); ++k) eps[k] = static_cast<float>(rng.normal());
    const auto mt = forward_diffuse(sched, m0, t, eps);
    const double a = sched.alpha_bar_at(t);
    for (Eigen::Index k = 0; k < mt.size(); ++k) {
      const double rec = (mt[k] - std::sqrt(1 - a) * eps[k]) / std::sqrt(a);
      e.reconstruction = std::max(e.reconstruction, std::abs(rec - m0[k]));
      e.residual = std::max(e.residual, std::abs(mt[k] - (std::sqrt(a) * m0[k] + std::sqrt(1 - a) * eps[k])));
    }
  }
  return e;
}

Outcome ddpm_algebra() {
  const auto sched = make_schedule(1000);
  bool decreasing = true;
  for (int t = 2; t <= sched.steps; ++t) decreasing = decreasing && sched.alpha_bar_at(t) < sched.alpha_bar_at(t - 1);
  // Cumulative product recomputed from the betas.
  double abar = 1, abar_drift = 0;
  for (int t = 1; t <= sched.steps; ++t) {
    abar *= 1.0 - sched.beta_at(t);
    abar_drift = std::max(abar_drift, std::abs(abar - sched.alpha_bar_at(t)));
  }
  // Maps are stored as float32, so recovering m0 at T=1000 divides rounding error by
  // sqrt(abar_1000) ~ 6e-3. Recovery is gated on the training schedule (T=200); on T=1000
  // the identity is gated in residual form and the recovery error is reported.
  const auto train = inversion_errors(make_schedule(DdmConfig{}.steps), 4);
  const auto full = inversion_errors(sched, 5);
  const double last = sched.alpha_bar_at(sched.steps);
  return {train.reconstruction <= 1e-5 && full.residual <= 1e-5 && decreasing && last < 1e-4 && abar_drift < 1e-12,
          "recovery error " + fmt("%.2e", train.reconstruction) + " over t=1..200 (tol 1e-5); T=1000 residual " +
              fmt("%.2e", full.residual) + " (tol 1e-5), recovery " + fmt("%.2e", full.reconstruction) +
              " (float32 limit); abar strictly decreasing: " + (decreasing ? "yes" : "no") + "; abar_1000 = " +
              fmt("%.3e", last) + " (< 1e-4)"};
}

Outcome gradient_correctness() {
  using namespace moonshine::testing;
  using namespace moonshine::nn;
  Rng rng(3);
  const Layout l{2, 4, 4};
  std::vector<std::pair<std::string, double>> checks;
  auto check = [&](const std::string& name, const std::vector<Var<double>>& in, const std::function<Var<double>()>& f,
                   double eps = 1e-3) { checks.emplace_back(name, grad_error(in, f, eps)); };
  {
    auto x = random_leaf(5, 3, rng), w = random_leaf(4, 5, rng), b = random_leaf(4, 1, rng);
    check("dense", {x, w, b}, [&] { return project(dense<double>(x, w, b)); });
  }
  {
    auto x = random_input(3, l, rng);
    auto w = random_leaf(4, 27, rng), b = random_leaf(4, 1, rng);
    check("conv3x3", {x, w, b}, [&] { return project(conv3x3<double>(x, w, b)); });
  }
  {
    auto x = random_input(8, l, rng);
    auto g = random_leaf(8, 1, rng), b = random_leaf(8, 1, rng);
    check("group_norm", {x, g, b}, [&] { return project(group_norm<double>(x, 4, g, b)); });
  }
  {
    auto x = random_input(3, l, rng);
    check("silu", {x}, [&] { return project(silu<double>(x)); });
    check("upsample", {x}, [&] { return project(upsample_nearest2<double>(x)); });
    check("avg_pool", {x}, [&] { return project(avg_pool2<double>(x)); });
    check("softmax", {x}, [&] { return project(softmax_channels<double>(x)); });
  }
  {
    auto q = random_input(4, l, rng);
    auto k = random_leaf(4, 2, rng), v = random_leaf(4, 2, rng);
    check("attention", {q, k, v}, [&] { return project(attention<double>(q, k, v, 1)); });
  }
  {
    auto x = random_input(5, l, rng);
    Mat<double> onehot = Mat<double>::Zero(5, l.columns());
    for (int j = 0; j < l.columns(); ++j) onehot(j % 5, j) = 1.0;
    const Mat<double> target = random_mat(5, l.columns(), rng);
    check("mse loss", {x}, [&] { return mse_loss<double>(x, target); });
    check("cross-entropy loss", {x}, [&] { return cross_entropy_channels<double>(x, onehot); });
    check("softmax+mse (FDM loss path)", {x}, [&] { return mse_loss<double>(softmax_channels<double>(x), onehot); });
  }
  {
    auto z = random_leaf(4, 4, rng);
    check("info-nce loss", {z}, [&] { return symmetric_info_nce<double>(z); });
  }
  {
    ParamStore<double> ps;
    declare_resblock(ps, "res", 4, 8, 6, rng);
    declare_cross_attention(ps, "attn", 8, 5, rng);
    declare_time_mlp(ps, "time", 6, rng);
    auto x = random_input(4, l, rng);
    auto ctx = random_leaf(5, 2, rng);
    std::vector<Var<double>> in{x, ctx};
    for (auto& e : ps.entries()) in.push_back(e.var);
    check("resblock+cross-attention+time mlp", in, [&] {
      auto temb = apply_time_mlp(ps, "time", {3, 17});
      return project(apply_cross_attention(ps, "attn", apply_resblock(ps, "res", x, temb), ctx, 1));
    });
  }
  {
    ParamStore<double> ps;
    declare_unet(ps, UNetShape{3, 4, 8, 6}, rng);
    auto x = random_input(3, {2, 8, 8}, rng);
    auto emb = random_leaf(6, 2, rng);
    std::vector<Var<double>> in{x, emb};
    for (auto& e : ps.entries()) in.push_back(e.var);
    const std::vector<int> ts{3, 17};
    check("mini unet", in, [&] { return project(unet_forward(ps, x, ts, emb)); }, 1e-5);
  }
  double worst = 0;
  std::string worst_name;
  for (const auto& [name, err] : checks) {
    if (!(err <= worst)) {
      worst = err;
      worst_name = name;
    }
  }
  return {worst < 1e-2, std::to_string(checks.size()) + " central-difference checks; worst rel. error " + fmt("%.2e", worst) +
                            " (" + worst_name + "; tol 1e-2)"};
}

Outcome fdm_training() {
  desk.trained_fdm();
  const double first = desk.fdm_history.train.front(), last = desk.fdm_history.train.back();
  FdmConfig cfg;
  cfg.seed = 21;
  cfg.epochs = 300;
  cfg.batch_size = 1;
  cfg.lr = 2e-3;
  auto single = fdm_init(cfg);
  const std::vector<TrainExample> pair{desk.train[0]};
  fdm_train(single, pair, {});
  const double acc = fixtures::cell_accuracy(fdm_generate(single, pair[0].captions[0], 77), pair[0].map);
  // Overfitting order on the shared 64/16 split: epoch of the validation minimum over total epochs.
  desk.trained_ddm();
  const double fpos = validation_minimum_position(desk.fdm_history);
  const double dpos = validation_minimum_position(desk.ddm_history);
  return {last <= 0.1 * first && acc >= 0.99 && fpos < dpos,
          "64 maps x 200 epochs: train MSE " + fmt("%.5f", first) + " -> " + fmt("%.5f", last) + " (" +
              fmt("%.1f", 100 * last / first) + "% of initial, need <= 10%); single-pair accuracy " + fmt("%.4f", acc) +
              " (need >= 0.99); validation-minimum position fdm " + fmt("%.3f", fpos) + " < ddm " + fmt("%.3f", dpos)};
}

Outcome ddm_training() {
  const auto& model = desk.trained_ddm();
  const double first = desk.ddm_history.train.front(), last = desk.ddm_history.train.back();
  const auto& prompt = desk.validation[0].captions[0];
  const bool deterministic = ddm_sample(model, prompt, 5).grid == ddm_sample(model, prompt, 5).grid;
  std::set<std::string> distinct;
  for (std::uint64_t s = 0; s < 10; ++s) distinct.insert(grid_bytes(ddm_sample(model, prompt, 100 + s).grid));
  const bool baseline = std::abs(first - 1.0) < 0.1;
  return {baseline && last < 0.5 && deterministic && distinct.size() >= 8,
          "64 maps x 100 epochs: noise MSE " + fmt("%.4f", first) + " (untrained, ~1.0) -> " + fmt("%.4f", last) +
              " (need < 0.5); seed-deterministic: " + (deterministic ? "yes" : "no") + "; distinct maps over 10 seeds: " +
              std::to_string(distinct.size()) + " (need >= 8)"};
}

Outcome conditioning_effect() {
  constexpr int kCorpus = 256, kPairs = 128, kFdmEpochs = 40, kDdmEpochs = 100;
  const auto corpus = fixtures::examples(fixtures::labeled_records(kCorpus, 303));
  FdmConfig fc;
  fc.seed = 31;
  fc.epochs = kFdmEpochs;
  auto fdm = fdm_init(fc);
  fdm_train(fdm, corpus, {});
  DdmConfig dc;
  dc.seed = 32;
  dc.epochs = kDdmEpochs;
  auto ddm = ddm_init(dc);
  ddm_train(ddm, corpus, {});
  AlignerConfig ac;
  ac.seed = 33;
  auto aligner = aligner_init(ac);
  train_aligner(aligner, corpus, {});

  std::vector<MapGrid> fdm_maps, ddm_maps;
  for (int i = 0; i < kPairs; ++i) {
    const auto& prompt = corpus[static_cast<std::size_t>(i)].captions[0];
    fdm_maps.push_back(fdm_generate(fdm, prompt, 1000 + static_cast<std::uint64_t>(i)));
    ddm_maps.push_back(ddm_sample(ddm, prompt, 1000 + static_cast<std::uint64_t>(i)).grid);
  }
  // Shuffled pairing: a seeded cyclic shift, which never pairs a prompt with its own map.
  std::mt19937_64 gen(34);
  const int shift = 1 + static_cast<int>(gen() % (kPairs - 1));
  std::string detail;
  bool pass = true;
  for (const auto& [name, maps] : {std::pair<std::string, const std::vector<MapGrid>*>{"fdm", &fdm_maps}, {"ddm", &ddm_maps}}) {
    double matched = 0, shuffled = 0;
    for (int i = 0; i < kPairs; ++i) {
      const auto& prompt = corpus[static_cast<std::size_t>(i)].captions[0];
      matched += align_score(aligner, prompt, (*maps)[static_cast<std::size_t>(i)]);
      shuffled += align_score(aligner, prompt, (*maps)[static_cast<std::size_t>((i + shift) % kPairs)]);
    }
    matched /= kPairs;
    shuffled /= kPairs;
    pass = pass && matched > shuffled;
    detail += name + " matched " + fmt("%.2f", matched) + " vs shuffled " + fmt("%.2f", shuffled) + "; ";
  }
  detail += std::to_string(kPairs) + " pairs, 256-map corpus, epochs fdm " + std::to_string(kFdmEpochs) + " / ddm " +
            std::to_string(kDdmEpochs) + " / aligner " + std::to_string(ac.epochs) + ", full " +
            std::to_string(dc.steps) + "-step ddm sampling";
  return {pass, detail};
}

Outcome connectivity_harness() {
  fixtures::TempDir dir("accept-map");
  save_fdm(dir / "fdm.mshm", desk.trained_fdm());
  save_ddm(dir / "ddm.mshm", desk.trained_ddm());
  {
    std::ofstream prompts(dir / "prompts.txt");
    for (const auto& r : fixtures::labeled_records(16, 505)) prompts << r.descriptions->at(0) << "\n";
  }
  const auto report_path = dir / "report.json";
  const int rc = run_cli("--quiet eval map --model \"" + (dir / "fdm.mshm").string() + "\" --model \"" +
                             (dir / "ddm.mshm").string() + "\" --prompts \"" + (dir / "prompts.txt").string() +
                             "\" --generator-count 500 --out \"" + report_path.string() + "\"",
                         dir / "cli.log");
  if (rc != 0) return {false, "eval map exited " + std::to_string(rc) + ": " + read_file(dir / "cli.log")};
  const auto j = nlohmann::json::parse(read_file(report_path));
  std::optional<double> gen_mean;
  bool stats = true;
  double fdm_c = NAN, ddm_c = NAN;
  for (const auto& m : j.at("models")) {
    for (const char* key : {"components", "largest_component", "fragmentation"}) {
      stats = stats && m.at(key).contains("mean") && m.at(key).contains("stddev");
    }
    const auto mean = m.at("components").at("mean").get<double>();
    if (m.at("model") == "generator") gen_mean = mean;
    if (m.at("model") == "fdm") fdm_c = mean;
    if (m.at("model") == "ddm") ddm_c = mean;
  }
  const auto& cmp = j.at("comparison");
  const bool claim = cmp.at("claim") == "DDM has fewer disconnected components" && cmp.at("holds").is_boolean();
  return {gen_mean && *gen_mean == 1.0 && stats && claim,
          "generator corpus (500) mean components = " + (gen_mean ? fmt("%.6f", *gen_mean) : std::string("missing")) +
              " (must be exactly 1); fdm " + fmt("%.2f", fdm_c) + ", ddm " + fmt("%.2f", ddm_c) + "; claim \"" +
              cmp.at("claim").get<std::string>() + "\" holds at desk scale: " + (cmp.at("holds") == true ? "yes" : "no") +
              " (reported, not required)"};
}

Outcome text_metrics() {
  const std::string s = "the quick brown fox jumps over the lazy dog";
  const auto same = bleu(s, {s});
  const bool identical = same[0] == 100.0 && same[3] == 100.0 && rouge_l(s, s) == 100.0;
  const double b1 = bleu("the cat", {"the cat sat"})[0];
  const double rl = rouge_l("a c d", "a b c d");
  const int ed = edit_distance("kitten", "sitting");
  auto near2 = [](double v, double want) { return std::abs(v - want) < 0.005; };
  const auto records = fixtures::labeled_records(20, 606);
  const auto rows = text_protocol(records);
  bool protocol = rows.size() >= 2;
  for (const auto& r : rows) protocol = protocol && r.pairs > 0 && std::isfinite(r.mean.bleu[3]) && std::isfinite(r.mean.rouge_l);
  return {identical && near2(b1, 60.65) && near2(rl, 83.56) && ed == 3 && protocol,
          std::string("identical BLEU/ROUGE-L = 100: ") + (identical ? "yes" : "no") + "; BLEU-1 " + fmt("%.2f", b1) +
              " (60.65); ROUGE-L " + fmt("%.2f", rl) + " (83.56); kitten/sitting " + std::to_string(ed) +
              " (3); template protocol rows " + std::to_string(rows.size())};
}

Outcome pipeline_end_to_end() {
  fixtures::TempDir dir("accept-pipeline");
  std::vector<nlohmann::json> manifests;
  std::vector<double> seconds;
  for (const char* run : {"a", "b"}) {
    const auto t0 = std::chrono::steady_clock::now();
    const int rc = run_cli("--seed 1 --quiet pipeline --count 64 --out-dir \"" + (dir / run).string() + "\"",
                           dir / (std::string(run) + ".log"));
    seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    if (rc != 0) return {false, std::string("pipeline run ") + run + " exited " + std::to_string(rc)};
    manifests.push_back(nlohmann::json::parse(read_file(dir / run / "manifest.json")));
  }
  const auto& arts = manifests[0].at("artifacts");
  bool same = arts.size() == manifests[1].at("artifacts").size() && !arts.empty();
  for (std::size_t i = 0; same && i < arts.size(); ++i) {
    const auto rel = arts[i].at("path").get<std::string>();
    same = arts[i].at("sha256") == manifests[1].at("artifacts")[i].at("sha256") &&
           read_file(dir / "a" / rel) == read_file(dir / "b" / rel);
  }
  const double slowest = *std::max_element(seconds.begin(), seconds.end());
  return {same && slowest < 1800, std::to_string(arts.size()) + " artifacts hash-identical across reruns: " +
                                      (same ? "yes" : "no") + "; wall time " + fmt("%.0f", seconds[0]) + " s / " +
                                      fmt("%.0f", seconds[1]) + " s (limit 1800 s)"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"map representation", map_representation},
      {"generator playability", generator_playability},
      {"metadata oracle fixtures", metadata_fixtures},
      {"ddpm algebra", ddpm_algebra},
      {"gradient correctness", gradient_correctness},
      {"fdm desk-scale training", fdm_training},
      {"ddm desk-scale training", ddm_training},
      {"conditioning effect", conditioning_effect},
      {"connectivity comparison harness", connectivity_harness},
      {"text metrics", text_metrics},
      {"end-to-end pipeline", pipeline_end_to_end},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0, ran = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int n = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(n)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ++ran;
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << n << "] " << criteria[i].first << ": " << o.detail << " ["
              << fmt("%.1f", secs) << " s]" << std::endl;
  }
  std::cout << (ran - failed) << "/" << ran << " criteria passed" << std::endl;
  return failed ? 1 : 0;
}
