#include "commands.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include <openssl/evp.h>

#include "moonshine/aligner.hpp"
#include "moonshine/concurrency.hpp"
#include "moonshine/dataset.hpp"
#include "moonshine/ddm.hpp"
#include "moonshine/error.hpp"
#include "moonshine/eval.hpp"
#include "moonshine/fdm.hpp"
#include "moonshine/labeling.hpp"
#include "moonshine/metadata.hpp"
#include "moonshine/render.hpp"
#include "moonshine/training.hpp"

namespace moonshine::cli {

using OJson = nlohmann::ordered_json;

void Log::info(std::string_view stage, const std::string& message) const {
  if (!quiet_) error(stage, message);
}

void Log::error(std::string_view stage, const std::string& message) const {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);
  std::cerr << stamp << " [" << stage << "] " << message << '\n';
}

namespace {

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

void write_text(const fs::path& p, const std::string& content) {
  ensure_parent(p);
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot open " + p.string() + " for writing");
  out << content;
  if (!out) throw DataError("write failed: " + p.string());
}

void write_records(const fs::path& p, const std::vector<MapRecord>& records) {
  ensure_parent(p);
  write_jsonl(p, records);
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> read_lines(const fs::path& p) {
  std::istringstream in(read_text(p));
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") != std::string::npos) out.push_back(line);
  }
  return out;
}

MapGrid read_grid_file(const fs::path& p) {
  auto text = read_text(p);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) throw DataError(p.string() + ": empty grid file");
  if (text[first] == '[' || text[first] == '{') {
    try {
      auto j = nlohmann::json::parse(text);
      if (j.is_object()) j = j.at("grid");
      return grid_from_json(j, std::nullopt);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(p.string() + ": " + e.what());
    }
  }
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
  return parse_ascii(text);
}

std::string model_kind(const fs::path& p) {
  const auto loaded = nn::load_model_file(p);
  return loaded.config.value("model", std::string{});
}

IntRange parse_range(const std::string& text) {
  const auto dots = text.find("..");
  try {
    if (dots == std::string::npos) {
      const int v = std::stoi(text);
      return {v, v};
    }
    return {std::stoi(text.substr(0, dots)), std::stoi(text.substr(dots + 2))};
  } catch (const std::exception&) {
    throw UsageError("expected A..B, got '" + text + "'");
  }
}

/// A loaded FDM or DDM behind one call.
struct Generator {
  std::string name;
  std::optional<FdmModel> fdm;
  std::optional<DdmModel> ddm;

  int embed_dim() const { return fdm ? fdm->config.embed_dim : ddm->config.embed_dim; }

  MapGrid run(const TextEmbedding& emb, std::uint64_t seed, int steps) const {
    if (fdm) return fdm_generate(*fdm, emb, seed);
    return ddm_sample(*ddm, emb, seed, SampleOptions{steps, false}).grid;
  }
};

Generator load_generator(const fs::path& p) {
  const auto kind = model_kind(p);
  Generator g{kind, {}, {}};
  if (kind == "fdm") {
    g.fdm = load_fdm(p);
  } else if (kind == "ddm") {
    g.ddm = load_ddm(p);
  } else {
    throw DataError(p.string() + ": not a generator model (model = '" + kind + "')");
  }
  return g;
}

std::string first_prompt(const MapRecord& r) {
  if (!r.descriptions) throw DataError("record " + r.id + " has no descriptions");
  return r.descriptions->long_texts[0];
}

std::vector<MapRecord> analyzed(std::vector<MapRecord> records) {
  for (auto& r : records) {
    if (r.meta) continue;
    r.meta = r.regions ? analyze(r.grid, *r.regions) : analyze(r.grid);
  }
  return records;
}

std::vector<MapRecord> template_labeled(std::vector<MapRecord> records, std::uint64_t seed) {
  records = analyzed(std::move(records));
  for (auto& r : records) {
    r.descriptions = template_label(*r.meta, whole_map_census(r.grid), derive_seed(seed, r.seed));
  }
  return records;
}

struct TrainOutcome {
  LossHistory history;
};

TrainOutcome train_model(const TrainArgs& args, const std::vector<MapRecord>& records, const EmbeddingFile& emb,
                         std::uint64_t seed, const Log& log) {
  std::vector<MapRecord> train_records, val_records;
  if (args.split == "all") {
    train_records = records;
  } else if (args.split == "train") {
    auto split = split_dataset(records);
    train_records = std::move(split.train);
    val_records = std::move(split.validation);
  } else {
    throw UsageError("--split must be train or all");
  }
  const auto train = make_examples(train_records, emb);
  const auto val = make_examples(val_records, emb);
  const std::string stage = "train " + args.model;
  log.info(stage, std::to_string(train.size()) + " training maps, " + std::to_string(val.size()) + " validation maps");
  auto report = [&](int epoch, double tr, double v) {
    log.info(stage, "epoch " + std::to_string(epoch) + " train " + std::to_string(tr) + " validation " + std::to_string(v));
  };
  TrainOutcome out;
  if (args.model == "fdm") {
    FdmConfig cfg;
    cfg.embed_dim = emb.dim;
    cfg.seed = seed;
    if (args.epochs) cfg.epochs = *args.epochs;
    if (args.lr) cfg.lr = *args.lr;
    if (args.batch_size) cfg.batch_size = *args.batch_size;
    if (args.captions_per_map) cfg.captions_per_map = *args.captions_per_map;
    if (args.base_channels) cfg.base_channels = *args.base_channels;
    if (args.noise_dim) cfg.noise_dim = *args.noise_dim;
    if (args.loss == "ce") {
      cfg.loss = FdmLoss::CrossEntropy;
    } else if (args.loss != "mse") {
      throw UsageError("--loss must be mse or ce");
    }
    auto model = fdm_init(cfg);
    out.history = fdm_train(model, train, val, report);
    save_fdm(args.out, model);
  } else if (args.model == "ddm") {
    DdmConfig cfg;
    cfg.embed_dim = emb.dim;
    cfg.seed = seed;
    if (args.epochs) cfg.epochs = *args.epochs;
    if (args.lr) cfg.lr = *args.lr;
    if (args.batch_size) cfg.batch_size = *args.batch_size;
    if (args.captions_per_map) cfg.captions_per_map = *args.captions_per_map;
    if (args.base_channels) cfg.base_channels = *args.base_channels;
    if (args.steps) cfg.steps = *args.steps;
    auto model = ddm_init(cfg);
    out.history = ddm_train(model, train, val, report);
    save_ddm(args.out, model);
  } else if (args.model == "aligner") {
    AlignerConfig cfg;
    cfg.embed_dim = emb.dim;
    cfg.seed = seed;
    if (args.epochs) cfg.epochs = *args.epochs;
    if (args.lr) cfg.lr = *args.lr;
    if (args.batch_size) cfg.batch_size = *args.batch_size;
    if (args.captions_per_map) cfg.captions_per_map = *args.captions_per_map;
    auto model = aligner_init(cfg);
    out.history = train_aligner(model, train, val, report);
    save_aligner(args.out, model);
  } else {
    throw UsageError("unknown model kind: " + args.model);
  }
  log.info(stage, "wrote " + args.out.string());
  return out;
}

std::vector<MapGrid> generate_corpus_for(const Generator& gen, const std::vector<std::string>& prompts,
                                         std::uint64_t seed, int steps) {
  std::vector<MapGrid> maps;
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    maps.push_back(gen.run(hashed_embed(prompts[i], gen.embed_dim()), derive_seed(seed, i), steps));
  }
  return maps;
}

void emit_json(const std::optional<fs::path>& out, const OJson& j) {
  if (out) {
    write_text(*out, j.dump(2) + "\n");
  } else {
    std::cout << j.dump(2) << '\n';
  }
}

}  // namespace

std::string sha256_file(const fs::path& path) {
  const auto data = read_text(path);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw DataError("sha256 failed for " + path.string());
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

void gen_maps(const GenMapsArgs& args, const Globals& g, const Log& log) {
  if (args.count < 1) throw UsageError("--count must be at least 1");
  GenConfig cfg;
  cfg.room_count = parse_range(args.rooms);
  cfg.lake_probability = args.lake_probability;
  cfg.vegetation_passes = args.vegetation_passes;
  cfg.decoration_budget = args.decoration_budget;
  cfg.validate();
  std::vector<MapRecord> records(static_cast<std::size_t>(args.count));
  generate_corpus(args.count, g.seed, cfg, [&](int i, GeneratedMap&& m) {
    auto& r = records[static_cast<std::size_t>(i)];
    r.id = record_id(i);
    r.seed = m.seed;
    r.regions = segment_regions(m);
    r.grid = std::move(m.grid);
  });
  write_records(args.out, records);
  if (args.ppm_dir) {
    fs::create_directories(*args.ppm_dir);
    for (const auto& r : records) write_text(*args.ppm_dir / (r.id + ".ppm"), render_ppm(r.grid));
  }
  log.info("gen-maps", "wrote " + std::to_string(records.size()) + " maps to " + args.out.string());
}

void analyze_cmd(const AnalyzeArgs& args, const Globals&, const Log& log) {
  if (args.grid) {
    const auto grid = read_grid_file(*args.grid);
    const auto meta = analyze(grid);
    const auto c = connectivity_report(grid);
    emit_json(args.out, {{"meta", meta_to_json(meta)},
                         {"connectivity",
                          {{"components", c.components}, {"largest", c.largest}, {"fragmentation", c.fragmentation}}}});
    return;
  }
  if (!args.in || !args.out) throw UsageError("analyze needs --in and --out, or --grid");
  auto records = read_jsonl(*args.in);
  for (auto& r : records) r.meta.reset();
  records = analyzed(std::move(records));
  write_records(*args.out, records);
  if (args.overlay_dir) {
    fs::create_directories(*args.overlay_dir);
    for (const auto& r : records) {
      std::vector<std::vector<int>> regions;
      for (const auto& room : r.meta->rooms) {
        std::vector<int> cells;
        for (const auto& c : room.cells) cells.push_back(r.grid.index(c.row, c.col));
        regions.push_back(std::move(cells));
      }
      for (const auto& p : r.meta->paths) {
        std::vector<int> cells;
        for (const auto& c : p.path_cells) cells.push_back(r.grid.index(c.row, c.col));
        regions.push_back(std::move(cells));
      }
      write_text(*args.overlay_dir / (r.id + ".ppm"), render_region_overlay_ppm(r.grid, regions));
      // Sidecar with the labels drawn over each region: overlay index, room id, direction, midpoint.
      OJson labels = OJson::array();
      for (std::size_t k = 0; k < r.meta->rooms.size(); ++k) {
        const auto& room = r.meta->rooms[k];
        double mr = 0, mc = 0;
        for (const auto& c : room.cells) mr += c.row, mc += c.col;
        const auto n = static_cast<double>(room.cells.size());
        labels.push_back({{"region", k},
                          {"room_id", room.room_id},
                          {"direction", direction_label(room.direction)},
                          {"midpoint", {mr / n, mc / n}}});
      }
      write_text(*args.overlay_dir / (r.id + ".json"), OJson{{"id", r.id}, {"rooms", labels}}.dump(2) + "\n");
    }
  }
  log.info("analyze", "wrote metadata for " + std::to_string(records.size()) + " maps to " + args.out->string());
}

void label_cmd(const LabelArgs& args, const Globals& g, const Log& log) {
  auto records = read_jsonl(args.in);
  std::vector<std::string> few_shot = default_few_shot_examples();
  if (args.few_shot) few_shot = read_lines(*args.few_shot);
  const auto bundle = build_pregen_prompt(few_shot);
  if (args.prompt_out) write_text(*args.prompt_out, bundle.render());

  if (args.labeler == "template") {
    for (auto& r : records) r.descriptions.reset();
    records = template_labeled(std::move(records), g.seed);
  } else if (args.labeler == "llm") {
    args.llm.validate();
    records = analyzed(std::move(records));
    TokenBucket bucket(args.requests_per_second, std::max(1, args.concurrency));
    parallel_for(static_cast<int>(records.size()), args.concurrency, [&](int i) {
      auto& r = records[static_cast<std::size_t>(i)];
      bucket.acquire();
      try {
        r.descriptions = llm_label(build_round_prompt(r.grid, *r.meta), bundle, args.llm);
      } catch (const LabelFormatError& e) {
        throw LabelFormatError("record " + r.id + ": " + e.what(), e.raw_response);
      }
    });
  } else {
    throw UsageError("--labeler must be template or llm");
  }
  write_records(args.out, records);
  log.info("label", "labeled " + std::to_string(records.size()) + " maps with " + args.labeler);
}

void embed_cmd(const EmbedArgs& args, const Globals&, const Log& log) {
  const auto records = read_jsonl(args.in);
  EmbedCorpusConfig cfg;
  cfg.dim = args.dim;
  if (args.mode == "service") {
    if (!args.service) throw UsageError("--mode service needs --endpoint");
    cfg.mode = EmbedMode::Service;
    cfg.service = args.service_config;
    cfg.service.endpoint = *args.service;
    cfg.dim = cfg.service.dim;
  }
  if (cfg.dim < kMinEmbedDim) throw UsageError("embedding dimension must be at least " + std::to_string(kMinEmbedDim));
  const auto file = embed_corpus(records, cfg);
  ensure_parent(args.out);
  write_embeddings(args.out, file);
  log.info("embed", "wrote " + std::to_string(file.entries.size()) + " embeddings (dim " + std::to_string(file.dim) +
                        ") to " + args.out.string());
}

void train_cmd(const TrainArgs& args, const Globals& g, const Log& log) {
  const auto records = read_jsonl(args.data);
  const auto emb = read_embeddings(args.embeddings);
  ensure_parent(args.out);
  const auto outcome = train_model(args, records, emb, g.seed, log);
  if (args.history) {
    auto j = outcome.history.to_json();
    OJson h{{"model", args.model}};
    for (auto& [k, v] : j.items()) h[k] = v;
    h["validation_minimum_position"] = outcome.history.validation.size() > 1 &&
                                               std::isfinite(outcome.history.validation.back())
                                           ? OJson(validation_minimum_position(outcome.history))
                                           : OJson(nullptr);
    write_text(*args.history, h.dump(2) + "\n");
  }
}

void sample_cmd(const SampleArgs& args, const Globals& g, const Log& log) {
  if (args.prompt.find_first_not_of(" \t\r\n") == std::string::npos) throw UsageError("--prompt must not be empty");
  const auto gen = load_generator(args.model);
  TextEmbedding emb;
  if (args.embed_service) {
    EmbedServiceConfig svc;
    svc.endpoint = *args.embed_service;
    svc.dim = args.service_dim;
    emb = service_embed(args.prompt, svc);
  } else {
    emb = hashed_embed(args.prompt, gen.embed_dim());
  }
  if (emb.size() != gen.embed_dim()) throw DataError("prompt embedding dimension does not match the model");
  MapGrid grid;
  std::vector<MapGrid> frames;
  if (gen.fdm) {
    grid = fdm_generate(*gen.fdm, emb, g.seed);
  } else {
    auto s = ddm_sample(*gen.ddm, emb, g.seed, SampleOptions{args.steps, args.frames_dir.has_value()});
    grid = std::move(s.grid);
    frames = std::move(s.frames);
  }
  std::cout << render_ascii(grid) << '\n';
  if (args.out) write_text(*args.out, grid_to_json(grid).dump() + "\n");
  if (args.ppm) write_text(*args.ppm, render_ppm(grid));
  if (args.frames_dir) {
    if (frames.empty()) log.info("sample", "frames are only produced by ddm models");
    for (std::size_t i = 0; i < frames.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "frame_%02zu", i);
      write_text(*args.frames_dir / (std::string(name) + ".txt"), render_ascii(frames[i]) + "\n");
      write_text(*args.frames_dir / (std::string(name) + ".ppm"), render_ppm(frames[i]));
    }
  }
}

void eval_text(const EvalTextArgs& args, const Globals&, const Log& log) {
  std::vector<TextProtocolRow> rows;
  if (args.data) {
    rows = text_protocol(read_jsonl(*args.data));
  } else if (args.hyp && args.refs) {
    rows.push_back(text_pairs(read_lines(*args.hyp), read_lines(*args.refs)));
  } else {
    throw UsageError("eval text needs --data, or --hyp and --refs");
  }
  emit_json(args.out, text_report_json(rows));
  if (args.csv) write_text(*args.csv, text_report_csv(rows));
  log.info("eval text", "scored " + std::to_string(rows.size()) + " row(s)");
}

void eval_map(const EvalMapArgs& args, const Globals& g, const Log& log) {
  std::vector<std::string> prompts;
  std::vector<MapRecord> records;
  if (args.data) records = read_jsonl(*args.data);
  if (args.prompts) {
    prompts = read_lines(*args.prompts);
  } else {
    for (const auto& r : records) {
      if (r.descriptions) prompts.push_back(first_prompt(r));
    }
  }
  if (args.count > 0 && prompts.size() > static_cast<std::size_t>(args.count)) prompts.resize(static_cast<std::size_t>(args.count));
  if (!args.models.empty() && prompts.empty()) throw DataError("eval map: no prompts (use --prompts or a labeled --data file)");

  std::vector<ConnectivitySummary> summaries;
  for (const auto& path : args.models) {
    const auto gen = load_generator(path);
    log.info("eval map", "sampling " + std::to_string(prompts.size()) + " maps from " + gen.name);
    summaries.push_back(summarize_connectivity(gen.name, generate_corpus_for(gen, prompts, g.seed, args.steps)));
  }
  if (args.include_dataset) {
    if (records.empty()) throw UsageError("--include-dataset needs --data");
    std::vector<MapGrid> maps;
    for (const auto& r : records) maps.push_back(r.grid);
    if (args.count > 0 && maps.size() > static_cast<std::size_t>(args.count)) maps.resize(static_cast<std::size_t>(args.count));
    summaries.push_back(summarize_connectivity("dataset", maps));
  }
  if (args.generator_count > 0) {
    std::vector<MapGrid> maps;
    for (auto& m : generate_corpus(args.generator_count, g.seed, GenConfig{})) maps.push_back(std::move(m.grid));
    summaries.push_back(summarize_connectivity("generator", maps));
  }
  if (summaries.empty()) throw UsageError("eval map needs --model, --include-dataset or --generator-count");
  emit_json(args.out, map_report_json(summaries));
  if (args.csv) write_text(*args.csv, map_report_csv(summaries));
}

void eval_scatter(const EvalScatterArgs& args, const Globals& g, const Log& log) {
  std::vector<Generator> gens;
  if (args.fdm) gens.push_back(load_generator(*args.fdm));
  if (args.ddm) gens.push_back(load_generator(*args.ddm));
  if (gens.empty()) throw UsageError("eval scatter needs --fdm and/or --ddm");
  const auto aligner = load_aligner(args.aligner);
  auto records = read_jsonl(args.data);
  if (args.count > 0 && records.size() > static_cast<std::size_t>(args.count)) records.resize(static_cast<std::size_t>(args.count));
  if (records.empty()) throw DataError("eval scatter: empty corpus");
  std::vector<ScatterRow> rows;
  for (const auto& gen : gens) {
    log.info("eval scatter", "scoring " + std::to_string(records.size()) + " maps from " + gen.name);
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto prompt = first_prompt(records[i]);
      const auto generated = gen.run(hashed_embed(prompt, gen.embed_dim()), derive_seed(g.seed, i), args.steps);
      rows.push_back({records[i].id, gen.name, align_score(aligner, prompt, records[i].grid),
                      align_score(aligner, prompt, generated)});
    }
  }
  write_text(args.out, scatter_csv(rows));
  if (args.json) write_text(*args.json, scatter_report_json(rows).dump(2) + "\n");
}

void eval_diversity(const EvalDiversityArgs& args, const Globals& g, const Log&) {
  if (args.samples < 2) throw UsageError("--samples must be at least 2");
  const auto gen = load_generator(args.model);
  const auto emb = hashed_embed(args.prompt, gen.embed_dim());
  std::vector<MapGrid> maps;
  for (int i = 0; i < args.samples; ++i) maps.push_back(gen.run(emb, derive_seed(g.seed, static_cast<std::uint64_t>(i)), args.steps));
  std::vector<MapGrid> distinct;
  for (const auto& m : maps) {
    if (std::find(distinct.begin(), distinct.end(), m) == distinct.end()) distinct.push_back(m);
  }
  emit_json(args.out, {{"report", "diversity"},
                       {"model", gen.name},
                       {"samples", maps.size()},
                       {"distinct", distinct.size()},
                       {"mean_edit_distance", mean_pairwise_edit_distance(maps)}});
}

void serve_cmd(const ServeArgs& args, const Globals&, const Log& log) {
  ApiServer server(args.config);
  const int port = server.bind();
  log.info("serve", "listening on http://" + args.config.host + ":" + std::to_string(port));
  server.run();
}

void pipeline_cmd(const PipelineArgs& args, const Globals& g, const Log& log) {
  if (args.count < 8) throw UsageError("--count must be at least 8 so every split is non-empty");
  fs::create_directories(args.out_dir);
  const auto dir = args.out_dir;
  std::vector<std::pair<std::string, std::string>> artifacts;  // name, file
  auto stage = [&](const std::string& name, const auto& fn) {
    log.info("pipeline", "stage " + name);
    try {
      fn();
    } catch (const std::exception& e) {
      log.error(name, std::string("stage failed: ") + e.what());
      throw;
    }
  };

  stage("gen-maps", [&] {
    GenMapsArgs a;
    a.count = args.count;
    a.out = dir / "maps.jsonl";
    gen_maps(a, g, log);
    artifacts.emplace_back("maps", "maps.jsonl");
  });
  stage("analyze", [&] {
    AnalyzeArgs a;
    a.in = dir / "maps.jsonl";
    a.out = dir / "analyzed.jsonl";
    analyze_cmd(a, g, log);
    artifacts.emplace_back("analyzed", "analyzed.jsonl");
  });
  stage("label", [&] {
    LabelArgs a;
    a.in = dir / "analyzed.jsonl";
    a.out = dir / "labeled.jsonl";
    label_cmd(a, g, log);
    artifacts.emplace_back("labeled", "labeled.jsonl");
  });
  stage("embed", [&] {
    EmbedArgs a;
    a.in = dir / "labeled.jsonl";
    a.out = dir / "embeddings.mshe";
    a.dim = args.dim;
    embed_cmd(a, g, log);
    artifacts.emplace_back("embeddings", "embeddings.mshe");
  });
  for (const auto& [kind, epochs] : {std::pair<std::string, int>{"fdm", args.fdm_epochs}, {"ddm", args.ddm_epochs}}) {
    stage("train " + kind, [&] {
      TrainArgs a;
      a.model = kind;
      a.data = dir / "labeled.jsonl";
      a.embeddings = dir / "embeddings.mshe";
      a.out = dir / (kind + ".mshm");
      a.epochs = epochs;
      train_cmd(a, g, log);
      artifacts.emplace_back(kind, kind + ".mshm");
    });
  }
  stage("eval", [&] {
    EvalTextArgs t;
    t.data = dir / "labeled.jsonl";
    t.out = dir / "report_text.json";
    eval_text(t, g, log);
    artifacts.emplace_back("report_text", "report_text.json");

    // Connectivity of both models on the held-out test prompts, next to the ground truth.
    auto split = split_dataset(read_jsonl(dir / "labeled.jsonl"));
    write_records(dir / ".test_split.jsonl", split.test);
    EvalMapArgs m;
    m.models = {dir / "fdm.mshm", dir / "ddm.mshm"};
    m.data = dir / ".test_split.jsonl";
    m.include_dataset = true;
    m.steps = args.sample_steps;
    m.out = dir / "report_map.json";
    eval_map(m, g, log);
    fs::remove(dir / ".test_split.jsonl");
    artifacts.emplace_back("report_map", "report_map.json");
  });

  OJson list = OJson::array();
  for (const auto& [name, file] : artifacts) {
    list.push_back({{"name", name}, {"path", file}, {"bytes", fs::file_size(dir / file)}, {"sha256", sha256_file(dir / file)}});
  }
  OJson manifest{{"seed", g.seed},
                 {"count", args.count},
                 {"fdm_epochs", args.fdm_epochs},
                 {"ddm_epochs", args.ddm_epochs},
                 {"embed_dim", args.dim},
                 {"artifacts", list}};
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  log.info("pipeline", "wrote manifest with " + std::to_string(artifacts.size()) + " artifacts to " + (dir / "manifest.json").string());
}

}  // namespace moonshine::cli
