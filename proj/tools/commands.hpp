#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "moonshine/dungeon.hpp"
#include "moonshine/embed.hpp"
#include "moonshine/llm_client.hpp"
#include "moonshine/server.hpp"

namespace moonshine::cli {

namespace fs = std::filesystem;

// "<UTC timestamp> [stage] message" on stderr.
class Log {
 public:
  explicit Log(bool quiet = false) : quiet_(quiet) {}
  void info(std::string_view stage, const std::string& message) const;
  void error(std::string_view stage, const std::string& message) const;

 private:
  bool quiet_;
};

struct Globals {
  std::uint64_t seed = 0;
  bool quiet = false;
};

struct GenMapsArgs {
  int count = 0;
  fs::path out;
  std::string rooms = "4..9";
  double lake_probability = 0.6;
  int vegetation_passes = 3;
  int decoration_budget = 12;
  std::optional<fs::path> ppm_dir;
};

struct AnalyzeArgs {
  std::optional<fs::path> in;
  std::optional<fs::path> out;
  std::optional<fs::path> grid;  // JSON grid or ASCII map, printed as {meta, connectivity}
  std::optional<fs::path> overlay_dir;
};

struct LabelArgs {
  fs::path in;
  fs::path out;
  std::string labeler = "template";
  std::optional<fs::path> few_shot;
  std::optional<fs::path> prompt_out;
  LlmConfig llm;
  int concurrency = 4;
  double requests_per_second = 0;
};

struct EmbedArgs {
  fs::path in;
  fs::path out;
  int dim = kDefaultEmbedDim;
  std::string mode = "hashed";  // hashed | service
  std::optional<std::string> service;
  EmbedServiceConfig service_config;
};

struct TrainArgs {
  std::string model;  // fdm | ddm | aligner
  fs::path data;
  fs::path embeddings;
  fs::path out;
  std::optional<fs::path> history;
  std::string split = "train";  // train | all
  std::optional<int> epochs;
  std::optional<double> lr;
  std::optional<int> batch_size;
  std::optional<int> captions_per_map;
  std::optional<int> base_channels;
  std::optional<int> steps;
  std::optional<int> noise_dim;
  std::string loss = "mse";
};

struct SampleArgs {
  fs::path model;
  std::string prompt;
  int steps = 0;
  std::optional<fs::path> out;
  std::optional<fs::path> ppm;
  std::optional<fs::path> frames_dir;
  std::optional<std::string> embed_service;
  int service_dim = 1024;
};

struct EvalTextArgs {
  std::optional<fs::path> data;
  std::optional<fs::path> hyp;
  std::optional<fs::path> refs;
  std::optional<fs::path> out;
  std::optional<fs::path> csv;
};

struct EvalMapArgs {
  std::vector<fs::path> models;
  std::optional<fs::path> prompts;
  std::optional<fs::path> data;
  int count = 0;  // 0 = every prompt
  int steps = 0;
  int generator_count = 0;
  bool include_dataset = false;
  std::optional<fs::path> out;
  std::optional<fs::path> csv;
};

struct EvalScatterArgs {
  std::optional<fs::path> fdm;
  std::optional<fs::path> ddm;
  fs::path aligner;
  fs::path data;
  int count = 0;
  int steps = 0;
  fs::path out;
  std::optional<fs::path> json;
};

struct EvalDiversityArgs {
  fs::path model;
  std::string prompt;
  int samples = 10;
  int steps = 0;
  std::optional<fs::path> out;
};

struct ServeArgs {
  ServeConfig config;
};

struct PipelineArgs {
  int count = 64;
  fs::path out_dir;
  int fdm_epochs = 200;
  int ddm_epochs = 100;
  int dim = kDefaultEmbedDim;
  int sample_steps = 0;
};

void gen_maps(const GenMapsArgs& args, const Globals& g, const Log& log);
void analyze_cmd(const AnalyzeArgs& args, const Globals& g, const Log& log);
void label_cmd(const LabelArgs& args, const Globals& g, const Log& log);
void embed_cmd(const EmbedArgs& args, const Globals& g, const Log& log);
void train_cmd(const TrainArgs& args, const Globals& g, const Log& log);
void sample_cmd(const SampleArgs& args, const Globals& g, const Log& log);
void eval_text(const EvalTextArgs& args, const Globals& g, const Log& log);
void eval_map(const EvalMapArgs& args, const Globals& g, const Log& log);
void eval_scatter(const EvalScatterArgs& args, const Globals& g, const Log& log);
void eval_diversity(const EvalDiversityArgs& args, const Globals& g, const Log& log);
void serve_cmd(const ServeArgs& args, const Globals& g, const Log& log);
void pipeline_cmd(const PipelineArgs& args, const Globals& g, const Log& log);

// Hex SHA-256 of a file's bytes.
std::string sha256_file(const fs::path& path);

}  // namespace moonshine::cli
