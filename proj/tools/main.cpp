#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "commands.hpp"
#include "moonshine/error.hpp"
#include "moonshine/llm_client.hpp"

using namespace moonshine;
using namespace moonshine::cli;

namespace {

/// --config accepts TOML (CLI11's native format) or a JSON object with the same shape:
/// top-level keys are global flags, nested objects are subcommand sections.
class JsonOrTomlConfig : public CLI::ConfigTOML {
 public:
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    std::string text((std::istreambuf_iterator<char>(input)), std::istreambuf_iterator<char>());
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos || text[first] != '{') {
      std::istringstream toml(text);
      return CLI::ConfigTOML::from_config(toml);
    }
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw CLI::ConfigError(std::string("invalid JSON config: ") + e.what());
    }
    std::vector<CLI::ConfigItem> items;
    flatten(j, {}, items);
    return items;
  }

 private:
  static std::string scalar(const nlohmann::json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

  static void flatten(const nlohmann::json& obj, const std::vector<std::string>& parents,
                      std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : obj.items()) {
      if (value.is_object()) {
        auto p = parents;
        p.push_back(key);
        flatten(value, p, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"moonshine: dungeon maps, labels, text-to-map models and evaluation"};
  app.require_subcommand(1);
  app.fallthrough();
  app.config_formatter(std::make_shared<JsonOrTomlConfig>());
  app.set_config("--config", "", "TOML or JSON file with flag values (flags on the command line win)");

  Globals globals;
  app.add_option("--seed", globals.seed, "Base seed for every random stream")->capture_default_str();
  app.add_flag("--quiet", globals.quiet, "Only log errors");

  GenMapsArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-maps", "Generate a dungeon corpus as JSONL");
  gen_cmd->add_option("--count", gen.count, "Number of maps")->required()->check(CLI::PositiveNumber);
  gen_cmd->add_option("--out", gen.out, "Output JSONL")->required();
  gen_cmd->add_option("--rooms", gen.rooms, "Room count range A..B")->capture_default_str();
  gen_cmd->add_option("--lake-prob", gen.lake_probability, "Probability of a lake")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  gen_cmd->add_option("--vegetation-passes", gen.vegetation_passes)->check(CLI::NonNegativeNumber)->capture_default_str();
  gen_cmd->add_option("--decorations", gen.decoration_budget, "Decoration budget")->check(CLI::NonNegativeNumber)->capture_default_str();
  gen_cmd->add_option("--ppm-dir", gen.ppm_dir, "Also write one PPM image per map");

  AnalyzeArgs an;
  auto* an_cmd = app.add_subcommand("analyze", "Extract room/path metadata");
  an_cmd->add_option("--in", an.in, "Dataset JSONL");
  an_cmd->add_option("--out", an.out, "Output JSONL (or JSON file with --grid)");
  an_cmd->add_option("--grid", an.grid, "Single grid file (JSON array or ASCII) printed as JSON");
  an_cmd->add_option("--overlay-dir", an.overlay_dir, "Write region overlay PPMs");

  LabelArgs lb;
  auto* lb_cmd = app.add_subcommand("label", "Attach 10 descriptions per map");
  lb_cmd->add_option("--in", lb.in)->required();
  lb_cmd->add_option("--out", lb.out)->required();
  lb_cmd->add_option("--mode,--labeler", lb.labeler)->check(CLI::IsMember({"template", "llm"}))->capture_default_str();
  lb_cmd->add_option("--few-shot", lb.few_shot, "One example description per line");
  lb_cmd->add_option("--prompt-out", lb.prompt_out, "Write the system prompt as markdown");
  lb_cmd->add_option("--endpoint,--llm-endpoint", lb.llm.endpoint)->capture_default_str();
  lb_cmd->add_option("--model,--llm-model", lb.llm.model)->capture_default_str();
  lb_cmd->add_option("--key-env,--api-key-env", lb.llm.api_key_env, "Environment variable holding the API key")->capture_default_str();
  lb_cmd->add_option("--retries", lb.llm.max_retries)->check(CLI::NonNegativeNumber)->capture_default_str();
  lb_cmd->add_option("--timeout", lb.llm.timeout_seconds)->check(CLI::PositiveNumber)->capture_default_str();
  lb_cmd->add_option("--concurrency", lb.concurrency)->check(CLI::PositiveNumber)->capture_default_str();
  lb_cmd->add_option("--rps", lb.requests_per_second, "Request rate limit (0 = none)")->capture_default_str();

  EmbedArgs em;
  auto* em_cmd = app.add_subcommand("embed", "Embed every description");
  em_cmd->add_option("--in", em.in)->required();
  em_cmd->add_option("--out", em.out)->required();
  em_cmd->add_option("--dim", em.dim, "Hashed embedding dimension")->capture_default_str();
  auto* em_mode = em_cmd->add_option("--mode", em.mode)->check(CLI::IsMember({"hashed", "service"}))->capture_default_str();
  auto* em_endpoint = em_cmd->add_option("--endpoint,--service", em.service, "Embedding service URL");
  em_cmd->add_option("--service-dim", em.service_config.dim)->capture_default_str();
  em_cmd->add_option("--timeout", em.service_config.timeout_seconds)->capture_default_str();
  em_cmd->add_option("--retries", em.service_config.max_retries)->check(CLI::NonNegativeNumber)->capture_default_str();
  em_cmd->add_option("--concurrency", em.service_config.concurrency)->check(CLI::PositiveNumber)->capture_default_str();
  em_cmd->add_option("--rps", em.service_config.requests_per_second)->capture_default_str();

  TrainArgs tr;
  auto* tr_cmd = app.add_subcommand("train", "Train fdm, ddm or aligner");
  tr_cmd->add_option("model", tr.model)->required()->check(CLI::IsMember({"fdm", "ddm", "aligner"}));
  tr_cmd->add_option("--data", tr.data, "Labeled dataset JSONL")->required();
  tr_cmd->add_option("--embeddings", tr.embeddings)->required();
  tr_cmd->add_option("--out", tr.out, "Model file (.mshm)")->required();
  tr_cmd->add_option("--history", tr.history, "Write per-epoch losses as JSON");
  tr_cmd->add_option("--split", tr.split, "train = 70/20/10 split, all = every record")->check(CLI::IsMember({"train", "all"}))->capture_default_str();
  tr_cmd->add_option("--epochs", tr.epochs);
  tr_cmd->add_option("--lr", tr.lr);
  tr_cmd->add_option("--batch", tr.batch_size);
  tr_cmd->add_option("--captions-per-map", tr.captions_per_map);
  tr_cmd->add_option("--base-channels", tr.base_channels);
  tr_cmd->add_option("--steps", tr.steps, "ddm: diffusion steps T");
  tr_cmd->add_option("--noise-dim", tr.noise_dim, "fdm: noise vector size");
  tr_cmd->add_option("--loss", tr.loss, "fdm: mse or ce")->check(CLI::IsMember({"mse", "ce"}))->capture_default_str();

  SampleArgs sa;
  auto* sa_cmd = app.add_subcommand("sample", "Generate one map from a prompt");
  sa_cmd->add_option("--model", sa.model)->required();
  sa_cmd->add_option("--prompt", sa.prompt)->required();
  sa_cmd->add_option("--steps", sa.steps, "ddm: respaced sampling steps (0 = full)")->check(CLI::NonNegativeNumber);
  sa_cmd->add_option("--out", sa.out, "Write the grid as JSON");
  sa_cmd->add_option("--ppm", sa.ppm);
  sa_cmd->add_option("--frames-dir", sa.frames_dir, "ddm: write 10 intermediate frames and the final map");
  sa_cmd->add_option("--embed-service", sa.embed_service, "Embed the prompt with this service");
  sa_cmd->add_option("--service-dim", sa.service_dim)->capture_default_str();

  auto* ev_cmd = app.add_subcommand("eval", "Evaluation reports");
  ev_cmd->require_subcommand(1);
  EvalTextArgs et;
  auto* et_cmd = ev_cmd->add_subcommand("text", "BLEU / METEOR / ROUGE-L");
  et_cmd->add_option("--data", et.data, "Labeled dataset: description 0 against the other four, per kind");
  et_cmd->add_option("--hyp", et.hyp, "One hypothesis per line");
  et_cmd->add_option("--refs", et.refs, "Matching reference line(s), tab-separated");
  et_cmd->add_option("--out", et.out, "JSON report (stdout when omitted)");
  et_cmd->add_option("--csv", et.csv);
  EvalMapArgs emap;
  auto* emap_cmd = ev_cmd->add_subcommand("map", "Connectivity of generated corpora");
  emap_cmd->add_option("--model", emap.models, "Generator model file (repeatable)");
  emap_cmd->add_option("--prompts", emap.prompts, "One prompt per line");
  emap_cmd->add_option("--data", emap.data, "Labeled dataset (prompts = first long description)");
  emap_cmd->add_option("--count", emap.count, "Use the first N prompts")->check(CLI::NonNegativeNumber);
  emap_cmd->add_option("--steps", emap.steps, "ddm sampling steps")->check(CLI::NonNegativeNumber);
  emap_cmd->add_option("--generator-count", emap.generator_count, "Also summarize N fresh generator maps")->check(CLI::NonNegativeNumber);
  emap_cmd->add_flag("--include-dataset", emap.include_dataset, "Also summarize the --data maps");
  emap_cmd->add_option("--out", emap.out);
  emap_cmd->add_option("--csv", emap.csv);
  EvalScatterArgs esc;
  auto* esc_cmd = ev_cmd->add_subcommand("scatter", "Aligner score of ground truth vs generated maps");
  esc_cmd->add_option("--fdm", esc.fdm);
  esc_cmd->add_option("--ddm", esc.ddm);
  esc_cmd->add_option("--aligner", esc.aligner)->required();
  esc_cmd->add_option("--data", esc.data)->required();
  esc_cmd->add_option("--count", esc.count)->check(CLI::NonNegativeNumber);
  esc_cmd->add_option("--steps", esc.steps)->check(CLI::NonNegativeNumber);
  esc_cmd->add_option("--out", esc.out, "CSV")->required();
  esc_cmd->add_option("--json", esc.json, "Per-model summary");
  EvalDiversityArgs ediv;
  auto* ediv_cmd = ev_cmd->add_subcommand("diversity", "Distinct maps and mean edit distance across seeds");
  ediv_cmd->add_option("--model", ediv.model)->required();
  ediv_cmd->add_option("--prompt", ediv.prompt)->required();
  ediv_cmd->add_option("--samples", ediv.samples)->capture_default_str();
  ediv_cmd->add_option("--steps", ediv.steps)->check(CLI::NonNegativeNumber);
  ediv_cmd->add_option("--out", ediv.out);

  ServeArgs sv;
  auto* sv_cmd = app.add_subcommand("serve", "HTTP API and static UI");
  sv_cmd->add_option("--host", sv.config.host)->capture_default_str();
  sv_cmd->add_option("--port", sv.config.port)->capture_default_str();
  sv_cmd->add_option("--fdm", sv.config.fdm_path);
  sv_cmd->add_option("--ddm", sv.config.ddm_path);
  sv_cmd->add_option("--aligner", sv.config.aligner_path);
  sv_cmd->add_option("--static-dir", sv.config.static_dir);
  sv_cmd->add_option("--schema-dir", sv.config.schema_dir);
  sv_cmd->add_option("--max-concurrent", sv.config.max_concurrent)->capture_default_str();
  sv_cmd->add_option("--queue", sv.config.queue_limit, "Waiting generations before 429")->capture_default_str();

  PipelineArgs pl;
  auto* pl_cmd = app.add_subcommand("pipeline", "gen-maps, analyze, label, embed, train fdm+ddm, eval");
  pl_cmd->add_option("--count", pl.count)->capture_default_str();
  pl_cmd->add_option("--out-dir", pl.out_dir)->required();
  pl_cmd->add_option("--fdm-epochs", pl.fdm_epochs)->check(CLI::NonNegativeNumber)->capture_default_str();
  pl_cmd->add_option("--ddm-epochs", pl.ddm_epochs)->check(CLI::NonNegativeNumber)->capture_default_str();
  pl_cmd->add_option("--dim", pl.dim)->capture_default_str();
  pl_cmd->add_option("--sample-steps", pl.sample_steps, "ddm sampling steps during eval (0 = full)")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
    if (em_endpoint->count() > 0 && em_mode->count() == 0) em.mode = "service";
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  const Log log(globals.quiet);
  try {
    if (*gen_cmd) gen_maps(gen, globals, log);
    else if (*an_cmd) analyze_cmd(an, globals, log);
    else if (*lb_cmd) label_cmd(lb, globals, log);
    else if (*em_cmd) embed_cmd(em, globals, log);
    else if (*tr_cmd) train_cmd(tr, globals, log);
    else if (*sa_cmd) sample_cmd(sa, globals, log);
    else if (*et_cmd) eval_text(et, globals, log);
    else if (*emap_cmd) eval_map(emap, globals, log);
    else if (*esc_cmd) eval_scatter(esc, globals, log);
    else if (*ediv_cmd) eval_diversity(ediv, globals, log);
    else if (*sv_cmd) serve_cmd(sv, globals, log);
    else if (*pl_cmd) pipeline_cmd(pl, globals, log);
  } catch (const UsageError& e) {
    log.error("usage", e.what());
    return 1;
  } catch (const NetworkError& e) {
    log.error("network", e.what());
    return 3;
  } catch (const std::exception& e) {
    log.error("data", e.what());
    return 2;
  }
  return 0;
}
