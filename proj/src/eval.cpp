#include "moonshine/eval.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "moonshine/error.hpp"

namespace moonshine {

namespace {

struct Accumulator {
  std::size_t n = 0;
  TextMetricReport sum;

  void add(const TextMetricReport& r) {
    ++n;
    for (int i = 0; i < 4; ++i) sum.bleu[static_cast<std::size_t>(i)] += r.bleu[static_cast<std::size_t>(i)];
    sum.meteor += r.meteor;
    sum.rouge_l += r.rouge_l;
  }

  TextProtocolRow finish(std::string kind) const {
    TextProtocolRow row{std::move(kind), n, {}};
    if (n == 0) return row;
    const auto d = static_cast<double>(n);
    for (std::size_t i = 0; i < 4; ++i) row.mean.bleu[i] = sum.bleu[i] / d;
    row.mean.meteor = sum.meteor / d;
    row.mean.rouge_l = sum.rouge_l / d;
    return row;
  }
};

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string part;
  while (std::getline(ss, part, '\t')) out.push_back(part);
  if (out.empty()) out.emplace_back();
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const auto sx = mean_stddev(x), sy = mean_stddev(y);
  if (x.size() < 2 || sx.stddev == 0 || sy.stddev == 0) return std::numeric_limits<double>::quiet_NaN();
  double cov = 0;
  for (std::size_t i = 0; i < x.size(); ++i) cov += (x[i] - sx.mean) * (y[i] - sy.mean);
  return cov / static_cast<double>(x.size()) / (sx.stddev * sy.stddev);
}

nlohmann::ordered_json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

nlohmann::ordered_json stat_json(const Stat& s) { return {{"mean", s.mean}, {"stddev", s.stddev}}; }

}  // namespace

std::vector<TextProtocolRow> text_protocol(const std::vector<MapRecord>& records) {
  if (records.empty()) throw DataError("text evaluation needs a non-empty corpus");
  Accumulator long_acc, short_acc;
  for (const auto& rec : records) {
    if (!rec.descriptions) throw DataError("record " + rec.id + " has no descriptions");
    const auto& d = *rec.descriptions;
    for (std::size_t i = 1; i < d.long_texts.size(); ++i) long_acc.add(score_pair(d.long_texts[i], d.long_texts[0]));
    for (std::size_t i = 1; i < d.short_texts.size(); ++i) short_acc.add(score_pair(d.short_texts[i], d.short_texts[0]));
  }
  return {long_acc.finish("long"), short_acc.finish("short")};
}

TextProtocolRow text_pairs(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references) {
  if (hypotheses.empty()) throw DataError("text evaluation needs at least one hypothesis");
  if (hypotheses.size() != references.size()) {
    throw DataError("hypothesis and reference files differ in line count (" + std::to_string(hypotheses.size()) +
                    " vs " + std::to_string(references.size()) + ")");
  }
  Accumulator acc;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    const auto refs = split_tabs(references[i]);
    TextMetricReport r;
    r.bleu = bleu(hypotheses[i], refs);
    // ROUGE-L and METEOR take the best reference.
    for (const auto& ref : refs) {
      r.rouge_l = std::max(r.rouge_l, rouge_l(hypotheses[i], ref));
      r.meteor = std::max(r.meteor, meteor_lite(hypotheses[i], ref));
    }
    acc.add(r);
  }
  return acc.finish("files");
}

nlohmann::ordered_json text_report_json(const std::vector<TextProtocolRow>& rows) {
  auto out = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    out.push_back({{"kind", r.kind},
                   {"pairs", r.pairs},
                   {"bleu1", r.mean.bleu[0]},
                   {"bleu2", r.mean.bleu[1]},
                   {"bleu3", r.mean.bleu[2]},
                   {"bleu4", r.mean.bleu[3]},
                   {"meteor", r.mean.meteor},
                   {"rouge_l", r.mean.rouge_l},
                   {"spice", nullptr}});
  }
  return {{"report", "text"}, {"rows", out}};
}

std::string text_report_csv(const std::vector<TextProtocolRow>& rows) {
  std::string out = "kind,pairs,bleu1,bleu2,bleu3,bleu4,meteor,rouge_l,spice\n";
  for (const auto& r : rows) {
    out += r.kind + "," + std::to_string(r.pairs);
    for (double b : r.mean.bleu) out += "," + fmt(b);
    out += "," + fmt(r.mean.meteor) + "," + fmt(r.mean.rouge_l) + ",\n";
  }
  return out;
}

Stat mean_stddev(const std::vector<double>& values) {
  if (values.empty()) return {};
  double sum = 0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  double sq = 0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return {mean, std::sqrt(sq / static_cast<double>(values.size()))};
}

ConnectivitySummary summarize_connectivity(const std::string& model, const std::vector<MapGrid>& maps) {
  if (maps.empty()) throw DataError("connectivity evaluation needs a non-empty corpus");
  std::vector<double> comps, largest, frag;
  for (const auto& m : maps) {
    const auto r = connectivity_report(m);
    comps.push_back(r.components);
    largest.push_back(r.largest);
    frag.push_back(r.fragmentation);
  }
  return {model, maps.size(), mean_stddev(comps), mean_stddev(largest), mean_stddev(frag)};
}

nlohmann::ordered_json map_report_json(const std::vector<ConnectivitySummary>& summaries) {
  auto models = nlohmann::ordered_json::array();
  const ConnectivitySummary* fdm = nullptr;
  const ConnectivitySummary* ddm = nullptr;
  for (const auto& s : summaries) {
    models.push_back({{"model", s.model},
                      {"maps", s.maps},
                      {"components", stat_json(s.components)},
                      {"largest_component", stat_json(s.largest)},
                      {"fragmentation", stat_json(s.fragmentation)}});
    if (s.model == "fdm") fdm = &s;
    if (s.model == "ddm") ddm = &s;
  }
  nlohmann::ordered_json out{{"report", "map"},
                             {"fragmentation_definition", "fragmentation (1 - largest/walkable)"},
                             {"models", models}};
  if (fdm && ddm) {
    out["comparison"] = {{"claim", "DDM has fewer disconnected components"},
                         {"fdm_mean_components", fdm->components.mean},
                         {"ddm_mean_components", ddm->components.mean},
                         {"holds", ddm->components.mean < fdm->components.mean}};
  }
  return out;
}

std::string map_report_csv(const std::vector<ConnectivitySummary>& summaries) {
  std::string out =
      "model,maps,components_mean,components_std,largest_mean,largest_std,fragmentation_mean,fragmentation_std\n";
  for (const auto& s : summaries) {
    out += s.model + "," + std::to_string(s.maps) + "," + fmt(s.components.mean) + "," + fmt(s.components.stddev) +
           "," + fmt(s.largest.mean) + "," + fmt(s.largest.stddev) + "," + fmt(s.fragmentation.mean) + "," +
           fmt(s.fragmentation.stddev) + "\n";
  }
  return out;
}

std::string scatter_csv(const std::vector<ScatterRow>& rows) {
  std::string out = "map_id,model,ground_truth_score,generated_score\n";
  for (const auto& r : rows) {
    out += r.map_id + "," + r.model + "," + fmt(r.ground_truth_score) + "," + fmt(r.generated_score) + "\n";
  }
  return out;
}

nlohmann::ordered_json scatter_report_json(const std::vector<ScatterRow>& rows) {
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_model;
  for (const auto& r : rows) {
    by_model[r.model].first.push_back(r.ground_truth_score);
    by_model[r.model].second.push_back(r.generated_score);
  }
  auto models = nlohmann::ordered_json::array();
  for (const auto& [name, cols] : by_model) {
    models.push_back({{"model", name},
                      {"maps", cols.first.size()},
                      {"ground_truth_score", stat_json(mean_stddev(cols.first))},
                      {"generated_score", stat_json(mean_stddev(cols.second))},
                      {"pearson", number_or_null(pearson(cols.first, cols.second))}});
  }
  return {{"report", "scatter"}, {"score", "aligner score"}, {"models", models}};
}

double mean_pairwise_edit_distance(const std::vector<MapGrid>& maps) {
  if (maps.size() < 2) return 0;
  double sum = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    for (std::size_t j = i + 1; j < maps.size(); ++j, ++n) sum += map_edit_distance(maps[i], maps[j]);
  }
  return sum / static_cast<double>(n);
}

}  // namespace moonshine
