#include "moonshine/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "moonshine/embed.hpp"
#include "moonshine/error.hpp"

namespace moonshine {

std::vector<std::string> metric_tokens(std::string_view text) { return embed_tokens(text); }

namespace {

using Ngram = std::vector<std::string>;

std::map<Ngram, int> ngram_counts(const std::vector<std::string>& tokens, int n) {
  std::map<Ngram, int> counts;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
    ++counts[Ngram(tokens.begin() + static_cast<std::ptrdiff_t>(i), tokens.begin() + static_cast<std::ptrdiff_t>(i) + n)];
  }
  return counts;
}

int lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<int> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

template <typename Seq>
int levenshtein(const Seq& a, const Seq& b) {
  std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

std::array<double, 4> bleu(std::string_view hypothesis, const std::vector<std::string>& references) {
  if (references.empty()) throw UsageError("bleu needs at least one reference");
  const auto hyp = metric_tokens(hypothesis);
  std::array<double, 4> out{};
  if (hyp.empty()) return out;
  std::vector<std::vector<std::string>> refs;
  for (const auto& r : references) refs.push_back(metric_tokens(r));

  // Closest reference length, preferring the shorter one on ties.
  const auto c = static_cast<double>(hyp.size());
  double r = static_cast<double>(refs.front().size());
  for (const auto& ref : refs) {
    const auto len = static_cast<double>(ref.size());
    if (std::abs(len - c) < std::abs(r - c) || (std::abs(len - c) == std::abs(r - c) && len < r)) r = len;
  }
  const double bp = std::min(1.0, std::exp(1.0 - r / c));

  double log_sum = 0;
  bool zero = false;
  for (int n = 1; n <= 4; ++n) {
    const auto hyp_counts = ngram_counts(hyp, n);
    int total = 0, clipped = 0;
    std::map<Ngram, int> max_ref;
    for (const auto& ref : refs) {
      for (const auto& [g, cnt] : ngram_counts(ref, n)) max_ref[g] = std::max(max_ref[g], cnt);
    }
    for (const auto& [g, cnt] : hyp_counts) {
      total += cnt;
      const auto it = max_ref.find(g);
      if (it != max_ref.end()) clipped += std::min(cnt, it->second);
    }
    const double p = total == 0 ? 0.0 : static_cast<double>(clipped) / total;
    if (p == 0.0) zero = true;
    if (!zero) log_sum += std::log(p);
    out[static_cast<std::size_t>(n - 1)] = zero ? 0.0 : 100.0 * bp * std::exp(log_sum / n);
  }
  return out;
}

double rouge_l(std::string_view hypothesis, std::string_view reference) {
  const auto hyp = metric_tokens(hypothesis);
  const auto ref = metric_tokens(reference);
  if (hyp.empty() || ref.empty()) return 0.0;
  const int lcs = lcs_length(hyp, ref);
  if (lcs == 0) return 0.0;
  const double R = static_cast<double>(lcs) / static_cast<double>(ref.size());
  const double P = static_cast<double>(lcs) / static_cast<double>(hyp.size());
  constexpr double b2 = 1.2 * 1.2;
  return 100.0 * (1 + b2) * R * P / (R + b2 * P);
}

std::vector<std::string> stem_candidates(const std::string& word) {
  std::vector<std::string> out{word};
  for (std::string_view suffix : {"ing", "ed", "es", "s"}) {
    if (!ends_with(word, suffix) || word.size() < suffix.size() + 2) continue;
    std::string stem = word.substr(0, word.size() - suffix.size());
    out.push_back(stem);
    // running -> runn -> run
    const std::size_t n = stem.size();
    if (n >= 3 && stem[n - 1] == stem[n - 2] && !is_vowel(stem[n - 1])) out.push_back(stem.substr(0, n - 1));
  }
  return out;
}

double meteor_lite(std::string_view hypothesis, std::string_view reference) {
  const auto hyp = metric_tokens(hypothesis);
  const auto ref = metric_tokens(reference);
  if (hyp.empty() || ref.empty()) return 0.0;
  std::vector<int> align(hyp.size(), -1);
  std::vector<bool> used(ref.size(), false);
  for (std::size_t i = 0; i < hyp.size(); ++i) {
    for (std::size_t j = 0; j < ref.size(); ++j) {
      if (!used[j] && hyp[i] == ref[j]) {
        align[i] = static_cast<int>(j);
        used[j] = true;
        break;
      }
    }
  }
  std::vector<std::vector<std::string>> ref_stems;
  for (const auto& w : ref) ref_stems.push_back(stem_candidates(w));
  for (std::size_t i = 0; i < hyp.size(); ++i) {
    if (align[i] >= 0) continue;
    const auto hs = stem_candidates(hyp[i]);
    for (std::size_t j = 0; j < ref.size() && align[i] < 0; ++j) {
      if (used[j]) continue;
      for (const auto& s : hs) {
        if (std::find(ref_stems[j].begin(), ref_stems[j].end(), s) != ref_stems[j].end()) {
          align[i] = static_cast<int>(j);
          used[j] = true;
          break;
        }
      }
    }
  }
  int matches = 0, chunks = 0, prev = -2;
  bool in_chunk = false;
  for (std::size_t i = 0; i < hyp.size(); ++i) {
    if (align[i] < 0) {
      in_chunk = false;
      continue;
    }
    ++matches;
    if (!in_chunk || align[i] != prev + 1) ++chunks;
    in_chunk = true;
    prev = align[i];
  }
  if (matches == 0) return 0.0;
  const double P = static_cast<double>(matches) / static_cast<double>(hyp.size());
  const double R = static_cast<double>(matches) / static_cast<double>(ref.size());
  const double fmean = 10 * P * R / (R + 9 * P);
  const double penalty = 0.5 * std::pow(static_cast<double>(chunks) / matches, 3);
  return 100.0 * fmean * (1 - penalty);
}

int edit_distance(std::string_view a, std::string_view b) { return levenshtein(a, b); }

int map_edit_distance(const MapGrid& a, const MapGrid& b) { return levenshtein(a.cells(), b.cells()); }

ConnectivityReport connectivity_report(const MapGrid& map) {
  const auto labels = walkable_components(map);
  ConnectivityReport r;
  r.components = labels.count();
  int total = 0;
  for (int s : labels.sizes) {
    total += s;
    r.largest = std::max(r.largest, s);
  }
  r.fragmentation = total == 0 ? 0.0 : 1.0 - static_cast<double>(r.largest) / total;
  return r;
}

TextMetricReport score_pair(std::string_view hypothesis, std::string_view reference) {
  TextMetricReport r;
  r.bleu = bleu(hypothesis, {std::string(reference)});
  r.meteor = meteor_lite(hypothesis, reference);
  r.rouge_l = rouge_l(hypothesis, reference);
  return r;
}

}  // namespace moonshine
