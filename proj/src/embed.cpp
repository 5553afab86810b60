#include "moonshine/embed.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <thread>

#include <json.hpp>

#include "moonshine/binary_io.hpp"
#include "moonshine/concurrency.hpp"
#include "moonshine/error.hpp"
#include "moonshine/http_util.hpp"
#include "moonshine/rng.hpp"

namespace moonshine {

namespace {

constexpr std::uint32_t kEmbedFileVersion = 1;

bool token_byte(unsigned char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c >= 0x80; }

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::string> embed_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c - 'A' + 'a');
    if (token_byte(c)) {
      cur.push_back(static_cast<char>(c));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

void normalize_embedding(TextEmbedding& v) {
  const double norm = std::sqrt(v.cast<double>().squaredNorm());
  if (norm == 0.0 || !std::isfinite(norm)) {
    v.setZero();
    if (v.size() > 0) v[0] = 1.0f;
    return;
  }
  v = (v.cast<double>() / norm).cast<float>();
}

TextEmbedding hashed_embed(std::string_view text, int dim) {
  if (dim < kMinEmbedDim) throw UsageError("embedding dim must be at least 16");
  const auto tokens = embed_tokens(text);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(dim);
  auto add = [&](const std::string& feature) {
    const std::uint64_t h = fnv1a64(feature);
    const std::uint64_t s = splitmix64(h ^ 0x9e3779b97f4a7c15ULL);
    acc[static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(dim))] += ((s >> 32) & 1) ? 1.0 : -1.0;
  };
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    add(tokens[i]);
    if (i + 1 < tokens.size()) add(tokens[i] + " " + tokens[i + 1]);
  }
  TextEmbedding v = acc.cast<float>();
  normalize_embedding(v);
  return v;
}

TextEmbedding service_embed(std::string_view text, const EmbedServiceConfig& cfg) {
  if (cfg.dim < 1) throw ConfigError("service embedding dim must be positive");
  const std::string body = nlohmann::json{{"input", std::string(text)}}.dump();
  std::string last_failure;
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(retry_backoff(attempt - 1));
    HttpResponse res;
    try {
      res = post_json(cfg.endpoint, body, {}, cfg.timeout_seconds);
    } catch (const NetworkError& e) {
      last_failure = e.what();
      continue;
    }
    if (res.status == 429 || res.status >= 500) {
      last_failure = "HTTP " + std::to_string(res.status);
      continue;
    }
    if (res.status != 200) throw NetworkError("embedding service returned HTTP " + std::to_string(res.status));
    std::vector<double> values;
    try {
      values = nlohmann::json::parse(res.body).at("embedding").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("malformed embedding response: ") + e.what());
    }
    if (static_cast<int>(values.size()) != cfg.dim) {
      throw DataError("embedding dimension mismatch: expected " + std::to_string(cfg.dim) + ", got " +
                      std::to_string(values.size()));
    }
    TextEmbedding v(cfg.dim);
    for (int i = 0; i < cfg.dim; ++i) {
      if (!std::isfinite(values[static_cast<std::size_t>(i)])) throw DataError("embedding contains non-finite values");
      v[i] = static_cast<float>(values[static_cast<std::size_t>(i)]);
    }
    normalize_embedding(v);
    return v;
  }
  throw NetworkError("embedding service kept failing: " + last_failure);
}

const TextEmbedding& EmbeddingFile::at(const std::string& id) const {
  for (const auto& e : entries) {
    if (e.id == id) return e.values;
  }
  throw DataError("no embedding for " + id);
}

std::string description_id(const std::string& record_id, int index) {
  if (index < 0 || index >= kDescriptionCount) throw UsageError("description index out of range");
  return index < kLongCount ? record_id + "/long/" + std::to_string(index)
                            : record_id + "/short/" + std::to_string(index - kLongCount);
}

void write_embeddings(const std::filesystem::path& path, const EmbeddingFile& file) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  bin::put_magic(out, "MSHE");
  bin::put_uint<std::uint32_t>(out, kEmbedFileVersion);
  bin::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(file.dim));
  bin::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(file.entries.size()));
  for (const auto& e : file.entries) {
    if (e.id.size() > std::numeric_limits<std::uint16_t>::max()) throw DataError("embedding id too long: " + e.id);
    if (e.values.size() != file.dim) throw DataError("embedding " + e.id + " has wrong dimension");
    bin::put_uint<std::uint16_t>(out, static_cast<std::uint16_t>(e.id.size()));
    out.write(e.id.data(), static_cast<std::streamsize>(e.id.size()));
    bin::put_f32s(out, std::span<const float>(e.values.data(), static_cast<std::size_t>(e.values.size())));
  }
  if (!out) throw DataError("write failed: " + path.string());
}

EmbeddingFile read_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  bin::expect_magic(in, "MSHE");
  const auto version = bin::get_uint<std::uint32_t>(in);
  if (version != kEmbedFileVersion) throw DataError("unsupported embedding file version " + std::to_string(version));
  EmbeddingFile file;
  file.dim = static_cast<int>(bin::get_uint<std::uint32_t>(in));
  const auto count = bin::get_uint<std::uint32_t>(in);
  if (file.dim <= 0) throw DataError("embedding file has zero dimension");
  file.entries.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    EmbeddingEntry e;
    e.id = bin::get_bytes(in, bin::get_uint<std::uint16_t>(in));
    e.values.resize(file.dim);
    bin::get_f32s(in, std::span<float>(e.values.data(), static_cast<std::size_t>(file.dim)));
    file.entries.push_back(std::move(e));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw DataError("trailing bytes in " + path.string());
  return file;
}

EmbeddingFile embed_corpus(const std::vector<MapRecord>& records, const EmbedCorpusConfig& cfg) {
  EmbeddingFile file;
  file.dim = cfg.mode == EmbedMode::Hashed ? cfg.dim : cfg.service.dim;
  file.entries.resize(records.size() * kDescriptionCount);
  for (std::size_t r = 0; r < records.size(); ++r) {
    if (!records[r].descriptions) throw DataError("record " + records[r].id + " has no descriptions");
  }
  auto job = [&](int k) {
    const auto r = static_cast<std::size_t>(k) / kDescriptionCount;
    const int d = k % kDescriptionCount;
    const std::string& text = records[r].descriptions->at(d);
    auto& entry = file.entries[static_cast<std::size_t>(k)];
    entry.id = description_id(records[r].id, d);
    entry.values = cfg.mode == EmbedMode::Hashed ? hashed_embed(text, cfg.dim) : service_embed(text, cfg.service);
  };
  const int total = static_cast<int>(file.entries.size());
  if (cfg.mode == EmbedMode::Hashed) {
    parallel_for(total, 1, job);
  } else {
    TokenBucket bucket(cfg.service.requests_per_second, cfg.service.concurrency);
    parallel_for(total, cfg.service.concurrency, [&](int k) {
      bucket.acquire();
      job(k);
    });
  }
  return file;
}

}  // namespace moonshine
