#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "moonshine/dataset.hpp"

namespace moonshine {

// Unit-norm description embedding.
using TextEmbedding = Eigen::VectorXf;

inline constexpr int kDefaultEmbedDim = 256;
inline constexpr int kMinEmbedDim = 16;

std::uint64_t fnv1a64(std::string_view bytes);

// Lowercased ASCII tokens split on every byte that is not [a-z0-9] or >= 0x80.
std::vector<std::string> embed_tokens(std::string_view text);

// Signed feature hashing over unigrams and adjacent bigrams ("w1 w2").
// bucket = fnv1a64(feature) mod dim; sign = parity of a salted splitmix64 of the
// feature's FNV-1a hash taken from bit 32. Empty text maps to e0.
TextEmbedding hashed_embed(std::string_view text, int dim = kDefaultEmbedDim);

// Rescales to unit length; a zero vector becomes e0.
void normalize_embedding(TextEmbedding& v);

struct EmbedServiceConfig {
  std::string endpoint;
  int dim = 1024;
  double timeout_seconds = 30.0;
  int max_retries = 3;
  int concurrency = 4;
  double requests_per_second = 0;  // 0 = unlimited
};

// POST {"input": text} -> {"embedding": [floats]}. Dimension mismatch -> DataError;
// transport / 5xx / 429 after retries -> NetworkError.
TextEmbedding service_embed(std::string_view text, const EmbedServiceConfig& cfg);

struct EmbeddingEntry {
  std::string id;
  TextEmbedding values;
};

struct EmbeddingFile {
  int dim = 0;
  std::vector<EmbeddingEntry> entries;

  // Throws DataError when absent.
  const TextEmbedding& at(const std::string& id) const;
};

// "<record id>/long/<i>" or "<record id>/short/<i>".
std::string description_id(const std::string& record_id, int index);

void write_embeddings(const std::filesystem::path& path, const EmbeddingFile& file);
EmbeddingFile read_embeddings(const std::filesystem::path& path);

enum class EmbedMode { Hashed, Service };

struct EmbedCorpusConfig {
  EmbedMode mode = EmbedMode::Hashed;
  int dim = kDefaultEmbedDim;
  EmbedServiceConfig service;
};

// Every record needs descriptions; order is dataset order x (5 long, 5 short).
EmbeddingFile embed_corpus(const std::vector<MapRecord>& records, const EmbedCorpusConfig& cfg);

}  // namespace moonshine
