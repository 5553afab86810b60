#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "moonshine/nn/tensor.hpp"
#include "moonshine/rng.hpp"

namespace moonshine::nn {

/// Named trainable tensors plus Adam moments. Insertion order is the serialization order.
template <typename Scalar>
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Var<Scalar> var;
    Mat<Scalar> m;
    Mat<Scalar> v;
  };

  // Throws UsageError on duplicate names.
  Var<Scalar> add(const std::string& name, Mat<Scalar> init);
  // Throws UsageError for unknown names.
  const Var<Scalar>& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t parameter_count() const;
  std::int64_t step() const { return step_; }
  void set_step(std::int64_t s) { step_ = s; }

  void zero_grad();

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
  std::int64_t step_ = 0;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam on every entry that received a gradient; increments the step counter.
template <typename Scalar>
void adam_step(ParamStore<Scalar>& params, const AdamConfig& cfg);

// Uniform(-bound, bound) with bound = gain * sqrt(3 / fan_in).
template <typename Scalar>
Mat<Scalar> uniform_init(int rows, int cols, int fan_in, double gain, Rng& rng);

// Model files: "MSHM", u32 version, u32 JSON length, JSON config, u32 parameter count,
// then per parameter: u16 name length, name, u32 rank, u32 dims, little-endian f32 data.
void save_model(const std::filesystem::path& path, const nlohmann::ordered_json& config, const ParamStore<float>& params);

struct LoadedModel {
  nlohmann::json config;
  std::vector<std::pair<std::string, Mat<float>>> tensors;
};

LoadedModel load_model_file(const std::filesystem::path& path);

// Copies loaded tensors into a store built from the same config; names and shapes must match exactly.
void assign_parameters(ParamStore<float>& params, const LoadedModel& loaded);

}  // namespace moonshine::nn
