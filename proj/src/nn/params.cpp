#include "moonshine/nn/params.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "moonshine/binary_io.hpp"
#include "moonshine/error.hpp"

namespace moonshine::nn {

namespace {
constexpr std::uint32_t kModelFileVersion = 1;
}

template <typename Scalar>
Var<Scalar> ParamStore<Scalar>::add(const std::string& name, Mat<Scalar> init) {
  if (index_.count(name) != 0) throw UsageError("duplicate parameter " + name);
  Entry e{name, parameter<Scalar>(std::move(init)), {}, {}};
  e.m = Mat<Scalar>::Zero(e.var->value.rows(), e.var->value.cols());
  e.v = e.m;
  index_.emplace(name, entries_.size());
  entries_.push_back(std::move(e));
  return entries_.back().var;
}

template <typename Scalar>
const Var<Scalar>& ParamStore<Scalar>::get(const std::string& name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) throw UsageError("unknown parameter " + name);
  return entries_[it->second].var;
}

template <typename Scalar>
std::size_t ParamStore<Scalar>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += static_cast<std::size_t>(e.var->value.size());
  return n;
}

template <typename Scalar>
void ParamStore<Scalar>::zero_grad() {
  for (auto& e : entries_) e.var->grad.resize(0, 0);
}

template <typename Scalar>
void adam_step(ParamStore<Scalar>& params, const AdamConfig& cfg) {
  const std::int64_t t = params.step() + 1;
  params.set_step(t);
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  const auto b1 = static_cast<Scalar>(cfg.beta1), b2 = static_cast<Scalar>(cfg.beta2);
  const auto step = static_cast<Scalar>(cfg.lr / c1);
  const auto inv_c2 = static_cast<Scalar>(1.0 / c2);
  const auto eps = static_cast<Scalar>(cfg.eps);
  for (auto& e : params.entries()) {
    const Mat<Scalar>& g = e.var->grad;
    if (g.size() == 0) continue;
    e.m = b1 * e.m + (Scalar(1) - b1) * g;
    e.v = b2 * e.v + (Scalar(1) - b2) * g.cwiseAbs2();
    e.var->value.array() -= step * e.m.array() / ((e.v.array() * inv_c2).sqrt() + eps);
  }
}

template <typename Scalar>
Mat<Scalar> uniform_init(int rows, int cols, int fan_in, double gain, Rng& rng) {
  const double bound = gain * std::sqrt(3.0 / std::max(fan_in, 1));
  Mat<Scalar> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(rng.uniform(-bound, bound));
  return m;
}

void save_model(const std::filesystem::path& path, const nlohmann::ordered_json& config, const ParamStore<float>& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  const std::string blob = config.dump();
  bin::put_magic(out, "MSHM");
  bin::put_uint<std::uint32_t>(out, kModelFileVersion);
  bin::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(blob.size()));
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  bin::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(params.entries().size()));
  for (const auto& e : params.entries()) {
    if (e.name.size() > std::numeric_limits<std::uint16_t>::max()) throw DataError("parameter name too long");
    bin::put_uint<std::uint16_t>(out, static_cast<std::uint16_t>(e.name.size()));
    out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    const auto& v = e.var->value;
    bin::put_uint<std::uint32_t>(out, 2);
    bin::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(v.rows()));
    bin::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(v.cols()));
    bin::put_f32s(out, std::span<const float>(v.data(), static_cast<std::size_t>(v.size())));
  }
  if (!out) throw DataError("write failed: " + path.string());
}

LoadedModel load_model_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  bin::expect_magic(in, "MSHM");
  const auto version = bin::get_uint<std::uint32_t>(in);
  if (version != kModelFileVersion) throw DataError("unsupported model file version " + std::to_string(version));
  LoadedModel model;
  const auto blob_len = bin::get_uint<std::uint32_t>(in);
  try {
    model.config = nlohmann::json::parse(bin::get_bytes(in, blob_len));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model config is not valid JSON: ") + e.what());
  }
  const auto count = bin::get_uint<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = bin::get_bytes(in, bin::get_uint<std::uint16_t>(in));
    const auto rank = bin::get_uint<std::uint32_t>(in);
    if (rank != 2) throw DataError("parameter " + name + " has unsupported rank " + std::to_string(rank));
    const auto rows = bin::get_uint<std::uint32_t>(in);
    const auto cols = bin::get_uint<std::uint32_t>(in);
    if (static_cast<std::uint64_t>(rows) * cols > (1ULL << 28)) throw DataError("parameter " + name + " is implausibly large");
    Mat<float> m(rows, cols);
    bin::get_f32s(in, std::span<float>(m.data(), static_cast<std::size_t>(m.size())));
    model.tensors.emplace_back(std::move(name), std::move(m));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw DataError("trailing bytes in " + path.string());
  return model;
}

void assign_parameters(ParamStore<float>& params, const LoadedModel& loaded) {
  if (loaded.tensors.size() != params.entries().size()) {
    throw DataError("model file has " + std::to_string(loaded.tensors.size()) + " parameters, config implies " +
                    std::to_string(params.entries().size()));
  }
  for (const auto& [name, value] : loaded.tensors) {
    if (!params.contains(name)) throw DataError("unexpected parameter " + name);
    auto& dst = params.get(name)->value;
    if (dst.rows() != value.rows() || dst.cols() != value.cols()) {
      throw DataError("parameter " + name + " has shape " + std::to_string(value.rows()) + "x" +
                      std::to_string(value.cols()) + ", config implies " + std::to_string(dst.rows()) + "x" +
                      std::to_string(dst.cols()));
    }
    if (!value.allFinite()) throw DataError("parameter " + name + " contains non-finite values");
    dst = value;
  }
}

template class ParamStore<float>;
template class ParamStore<double>;
template void adam_step<float>(ParamStore<float>&, const AdamConfig&);
template void adam_step<double>(ParamStore<double>&, const AdamConfig&);
template Mat<float> uniform_init<float>(int, int, int, double, Rng&);
template Mat<double> uniform_init<double>(int, int, int, double, Rng&);

}  // namespace moonshine::nn
