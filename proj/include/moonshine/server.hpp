#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

namespace moonshine {

struct ServeConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::optional<std::filesystem::path> fdm_path;
  std::optional<std::filesystem::path> ddm_path;
  std::optional<std::filesystem::path> aligner_path;
  std::optional<std::filesystem::path> static_dir;
  std::optional<std::filesystem::path> schema_dir;
  int max_concurrent = 4;
  int queue_limit = 16;  // generations waiting for a slot before 429
  std::size_t max_prompt_bytes = 2048;

  void validate() const;
};

inline constexpr std::string_view kApiVersion = "1";

// Response for GET /api/tiles.
nlohmann::ordered_json tiles_json();

/// JSON API plus static file serving. Models are loaded once in the constructor
/// and never modified afterwards.
class ApiServer {
 public:
  // Throws DataError when a model file cannot be loaded.
  explicit ApiServer(ServeConfig config);
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  // Binds and returns the bound port. Throws NetworkError on failure.
  int bind();
  // Blocks until stop().
  void run();
  void stop();
  void wait_until_ready() const;

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace moonshine
