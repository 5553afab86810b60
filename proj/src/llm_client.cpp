#include "moonshine/llm_client.hpp"

#include <cstdlib>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "moonshine/http_util.hpp"

namespace moonshine {

void LlmConfig::validate() const {
  if (max_retries < 1) throw ConfigError("llm max retries must be at least 1");
  if (timeout_seconds <= 0) throw ConfigError("llm timeout must be positive");
  if (api_key_env.empty()) throw ConfigError("llm api key variable name is empty");
  parse_url(endpoint);
}

namespace {

// Drops a leading "1.", "1)", "1:" or "-" marker.
std::string strip_marker(std::string line) {
  std::size_t i = 0;
  while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
  std::size_t j = i;
  while (j < line.size() && line[j] >= '0' && line[j] <= '9') ++j;
  if (j > i && j < line.size() && (line[j] == '.' || line[j] == ')' || line[j] == ':')) {
    i = j + 1;
  } else if (i < line.size() && (line[i] == '-' || line[i] == '*')) {
    i += 1;
  }
  while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
  std::size_t end = line.size();
  while (end > i && (line[end - 1] == ' ' || line[end - 1] == '\r' || line[end - 1] == '\t')) --end;
  return line.substr(i, end - i);
}

}  // namespace

DescriptionSet parse_description_response(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::string stripped = strip_marker(line);
    if (!stripped.empty()) lines.push_back(std::move(stripped));
  }
  if (lines.size() != static_cast<std::size_t>(kDescriptionCount)) {
    throw LabelFormatError("expected 10 description lines, got " + std::to_string(lines.size()), text);
  }
  DescriptionSet set;
  for (int i = 0; i < kLongCount; ++i) set.long_texts[static_cast<std::size_t>(i)] = lines[static_cast<std::size_t>(i)];
  for (int i = 0; i < kShortCount; ++i) {
    set.short_texts[static_cast<std::size_t>(i)] = lines[static_cast<std::size_t>(kLongCount + i)];
  }
  const auto violations = validate_set(set);
  if (!violations.empty()) {
    std::string msg = "description rules violated:";
    for (const auto& v : violations) msg += " [" + std::string(violation_name(v.kind)) + "] " + v.detail + ";";
    throw LabelFormatError(msg, text);
  }
  return set;
}

DescriptionSet llm_label(const std::string& round_prompt, const PromptBundle& bundle, const LlmConfig& cfg) {
  cfg.validate();
  const char* key = std::getenv(cfg.api_key_env.c_str());
  if (key == nullptr || *key == '\0') throw ConfigError("environment variable " + cfg.api_key_env + " is not set");

  nlohmann::json messages = nlohmann::json::array();
  messages.push_back({{"role", "system"}, {"content", bundle.render()}});
  messages.push_back({{"role", "user"}, {"content", round_prompt}});
  const std::vector<std::pair<std::string, std::string>> headers{{"Authorization", std::string("Bearer ") + key}};

  std::string last_failure;
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(retry_backoff(attempt - 1));
    nlohmann::json request{{"model", cfg.model}, {"temperature", cfg.temperature}, {"messages", messages}};
    HttpResponse res;
    try {
      res = post_json(cfg.endpoint, request.dump(), headers, cfg.timeout_seconds);
    } catch (const NetworkError& e) {
      last_failure = e.what();
      if (attempt == cfg.max_retries) throw;
      continue;
    }
    if (res.status == 429 || res.status >= 500) {
      last_failure = "HTTP " + std::to_string(res.status);
      if (attempt == cfg.max_retries) throw NetworkError("llm endpoint kept failing: " + last_failure);
      continue;
    }
    if (res.status != 200) throw NetworkError("llm endpoint returned HTTP " + std::to_string(res.status) + ": " + res.body);

    std::string content;
    try {
      content = nlohmann::json::parse(res.body).at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      if (attempt == cfg.max_retries) throw LabelFormatError(std::string("malformed chat response: ") + e.what(), res.body);
      continue;
    }
    try {
      return parse_description_response(content);
    } catch (const LabelFormatError& e) {
      if (attempt == cfg.max_retries) throw;
      messages.push_back({{"role", "assistant"}, {"content", content}});
      messages.push_back({{"role", "user"},
                          {"content", std::string("Your answer broke the response rules: ") + e.what() +
                                          " Reply again with exactly 10 numbered lines: 5 long descriptions "
                                          "(1–3 sentences) followed by 5 short ones (5–15 words)."}});
    }
  }
  throw NetworkError("llm labeling failed: " + last_failure);
}

}  // namespace moonshine
