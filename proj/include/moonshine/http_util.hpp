#pragma once

#include <chrono>
#include <string>
#include <utility>
#include <vector>

namespace moonshine {

struct HttpResponse {
  int status = 0;
  std::string body;
};

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // starts with '/'
};

// Throws UsageError for anything but http:// or https:// URLs.
ParsedUrl parse_url(const std::string& url);

// One POST attempt. Transport failures (refused, timeout, TLS) throw NetworkError.
HttpResponse post_json(const std::string& url, const std::string& body,
                       const std::vector<std::pair<std::string, std::string>>& headers, double timeout_seconds);

// Delay before retry `attempt` (0-based): 100 ms doubling, capped at 2 s.
std::chrono::milliseconds retry_backoff(int attempt);

}  // namespace moonshine
