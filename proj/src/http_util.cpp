#include "moonshine/http_util.hpp"

#include <algorithm>
#include <cmath>

#include <httplib.h>

#include "moonshine/error.hpp"

namespace moonshine {

ParsedUrl parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw UsageError("endpoint must be an absolute URL: " + url);
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw UsageError("unsupported URL scheme: " + scheme);
  const auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl out;
  out.origin = url.substr(0, path_start);
  out.path = path_start == std::string::npos ? "/" : url.substr(path_start);
  if (out.origin.size() <= scheme_end + 3) throw UsageError("endpoint URL has no host: " + url);
  return out;
}

HttpResponse post_json(const std::string& url, const std::string& body,
                       const std::vector<std::pair<std::string, std::string>>& headers, double timeout_seconds) {
  const ParsedUrl parsed = parse_url(url);
  httplib::Client client(parsed.origin);
  const auto secs = static_cast<time_t>(std::floor(timeout_seconds));
  const auto usecs = static_cast<time_t>((timeout_seconds - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  httplib::Headers h;
  for (const auto& [k, v] : headers) h.emplace(k, v);
  auto res = client.Post(parsed.path, h, body, "application/json");
  if (!res) throw NetworkError("POST " + url + " failed: " + httplib::to_string(res.error()));
  return {res->status, res->body};
}

std::chrono::milliseconds retry_backoff(int attempt) {
  const long long ms = 100LL << std::min(attempt, 5);
  return std::chrono::milliseconds(std::min(ms, 2000LL));
}

}  // namespace moonshine
