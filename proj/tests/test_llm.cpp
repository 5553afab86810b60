#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include "moonshine/error.hpp"
#include "moonshine/labeling.hpp"
#include "moonshine/llm_client.hpp"
#include <json.hpp>
#include <httplib.h>

using namespace moonshine;

namespace {

std::string numbered(const std::vector<std::string>& lines) {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) out += std::to_string(i + 1) + ". " + lines[i] + "\n";
  return out;
}

std::vector<std::string> valid_lines() {
  std::vector<std::string> lines;
  for (int i = 0; i < 5; ++i) lines.push_back("A long description number " + std::to_string(i) + ". It has two sentences.");
  for (int i = 0; i < 5; ++i) lines.push_back("a short description line " + std::to_string(i));
  return lines;
}

// Chat-completions stand-in that replays scripted replies in order.
struct MockChat {
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::vector<std::pair<int, std::string>> replies;
  std::atomic<int> calls{0};
  std::vector<nlohmann::json> requests;
  std::mutex mu;

  explicit MockChat(std::vector<std::pair<int, std::string>> scripted) : replies(std::move(scripted)) {
    server.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      const int i = calls++;
      {
        std::lock_guard lock(mu);
        requests.push_back(nlohmann::json::parse(req.body));
      }
      const auto& [status, content] = replies[static_cast<std::size_t>(std::min<int>(i, static_cast<int>(replies.size()) - 1))];
      res.status = status;
      if (status == 200) {
        nlohmann::json body{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}};
        res.set_content(body.dump(), "application/json");
      } else {
        res.set_content(content, "text/plain");
      }
    });
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~MockChat() {
    server.stop();
    thread.join();
  }
  LlmConfig config() const {
    LlmConfig cfg;
    cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
    cfg.api_key_env = "MOONSHINE_TEST_LLM_KEY";
    cfg.max_retries = 2;
    cfg.timeout_seconds = 5;
    return cfg;
  }
};

const PromptBundle& bundle() {
  static const PromptBundle b = build_pregen_prompt(default_few_shot_examples());
  return b;
}

}  // namespace

TEST_SUITE("llm") {
  TEST_CASE("response parsing") {
    const auto set = parse_description_response(numbered(valid_lines()));
    CHECK(set.long_texts[0] == "A long description number 0. It has two sentences.");
    CHECK(set.short_texts[4] == "a short description line 4");
    auto nine = valid_lines();
    nine.pop_back();
    CHECK_THROWS_AS(parse_description_response(numbered(nine)), LabelFormatError);
    auto too_long = valid_lines();
    too_long[7] = "one two three four five six seven eight nine ten eleven twelve thirteen fourteen fifteen sixteen seventeen eighteen nineteen twenty";
    try {
      parse_description_response(numbered(too_long));
      FAIL("expected LabelFormatError");
    } catch (const LabelFormatError& e) {
      CHECK(std::string(e.what()).find("word_count") != std::string::npos);
      CHECK(e.raw_response == numbered(too_long));
    }
  }

  TEST_CASE("valid reply is accepted on the first call") {
    ::setenv("MOONSHINE_TEST_LLM_KEY", "test-key", 1);
    MockChat mock({{200, numbered(valid_lines())}});
    const auto set = llm_label("map prompt", bundle(), mock.config());
    CHECK(set.long_texts[1] == "A long description number 1. It has two sentences.");
    CHECK(mock.calls == 1);
    REQUIRE(mock.requests.size() == 1);
    CHECK(mock.requests[0]["messages"][0]["role"] == "system");
    CHECK(mock.requests[0]["messages"][1]["content"] == "map prompt");
  }

  TEST_CASE("nine lines then a server error then a valid reply") {
    ::setenv("MOONSHINE_TEST_LLM_KEY", "test-key", 1);
    auto nine = valid_lines();
    nine.pop_back();
    MockChat mock({{200, numbered(nine)}, {500, "boom"}, {200, numbered(valid_lines())}});
    const auto set = llm_label("map prompt", bundle(), mock.config());
    CHECK(set.short_texts[0] == "a short description line 0");
    CHECK(mock.calls == 3);
    // The correction turn is appended after the malformed reply.
    CHECK(mock.requests[2]["messages"].size() == 4);
  }

  TEST_CASE("twenty-word short line triggers a correction retry") {
    ::setenv("MOONSHINE_TEST_LLM_KEY", "test-key", 1);
    auto bad = valid_lines();
    bad[6] = "one two three four five six seven eight nine ten eleven twelve thirteen fourteen fifteen sixteen seventeen eighteen nineteen twenty";
    MockChat mock({{200, numbered(bad)}, {200, numbered(valid_lines())}});
    llm_label("map prompt", bundle(), mock.config());
    CHECK(mock.calls == 2);
    const auto& last = mock.requests[1]["messages"];
    CHECK(last.back()["role"] == "user");
    CHECK(last.back()["content"].get<std::string>().find("word") != std::string::npos);
  }

  TEST_CASE("persistent failures surface as typed errors") {
    ::setenv("MOONSHINE_TEST_LLM_KEY", "test-key", 1);
    {
      MockChat mock({{200, "just one line"}});
      CHECK_THROWS_AS(llm_label("p", bundle(), mock.config()), LabelFormatError);
      CHECK(mock.calls == 3);
    }
    {
      MockChat mock({{503, "down"}});
      CHECK_THROWS_AS(llm_label("p", bundle(), mock.config()), NetworkError);
    }
  }

  TEST_CASE("missing api key") {
    ::unsetenv("MOONSHINE_TEST_LLM_KEY_MISSING");
    LlmConfig cfg;
    cfg.api_key_env = "MOONSHINE_TEST_LLM_KEY_MISSING";
    CHECK_THROWS_AS(llm_label("p", bundle(), cfg), ConfigError);
  }
}
