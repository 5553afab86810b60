#pragma once

#include <string>
#include <vector>

#include "moonshine/descriptions.hpp"
#include "moonshine/error.hpp"
#include "moonshine/labeling.hpp"

namespace moonshine {

struct LlmConfig {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4-turbo-2024-04-09";
  std::string api_key_env = "OPENAI_API_KEY";
  int max_retries = 3;  // extra attempts after the first
  double timeout_seconds = 60.0;
  double temperature = 1.0;

  void validate() const;
};

// The model kept breaking the response contract; carries the last raw reply.
class LabelFormatError : public DataError {
 public:
  LabelFormatError(const std::string& what, std::string raw) : DataError(what), raw_response(std::move(raw)) {}
  std::string raw_response;
};

// Splits a numbered 10-line reply (lines 1-5 long, 6-10 short) and validates it.
// Throws LabelFormatError listing every violation.
DescriptionSet parse_description_response(const std::string& text);

// Chat-completions labeling with validation and correction retries.
//   missing key          -> ConfigError
//   transport / 5xx / 429 after retries -> NetworkError
//   format still invalid after retries  -> LabelFormatError
DescriptionSet llm_label(const std::string& round_prompt, const PromptBundle& bundle, const LlmConfig& cfg);

}  // namespace moonshine
