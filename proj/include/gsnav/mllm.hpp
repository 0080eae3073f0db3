#pragma once

#include <nlohmann/json.hpp>

#include <chrono>
#include <deque>
#include <functional>
#include <mutex>
#include <string>
#include <vector>

namespace gsnav {

struct MlmRequest {
  std::string text_map;
  std::string starting_point;  // instance id
  std::string end_point;       // instance id
  std::string prompt_version = "v1";
  std::string prompt;

  [[nodiscard]] nlohmann::json to_json() const;
};

struct MlmEntry {
  std::string instruction_type;
  std::string start;
  std::string end;
  std::string generated_instruction;
};

// Full instruction-generation prompt for a request.
std::string build_prompt(const std::string& text_map, const std::string& starting_point, const std::string& end_point);

// Parses a response body into entries. Throws SchemaError when the body is
// not a JSON array of objects carrying the four string fields.
std::vector<MlmEntry> parse_mlm_response(const std::string& body);

class MlmClient {
 public:
  virtual ~MlmClient() = default;
  // Returns the raw response body. Throws TransportError on failure.
  virtual std::string complete(const MlmRequest& request) = 0;
};

// Offline client. With no canned responses it produces three templated
// instructions per high-level category from the categories of the start and
// end objects found in the text map. Canned responses are returned in order,
// the last one repeating.
class StubMlmClient : public MlmClient {
 public:
  StubMlmClient() = default;
  explicit StubMlmClient(std::vector<std::string> canned) : canned_(std::move(canned)) {}

  std::string complete(const MlmRequest& request) override;
  [[nodiscard]] std::size_t calls() const;

 private:
  std::vector<std::string> canned_;
  mutable std::mutex mu_;
  std::size_t calls_ = 0;
};

struct HttpMlmConfig {
  std::string base_url = "http://127.0.0.1:8080";
  std::string path = "/v1/instructions";
  std::string token_env = "MLLM_API_TOKEN";
  std::chrono::milliseconds timeout{30000};
  int transport_retries = 2;
};

// POSTs the request as JSON with a bearer token read from the environment.
class HttpMlmClient : public MlmClient {
 public:
  explicit HttpMlmClient(HttpMlmConfig config) : config_(std::move(config)) {}
  std::string complete(const MlmRequest& request) override;

 private:
  HttpMlmConfig config_;
};

}  // namespace gsnav
