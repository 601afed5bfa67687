#pragma once

// OpenAI-style completion/embedding endpoint over HTTP(S).

#include <chrono>
#include <string>

#include "calmath/modelclient.hpp"

namespace calmath {

struct HttpBackendConfig {
  std::string base_url = "https://api.openai.com";  // scheme://host[:port]
  std::string completions_path = "/v1/completions";
  std::string embeddings_path = "/v1/embeddings";
  std::string model;
  std::string embedding_model;
  std::string api_key;  // sent as a Bearer token when non-empty
  std::chrono::seconds timeout{60};
};

/// Request body for /v1/completions.
nlohmann::json completion_body(const CompletionRequest& request, const std::string& model);

/// Parses a /v1/completions response. Throws LogprobsUnavailable when
/// logprobs were requested but the response carries none.
CompletionResponse parse_completion_body(const nlohmann::json& body, bool want_logprobs);

nlohmann::json embedding_body(const std::string& text, const std::string& model);
std::vector<double> parse_embedding_body(const nlohmann::json& body);

class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpBackendConfig config);

  std::string id() const override;
  CompletionResponse complete(const CompletionRequest& request) override;
  std::vector<double> embed(const std::string& text) override;

 private:
  nlohmann::json post(const std::string& path, const nlohmann::json& body, bool want_logprobs);

  HttpBackendConfig config_;
};

}  // namespace calmath
