#include "calmath/http_backend.hpp"

#include <algorithm>

#include "httplib.h"

namespace calmath {

nlohmann::json completion_body(const CompletionRequest& request, const std::string& model) {
  nlohmann::json body{{"model", model},
                      {"prompt", request.prompt},
                      {"max_tokens", request.max_tokens},
                      {"temperature", request.temperature},
                      {"echo", false}};
  if (request.want_top_logprobs > 0) body["logprobs"] = request.want_top_logprobs;
  if (!request.stop.empty()) body["stop"] = request.stop;
  return body;
}

CompletionResponse parse_completion_body(const nlohmann::json& body, bool want_logprobs) {
  if (!body.contains("choices") || body["choices"].empty())
    throw RequestRejected("completion response has no choices");
  const auto& choice = body["choices"][0];
  CompletionResponse r;
  r.text = choice.value("text", "");
  const bool has = choice.contains("logprobs") && choice["logprobs"].is_object() &&
                   choice["logprobs"].contains("tokens");
  if (!has) {
    if (want_logprobs) throw LogprobsUnavailable("endpoint returned no logprobs");
    return r;
  }
  const auto& lp = choice["logprobs"];
  const auto& tokens = lp["tokens"];
  const auto& token_logprobs = lp.value("token_logprobs", nlohmann::json::array());
  const auto& top = lp.value("top_logprobs", nlohmann::json::array());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    TokenLogprob t;
    t.token = tokens[i].get<std::string>();
    if (i < token_logprobs.size() && token_logprobs[i].is_number()) t.logprob = token_logprobs[i].get<double>();
    if (i < top.size() && top[i].is_object()) {
      for (const auto& [tok, value] : top[i].items()) t.top.push_back({tok, value.get<double>()});
      std::stable_sort(t.top.begin(), t.top.end(),
                       [](const auto& a, const auto& b) { return a.logprob > b.logprob; });
    }
    r.tokens.push_back(std::move(t));
  }
  if (want_logprobs && r.tokens.empty()) throw LogprobsUnavailable("endpoint returned empty logprobs");
  return r;
}

nlohmann::json embedding_body(const std::string& text, const std::string& model) {
  return {{"model", model}, {"input", text}};
}

std::vector<double> parse_embedding_body(const nlohmann::json& body) {
  if (!body.contains("data") || body["data"].empty()) throw MissingEmbedding("embedding response has no data");
  return body["data"][0].at("embedding").get<std::vector<double>>();
}

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
  if (config_.base_url.empty()) throw std::invalid_argument("HttpBackend: empty base_url");
}

std::string HttpBackend::id() const {
  return "http:" + config_.base_url + config_.completions_path + "|" + config_.model + "|" +
         config_.embedding_model;
}

nlohmann::json HttpBackend::post(const std::string& path, const nlohmann::json& body, bool want_logprobs) {
  httplib::Client cli(config_.base_url);
  cli.set_connection_timeout(config_.timeout);
  cli.set_read_timeout(config_.timeout);
  cli.set_write_timeout(config_.timeout);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  auto res = cli.Post(path, headers, body.dump(), "application/json");
  if (!res) throw TransportError("POST " + path + " failed: " + httplib::to_string(res.error()));
  if (res->status == 429 || res->status >= 500)
    throw TransportError("POST " + path + " returned " + std::to_string(res->status));
  if (res->status >= 400) {
    if (want_logprobs && res->body.find("logprobs") != std::string::npos)
      throw LogprobsUnavailable("endpoint refused logprobs: " + res->body);
    throw RequestRejected("POST " + path + " returned " + std::to_string(res->status) + ": " + res->body);
  }
  auto parsed = nlohmann::json::parse(res->body, nullptr, false);
  if (parsed.is_discarded()) throw TransportError("POST " + path + " returned malformed JSON");
  return parsed;
}

CompletionResponse HttpBackend::complete(const CompletionRequest& request) {
  const bool want = request.want_top_logprobs > 0;
  return parse_completion_body(post(config_.completions_path, completion_body(request, config_.model), want), want);
}

std::vector<double> HttpBackend::embed(const std::string& text) {
  const auto& model = config_.embedding_model.empty() ? config_.model : config_.embedding_model;
  return parse_embedding_body(post(config_.embeddings_path, embedding_body(text, model), false));
}

}  // namespace calmath
