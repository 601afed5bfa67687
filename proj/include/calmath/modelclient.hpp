#pragma once

// Transport for completions, token log-probabilities and embeddings.
//
// A Backend talks to one model (an OpenAI-style HTTP endpoint, the built-in
// simulator, or a vectors file). ModelClient wraps a backend with a
// persistent response cache and bounded retries.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace calmath {

/// Transport failure; retryable.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The backend does not return token log-probabilities, so logit-based
/// confidence kinds are unavailable for it.
class LogprobsUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The endpoint rejected the request for a reason retrying will not fix.
class RequestRejected : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MissingEmbedding : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The paper-era API exposes at most five alternatives per position.
inline constexpr int kMaxTopLogprobs = 5;

struct CompletionRequest {
  std::string prompt;
  int max_tokens = 16;
  double temperature = 0.0;  // 0 = greedy
  int want_top_logprobs = 0;
  std::vector<std::string> stop{"\n"};

  /// Throws std::invalid_argument on out-of-range fields.
  void validate() const;
};

struct TokenAlternative {
  std::string token;
  double logprob = 0.0;
  friend bool operator==(const TokenAlternative&, const TokenAlternative&) = default;
};

struct TokenLogprob {
  std::string token;
  double logprob = 0.0;
  std::vector<TokenAlternative> top;  // sorted by descending logprob
  friend bool operator==(const TokenLogprob&, const TokenLogprob&) = default;
};

struct CompletionResponse {
  std::string text;
  std::vector<TokenLogprob> tokens;  // empty when logprobs were not requested

  bool has_logprobs() const { return !tokens.empty(); }
  friend bool operator==(const CompletionResponse&, const CompletionResponse&) = default;
};

void to_json(nlohmann::json& j, const CompletionRequest& r);
void from_json(const nlohmann::json& j, CompletionRequest& r);
void to_json(nlohmann::json& j, const CompletionResponse& r);
void from_json(const nlohmann::json& j, CompletionResponse& r);

class Backend {
 public:
  virtual ~Backend() = default;

  /// Stable identity; part of every cache key.
  virtual std::string id() const = 0;
  virtual CompletionResponse complete(const CompletionRequest& request) = 0;
  virtual std::vector<double> embed(const std::string& text);
};

/// Append-only record file of responses keyed by request hash. Reads are
/// concurrent; appends are serialized.
class ResponseCache {
 public:
  /// In-memory only.
  ResponseCache() = default;
  /// Loads existing records from `path` (a torn final line is ignored) and
  /// appends new ones to it.
  explicit ResponseCache(std::filesystem::path path);

  std::optional<nlohmann::json> get(const std::string& key) const;
  void put(const std::string& key, const nlohmann::json& value);
  std::size_t size() const;

  static std::string make_key(const std::string& backend_id, const nlohmann::json& request);

 private:
  mutable std::shared_mutex mu_;
  std::unordered_map<std::string, nlohmann::json> entries_;
  std::optional<std::filesystem::path> path_;
  std::ofstream out_;
};

struct RetryPolicy {
  int max_attempts = 4;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
};

class ModelClient {
 public:
  ModelClient(std::shared_ptr<Backend> backend, std::shared_ptr<ResponseCache> cache = nullptr,
              RetryPolicy retry = {});

  /// Cached completion. Throws TransportError once retries are exhausted.
  CompletionResponse complete(const CompletionRequest& request);
  std::vector<double> embed(const std::string& text);

  const Backend& backend() const { return *backend_; }
  std::size_t cache_hits() const { return hits_.load(); }
  std::size_t backend_calls() const { return calls_.load(); }

 private:
  template <typename F>
  auto with_retries(F&& f) -> decltype(f());

  std::shared_ptr<Backend> backend_;
  std::shared_ptr<ResponseCache> cache_;
  RetryPolicy retry_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> calls_{0};
};

/// Issues all requests with at most `parallelism` in flight. Results keep
/// request order; a request whose retries were exhausted yields nullopt.
std::vector<std::optional<CompletionResponse>> complete_all(ModelClient& client,
                                                            const std::vector<CompletionRequest>& requests,
                                                            std::size_t parallelism);

/// Embeddings loaded from a JSONL file of {"key": ..., "embedding": [...]}.
class FileEmbeddingBackend : public Backend {
 public:
  explicit FileEmbeddingBackend(const std::filesystem::path& path);

  std::string id() const override { return id_; }
  CompletionResponse complete(const CompletionRequest&) override;
  std::vector<double> embed(const std::string& text) override;
  std::size_t dimension() const { return dim_; }

 private:
  std::string id_;
  std::size_t dim_ = 0;
  std::unordered_map<std::string, std::vector<double>> vectors_;
};

/// Hex SHA-256 digest.
std::string sha256_hex(const std::string& data);

}  // namespace calmath
