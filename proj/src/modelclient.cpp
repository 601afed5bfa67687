#include "calmath/modelclient.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <thread>

#include "calmath/jsonl.hpp"

namespace calmath {

void CompletionRequest::validate() const {
  if (max_tokens < 1) throw std::invalid_argument("max_tokens must be positive");
  if (!(temperature >= 0.0)) throw std::invalid_argument("temperature must be non-negative");
  if (want_top_logprobs < 0 || want_top_logprobs > kMaxTopLogprobs)
    throw std::invalid_argument("want_top_logprobs must be in 0..5");
}

void to_json(nlohmann::json& j, const CompletionRequest& r) {
  j = nlohmann::json{{"prompt", r.prompt},
                     {"max_tokens", r.max_tokens},
                     {"temperature", r.temperature},
                     {"logprobs", r.want_top_logprobs},
                     {"stop", r.stop}};
}

void from_json(const nlohmann::json& j, CompletionRequest& r) {
  r.prompt = j.at("prompt").get<std::string>();
  r.max_tokens = j.at("max_tokens").get<int>();
  r.temperature = j.at("temperature").get<double>();
  r.want_top_logprobs = j.value("logprobs", 0);
  r.stop = j.value("stop", std::vector<std::string>{});
}

void to_json(nlohmann::json& j, const CompletionResponse& r) {
  auto tokens = nlohmann::json::array();
  for (const auto& t : r.tokens) {
    auto top = nlohmann::json::array();
    for (const auto& a : t.top) top.push_back({a.token, a.logprob});
    tokens.push_back({{"token", t.token}, {"logprob", t.logprob}, {"top", top}});
  }
  j = nlohmann::json{{"text", r.text}, {"tokens", tokens}};
}

void from_json(const nlohmann::json& j, CompletionResponse& r) {
  r.text = j.at("text").get<std::string>();
  r.tokens.clear();
  for (const auto& t : j.value("tokens", nlohmann::json::array())) {
    TokenLogprob tok;
    tok.token = t.at("token").get<std::string>();
    tok.logprob = t.at("logprob").get<double>();
    for (const auto& a : t.value("top", nlohmann::json::array()))
      tok.top.push_back({a.at(0).get<std::string>(), a.at(1).get<double>()});
    r.tokens.push_back(std::move(tok));
  }
}

std::vector<double> Backend::embed(const std::string&) {
  throw MissingEmbedding("backend " + id() + " does not provide embeddings");
}

// ---------------------------------------------------------------------------

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

ResponseCache::ResponseCache(std::filesystem::path path) : path_(std::move(path)) {
  if (std::filesystem::exists(*path_)) {
    std::ifstream in(*path_);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto rec = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
      if (rec.is_discarded() || !rec.contains("key") || !rec.contains("value")) continue;
      entries_.insert_or_assign(rec["key"].get<std::string>(), rec["value"]);
    }
  } else if (path_->has_parent_path()) {
    std::filesystem::create_directories(path_->parent_path());
  }
  out_.open(*path_, std::ios::app | std::ios::binary);
  if (!out_) throw IoError("cannot open cache " + path_->string());
}

std::optional<nlohmann::json> ResponseCache::get(const std::string& key) const {
  std::shared_lock lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ResponseCache::put(const std::string& key, const nlohmann::json& value) {
  std::unique_lock lock(mu_);
  if (!entries_.emplace(key, value).second) return;
  if (out_.is_open()) {
    out_ << nlohmann::json{{"key", key}, {"value", value}}.dump() << '\n';
    out_.flush();
  }
}

std::size_t ResponseCache::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

std::string ResponseCache::make_key(const std::string& backend_id, const nlohmann::json& request) {
  return sha256_hex(backend_id + '\n' + request.dump());
}

// ---------------------------------------------------------------------------

ModelClient::ModelClient(std::shared_ptr<Backend> backend, std::shared_ptr<ResponseCache> cache,
                         RetryPolicy retry)
    : backend_(std::move(backend)), cache_(std::move(cache)), retry_(retry) {
  if (!backend_) throw std::invalid_argument("ModelClient: null backend");
  if (retry_.max_attempts < 1) retry_.max_attempts = 1;
}

template <typename F>
auto ModelClient::with_retries(F&& f) -> decltype(f()) {
  auto delay = retry_.initial_backoff;
  for (int attempt = 1;; ++attempt) {
    try {
      ++calls_;
      return f();
    } catch (const TransportError&) {
      if (attempt >= retry_.max_attempts) throw;
      std::this_thread::sleep_for(delay);
      delay = std::chrono::milliseconds(
          static_cast<std::chrono::milliseconds::rep>(static_cast<double>(delay.count()) * retry_.multiplier));
    }
  }
}

CompletionResponse ModelClient::complete(const CompletionRequest& request) {
  request.validate();
  const auto key = ResponseCache::make_key(backend_->id(), {{"complete", request}});
  if (cache_) {
    if (auto hit = cache_->get(key)) {
      ++hits_;
      return hit->get<CompletionResponse>();
    }
  }
  auto response = with_retries([&] { return backend_->complete(request); });
  nlohmann::json stored = response;
  if (cache_) cache_->put(key, stored);
  // Return the stored form so first and cached reads are indistinguishable.
  return stored.get<CompletionResponse>();
}

std::vector<double> ModelClient::embed(const std::string& text) {
  const auto key = ResponseCache::make_key(backend_->id(), {{"embed", text}});
  if (cache_) {
    if (auto hit = cache_->get(key)) {
      ++hits_;
      return hit->get<std::vector<double>>();
    }
  }
  auto v = with_retries([&] { return backend_->embed(text); });
  if (cache_) cache_->put(key, v);
  return v;
}

std::vector<std::optional<CompletionResponse>> complete_all(ModelClient& client,
                                                            const std::vector<CompletionRequest>& requests,
                                                            std::size_t parallelism) {
  std::vector<std::optional<CompletionResponse>> results(requests.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < requests.size(); i = next++) {
      try {
        results[i] = client.complete(requests[i]);
      } catch (const TransportError&) {
        results[i] = std::nullopt;
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = requests.size();
      }
    }
  };
  const std::size_t n_workers = std::clamp<std::size_t>(parallelism, 1, std::max<std::size_t>(1, requests.size()));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

// ---------------------------------------------------------------------------

FileEmbeddingBackend::FileEmbeddingBackend(const std::filesystem::path& path)
    : id_("file:" + path.filename().string()) {
  for (const auto& row : read_jsonl(path)) {
    auto key = row.at("key").get<std::string>();
    auto vec = row.at("embedding").get<std::vector<double>>();
    if (vec.empty()) throw IoError(path.string() + ": empty embedding for " + key);
    if (dim_ == 0) dim_ = vec.size();
    if (vec.size() != dim_) throw IoError(path.string() + ": inconsistent embedding dimension for " + key);
    vectors_.insert_or_assign(std::move(key), std::move(vec));
  }
  id_ += ":" + std::to_string(vectors_.size()) + "x" + std::to_string(dim_);
}

CompletionResponse FileEmbeddingBackend::complete(const CompletionRequest&) {
  throw RequestRejected("embeddings file backend cannot produce completions");
}

std::vector<double> FileEmbeddingBackend::embed(const std::string& text) {
  auto it = vectors_.find(text);
  if (it == vectors_.end()) throw MissingEmbedding("no stored embedding for key: " + text);
  return it->second;
}

}  // namespace calmath
