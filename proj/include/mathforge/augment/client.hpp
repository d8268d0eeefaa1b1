#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace mathforge::augment {

struct Message {
  std::string role;
  std::string content;
};

struct CompletionRequest {
  std::string endpoint_id;
  std::string model_id;
  std::vector<Message> messages;
  double temperature = 0.7;
  double top_p = 1.0;
  int max_tokens = 2048;
  double repetition_penalty = 1.0;
  int n_samples = 1;

  /// Throws std::invalid_argument when n_samples < 1 or temperature < 0.
  void validate() const;
  nlohmann::json to_json() const;
  static CompletionRequest from_json(const nlohmann::json& j);
  /// sha256 of the canonical JSON form; changes with every field.
  std::string cache_key() const;
};

struct CompletionResponse {
  std::vector<std::string> texts;
  std::map<std::string, long long> usage;
  bool cache_hit = false;

  nlohmann::json to_json() const;  // cache_hit is not part of the stored form
  static CompletionResponse from_json(const nlohmann::json& j);
};

class ClientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual bool retryable() const { return false; }
};

class TransportError : public ClientError {
 public:
  using ClientError::ClientError;
  bool retryable() const override { return true; }
};

class RateLimited : public ClientError {
 public:
  using ClientError::ClientError;
  bool retryable() const override { return true; }
};

class ProviderError : public ClientError {
 public:
  ProviderError(int status, std::string body);
  int status() const { return status_; }
  const std::string& excerpt() const { return excerpt_; }
  bool retryable() const override { return status_ >= 500; }

 private:
  int status_;
  std::string excerpt_;
};

class CompletionClient {
 public:
  virtual ~CompletionClient() = default;
  virtual CompletionResponse complete(const CompletionRequest& req) = 0;
};

/// Validates, delegates, and checks the sample count.
CompletionResponse complete(CompletionClient& client, const CompletionRequest& req);

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds base_delay{1000};
  double jitter = 0.25;  // fraction of the delay, drawn uniformly
};

class RetryingClient : public CompletionClient {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;
  RetryingClient(std::shared_ptr<CompletionClient> inner, RetryPolicy policy, Sleeper sleeper = {},
                 std::uint64_t seed = 0);
  CompletionResponse complete(const CompletionRequest& req) override;

 private:
  std::shared_ptr<CompletionClient> inner_;
  RetryPolicy policy_;
  Sleeper sleep_;
  std::mutex rng_mu_;
  std::mt19937_64 rng_;
};

/// Content-addressed response cache: one file per request key.
class CachingClient : public CompletionClient {
 public:
  CachingClient(std::shared_ptr<CompletionClient> inner, std::filesystem::path dir);
  CompletionResponse complete(const CompletionRequest& req) override;
  std::filesystem::path entry_path(const CompletionRequest& req) const;

 private:
  std::shared_ptr<CompletionClient> inner_;
  std::filesystem::path dir_;
};

/// Scripted offline client. Script format:
///   {"rules": [{"match": "substring of the last user message",
///               "responses": [["text", ...], ...],   // one batch per call
///               "fail_times": 0, "error": "transport"}],
///    "default": [["text", ...], ...]}
/// Each call pops the next batch of the first matching rule. A batch with
/// fewer texts than requested yields a short response.
class MockClient : public CompletionClient {
 public:
  explicit MockClient(const nlohmann::json& script);
  static std::shared_ptr<MockClient> load(const std::filesystem::path& path);
  CompletionResponse complete(const CompletionRequest& req) override;
  int calls() const;

 private:
  struct Rule {
    std::string match;
    std::vector<std::vector<std::string>> batches;
    std::size_t next = 0;
    int fail_times = 0;
    std::string error = "transport";
  };
  mutable std::mutex mu_;
  std::vector<Rule> rules_;
  int calls_ = 0;
};

struct HttpEndpoint {
  std::string id = "default";
  std::string base_url;                       // scheme://host[:port]
  std::string path = "/v1/chat/completions";
  std::string token_env;                      // env var holding the secret, may be empty
  std::string auth_header = "Authorization";
  std::string auth_prefix = "Bearer ";
  std::chrono::seconds timeout{120};
};

class HttpClient : public CompletionClient {
 public:
  explicit HttpClient(HttpEndpoint endpoint);
  CompletionResponse complete(const CompletionRequest& req) override;
  static nlohmann::json wire_request(const CompletionRequest& req);
  static CompletionResponse parse_wire_response(const std::string& body);

 private:
  HttpEndpoint ep_;
};

/// Runs `fn` over indices [0, n) with at most `workers` threads; results keep
/// input order. The first exception (lowest index) is rethrown.
template <typename T>
std::vector<T> parallel_map(std::size_t n, int workers, const std::function<T(std::size_t)>& fn);

std::vector<CompletionResponse> complete_batch(CompletionClient& client, const std::vector<CompletionRequest>& reqs,
                                               int workers);

}  // namespace mathforge::augment

#include "mathforge/augment/parallel.ipp"
