#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include "mathforge/augment/client.hpp"
#include "mathforge/io.hpp"

namespace mathforge::augment {

void CompletionRequest::validate() const {
  if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
  if (!(temperature >= 0)) throw std::invalid_argument("temperature must be >= 0");
  if (max_tokens < 1) throw std::invalid_argument("max_tokens must be >= 1");
}

nlohmann::json CompletionRequest::to_json() const {
  nlohmann::json msgs = nlohmann::json::array();
  for (const Message& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  return {{"endpoint_id", endpoint_id}, {"model_id", model_id},       {"messages", msgs},
          {"temperature", temperature}, {"top_p", top_p},             {"max_tokens", max_tokens},
          {"repetition_penalty", repetition_penalty}, {"n_samples", n_samples}};
}

CompletionRequest CompletionRequest::from_json(const nlohmann::json& j) {
  CompletionRequest r;
  r.endpoint_id = j.value("endpoint_id", "");
  r.model_id = j.value("model_id", "");
  for (const auto& m : j.at("messages")) r.messages.push_back({m.at("role"), m.at("content")});
  r.temperature = j.value("temperature", 0.7);
  r.top_p = j.value("top_p", 1.0);
  r.max_tokens = j.value("max_tokens", 2048);
  r.repetition_penalty = j.value("repetition_penalty", 1.0);
  r.n_samples = j.value("n_samples", 1);
  return r;
}

std::string CompletionRequest::cache_key() const { return io::sha256_hex(io::canonical(to_json())); }

nlohmann::json CompletionResponse::to_json() const {
  return {{"texts", texts}, {"usage", usage}};
}

CompletionResponse CompletionResponse::from_json(const nlohmann::json& j) {
  CompletionResponse r;
  r.texts = j.at("texts").get<std::vector<std::string>>();
  if (j.contains("usage")) r.usage = j.at("usage").get<std::map<std::string, long long>>();
  return r;
}

ProviderError::ProviderError(int status, std::string body)
    : ClientError("provider returned HTTP " + std::to_string(status) + ": " + body.substr(0, 200)),
      status_(status),
      excerpt_(body.substr(0, 200)) {}

CompletionResponse complete(CompletionClient& client, const CompletionRequest& req) {
  req.validate();
  CompletionResponse r = client.complete(req);
  if (static_cast<int>(r.texts.size()) > req.n_samples) r.texts.resize(static_cast<std::size_t>(req.n_samples));
  return r;
}

// ---------------------------------------------------------------------------

RetryingClient::RetryingClient(std::shared_ptr<CompletionClient> inner, RetryPolicy policy, Sleeper sleeper,
                               std::uint64_t seed)
    : inner_(std::move(inner)), policy_(policy), sleep_(std::move(sleeper)), rng_(seed) {
  if (policy_.max_attempts < 1) throw std::invalid_argument("max_attempts must be >= 1");
  if (!sleep_) sleep_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

CompletionResponse RetryingClient::complete(const CompletionRequest& req) {
  for (int attempt = 1;; ++attempt) {
    try {
      return inner_->complete(req);
    } catch (const ClientError& e) {
      if (!e.retryable() || attempt >= policy_.max_attempts) throw;
    }
    double factor = 1.0;
    {
      std::lock_guard<std::mutex> lock(rng_mu_);
      std::uniform_real_distribution<double> u(-policy_.jitter, policy_.jitter);
      factor += u(rng_);
    }
    const double ms = static_cast<double>(policy_.base_delay.count()) * static_cast<double>(1 << (attempt - 1)) * factor;
    sleep_(std::chrono::milliseconds(static_cast<long long>(std::max(ms, 0.0))));
  }
}

// ---------------------------------------------------------------------------

CachingClient::CachingClient(std::shared_ptr<CompletionClient> inner, std::filesystem::path dir)
    : inner_(std::move(inner)), dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path CachingClient::entry_path(const CompletionRequest& req) const {
  return dir_ / req.cache_key();
}

CompletionResponse CachingClient::complete(const CompletionRequest& req) {
  const std::filesystem::path entry = entry_path(req);
  std::error_code ec;
  if (std::filesystem::exists(entry, ec)) {
    try {
      CompletionResponse r = CompletionResponse::from_json(nlohmann::json::parse(io::read_file(entry)));
      r.cache_hit = true;
      return r;
    } catch (const std::exception&) {
      // unreadable entry: fall through and overwrite it
    }
  }
  CompletionResponse r = inner_->complete(req);
  r.cache_hit = false;
  // Unique temp name so concurrent writers of the same key never share a file.
  static std::atomic<unsigned long> counter{0};
  std::ostringstream tmp_name;
  tmp_name << entry.filename().string() << ".tmp." << std::hash<std::thread::id>{}(std::this_thread::get_id()) << "."
           << counter++;
  const std::filesystem::path tmp = dir_ / tmp_name.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw io::IoError("cannot write cache entry " + tmp.string());
    out << io::canonical(r.to_json());
  }
  std::filesystem::rename(tmp, entry, ec);
  if (ec) throw io::IoError("cannot promote cache entry " + entry.string() + ": " + ec.message());
  return r;
}

// ---------------------------------------------------------------------------

MockClient::MockClient(const nlohmann::json& script) {
  auto batches = [](const nlohmann::json& list) {
    std::vector<std::vector<std::string>> out;
    for (const auto& b : list) {
      out.push_back(b.is_string() ? std::vector<std::string>{b.get<std::string>()} : b.get<std::vector<std::string>>());
    }
    return out;
  };
  try {
    for (const auto& r : script.value("rules", nlohmann::json::array())) {
      Rule rule;
      rule.match = r.value("match", "");
      rule.batches = batches(r.value("responses", nlohmann::json::array()));
      rule.fail_times = r.value("fail_times", 0);
      rule.error = r.value("error", "transport");
      rules_.push_back(std::move(rule));
    }
    if (script.contains("default")) {
      Rule rule;
      rule.batches = batches(script.at("default"));
      rules_.push_back(std::move(rule));
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("bad mock script: ") + e.what());
  }
}

std::shared_ptr<MockClient> MockClient::load(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("mock script " + path.string() + ": " + e.what());
  }
  return std::make_shared<MockClient>(j);
}

int MockClient::calls() const {
  std::lock_guard<std::mutex> lock(mu_);
  return calls_;
}

CompletionResponse MockClient::complete(const CompletionRequest& req) {
  std::lock_guard<std::mutex> lock(mu_);
  ++calls_;
  std::string last_user;
  for (const Message& m : req.messages) {
    if (m.role == "user") last_user = m.content;
  }
  for (Rule& rule : rules_) {
    if (last_user.find(rule.match) == std::string::npos) continue;
    if (rule.fail_times > 0) {
      --rule.fail_times;
      if (rule.error == "rate-limit") throw RateLimited("mock: rate limited");
      if (rule.error == "provider") throw ProviderError(500, "mock: scripted provider failure");
      if (rule.error == "provider-4xx") throw ProviderError(400, "mock: scripted bad request");
      throw TransportError("mock: scripted transport failure");
    }
    if (rule.next >= rule.batches.size()) {
      throw ProviderError(400, "mock: script exhausted for rule '" + rule.match + "'");
    }
    CompletionResponse r;
    r.texts = rule.batches[rule.next++];
    r.usage["completion_tokens"] = 0;
    for (const std::string& t : r.texts) r.usage["completion_tokens"] += static_cast<long long>(t.size());
    return r;
  }
  throw ProviderError(404, "mock: no rule matches the request");
}

std::vector<CompletionResponse> complete_batch(CompletionClient& client, const std::vector<CompletionRequest>& reqs,
                                               int workers) {
  return parallel_map<CompletionResponse>(reqs.size(), workers,
                                          [&](std::size_t i) { return complete(client, reqs[i]); });
}

}  // namespace mathforge::augment
