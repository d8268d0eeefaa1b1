#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <cstdlib>

#include "mathforge/augment/client.hpp"

namespace mathforge::augment {

HttpClient::HttpClient(HttpEndpoint endpoint) : ep_(std::move(endpoint)) {
  if (ep_.base_url.empty()) throw std::invalid_argument("http endpoint '" + ep_.id + "' has no base_url");
}

nlohmann::json HttpClient::wire_request(const CompletionRequest& req) {
  nlohmann::json msgs = nlohmann::json::array();
  for (const Message& m : req.messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  nlohmann::json j = {{"model", req.model_id},          {"messages", msgs},
                      {"temperature", req.temperature}, {"top_p", req.top_p},
                      {"max_tokens", req.max_tokens},   {"n", req.n_samples}};
  if (req.repetition_penalty != 1.0) j["repetition_penalty"] = req.repetition_penalty;
  return j;
}

CompletionResponse HttpClient::parse_wire_response(const std::string& body) {
  CompletionResponse r;
  try {
    const nlohmann::json j = nlohmann::json::parse(body);
    for (const auto& c : j.at("choices")) r.texts.push_back(c.at("message").at("content").get<std::string>());
    if (j.contains("usage") && j["usage"].is_object()) {
      for (const auto& [k, v] : j["usage"].items()) {
        if (v.is_number_integer()) r.usage[k] = v.get<long long>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ProviderError(200, std::string("unparseable completion body: ") + e.what());
  }
  return r;
}

CompletionResponse HttpClient::complete(const CompletionRequest& req) {
  httplib::Client cli(ep_.base_url);
  cli.set_connection_timeout(ep_.timeout);
  cli.set_read_timeout(ep_.timeout);
  cli.set_write_timeout(ep_.timeout);
  httplib::Headers headers;
  if (!ep_.token_env.empty()) {
    const char* token = std::getenv(ep_.token_env.c_str());
    if (token == nullptr) throw std::invalid_argument("environment variable " + ep_.token_env + " is not set");
    headers.emplace(ep_.auth_header, ep_.auth_prefix + token);
  }
  auto res = cli.Post(ep_.path, headers, wire_request(req).dump(), "application/json");
  if (!res) throw TransportError("request to " + ep_.base_url + " failed: " + httplib::to_string(res.error()));
  if (res->status == 429) throw RateLimited("rate limited by " + ep_.base_url);
  if (res->status < 200 || res->status >= 300) throw ProviderError(res->status, res->body);
  return parse_wire_response(res->body);
}

}  // namespace mathforge::augment
