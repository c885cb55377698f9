#include "silico/http_backend.hpp"

#include <cstdlib>

#include "httplib.h"
#include "json.hpp"
#include "silico/errors.hpp"

namespace silico::gateway {

using nlohmann::json;

HttpBackend::HttpBackend(HttpConfig config) : config_(std::move(config)) {
  if (config_.base_url.empty()) {
    throw ConfigError("http backend: base_url is required");
  }
  if (config_.api_key.empty()) {
    const char* env = std::getenv("SILICO_API_KEY");
    if (env) config_.api_key = env;
  }
}

std::string HttpBackend::backend_id() const { return "http:" + config_.base_url; }

std::string HttpBackend::post_json(const std::string& path, const std::string& body) {
  httplib::Client client(config_.base_url);
  client.set_connection_timeout(config_.timeout_seconds, 0);
  client.set_read_timeout(config_.timeout_seconds, 0);
  httplib::Headers headers;
  if (!config_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + config_.api_key);
  }
  auto res = client.Post(path, headers, body, "application/json");
  if (!res) {
    throw TransportError("POST " + config_.base_url + path + ": " +
                             httplib::to_string(res.error()),
                         1);
  }
  if (res->status == 429 || res->status >= 500) {
    throw TransportError("POST " + path + ": HTTP " + std::to_string(res->status),
                         1);
  }
  if (res->status >= 400) {
    std::string message = res->body;
    json j = json::parse(res->body, nullptr, false);
    if (!j.is_discarded() && j.contains("error") && j["error"].contains("message")) {
      message = j["error"]["message"];
    }
    throw BackendError("backend refused (" + std::to_string(res->status) +
                           "): " + message,
                       res->status);
  }
  return res->body;
}

std::vector<std::string> HttpBackend::complete_chunk(const CompletionRequest& req,
                                                     int /*first_sample*/,
                                                     int count) {
  json body;
  body["model"] = req.model_id;
  body["prompt"] = req.prompt;
  body["max_tokens"] = req.max_tokens;
  body["temperature"] = req.temperature;
  body["n"] = count;
  if (!req.stop.empty()) body["stop"] = req.stop;

  json resp = json::parse(post_json("/v1/completions", body.dump()), nullptr, false);
  if (resp.is_discarded() || !resp.contains("choices")) {
    throw TransportError("malformed completions response", 1);
  }
  std::vector<std::string> out(static_cast<size_t>(count));
  size_t filled = 0;
  for (const auto& choice : resp["choices"]) {
    size_t index = choice.value("index", filled);
    if (index >= out.size()) continue;
    out[index] = choice.value("text", "");
    ++filled;
  }
  if (filled != size_t(count)) {
    throw TransportError("completions response returned " + std::to_string(filled) +
                             " choices, expected " + std::to_string(count),
                         1);
  }
  return out;
}

std::vector<std::vector<double>> HttpBackend::embed_chunk(
    const std::vector<std::string>& texts, const std::string& model_id) {
  json body;
  body["model"] = model_id;
  body["input"] = texts;

  json resp = json::parse(post_json("/v1/embeddings", body.dump()), nullptr, false);
  if (resp.is_discarded() || !resp.contains("data")) {
    throw TransportError("malformed embeddings response", 1);
  }
  std::vector<std::vector<double>> out(texts.size());
  size_t filled = 0;
  for (const auto& item : resp["data"]) {
    size_t index = item.value("index", filled);
    if (index >= out.size()) continue;
    out[index] = item.value("embedding", std::vector<double>{});
    ++filled;
  }
  if (filled != texts.size()) {
    throw TransportError("embeddings response returned " + std::to_string(filled) +
                             " vectors, expected " + std::to_string(texts.size()),
                         1);
  }
  return out;
}

}  // namespace silico::gateway
