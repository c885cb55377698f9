#pragma once

#include <string>
#include <vector>

#include "silico/backend.hpp"

namespace silico::gateway {

struct HttpConfig {
  std::string base_url;  // e.g. "http://localhost:8089"
  std::string api_key;   // falls back to $SILICO_API_KEY when empty
  int timeout_seconds = 120;
  int embedding_batch_limit = 512;
};

// OpenAI-compatible wire protocol: POST {base}/v1/completions and
// {base}/v1/embeddings with JSON bodies. Any endpoint speaking the same
// protocol works. Connection failures, 429 and 5xx raise TransportError
// (the gateway retries those); other 4xx raise BackendError and are final.
class HttpBackend : public CompletionBackend, public EmbeddingBackend {
 public:
  explicit HttpBackend(HttpConfig config);

  std::string backend_id() const override;
  int batch_limit() const override { return config_.embedding_batch_limit; }

  std::vector<std::string> complete_chunk(const CompletionRequest& req,
                                          int first_sample, int count) override;
  std::vector<std::vector<double>> embed_chunk(
      const std::vector<std::string>& texts, const std::string& model_id) override;

 private:
  std::string post_json(const std::string& path, const std::string& body);

  HttpConfig config_;
};

}  // namespace silico::gateway
