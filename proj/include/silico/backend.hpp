#pragma once

#include <string>
#include <vector>

namespace silico::gateway {

struct CompletionRequest {
  std::string prompt;
  // Identity carried into records. Callers with a natural id (battery
  // prompts) set it; otherwise it defaults to a hash of the prompt text.
  std::string prompt_id;
  int max_tokens = 64;
  double temperature = 1.0;
  int n_samples = 1;
  std::vector<std::string> stop;
  std::string model_id;

  void validate() const;
};

struct CompletionRecord {
  std::string prompt_id;
  int sample_index = 0;
  std::string text;  // completion only, never echoes the prompt
  std::string backend_id;
  std::string model_id;
  std::string params_hash;
  std::string created_at;
  std::string cache_key;
};

struct EmbeddingVector {
  std::vector<double> values;
  int dim = 0;
  std::string model_id;
};

// One upstream call per invocation; the gateway owns retries, caching,
// concurrency, and ordering.
class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  virtual std::string backend_id() const = 0;
  // Texts for sample indices [first_sample, first_sample + count).
  virtual std::vector<std::string> complete_chunk(const CompletionRequest& req,
                                                  int first_sample,
                                                  int count) = 0;
};

class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  virtual std::string backend_id() const = 0;
  virtual int batch_limit() const { return 512; }
  virtual std::vector<std::vector<double>> embed_chunk(
      const std::vector<std::string>& texts, const std::string& model_id) = 0;
};

std::string params_hash_for(const CompletionRequest& req);
std::string completion_cache_key(const std::string& backend_id,
                                 const std::string& model_id,
                                 const std::string& prompt,
                                 const std::string& params_hash,
                                 int sample_index);
std::string embedding_cache_key(const std::string& model_id,
                                const std::string& text);

}  // namespace silico::gateway
