#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <vector>

#include "silico/backend.hpp"
#include "silico/rng.hpp"
#include "silico/thread_pool.hpp"

namespace silico::gateway {

// Append-only JSONL store under runs/<run_id>/completions.jsonl. Reload on
// open makes interrupted runs resumable; lookups are concurrent, appends
// serialized.
class CompletionStore {
 public:
  // path may be empty for a purely in-memory store (unit tests).
  explicit CompletionStore(const std::string& path);

  const CompletionRecord* lookup(const std::string& cache_key) const;
  void append(const std::vector<CompletionRecord>& records);
  size_t size() const;

 private:
  std::string path_;
  std::map<std::string, CompletionRecord> by_key_;
  mutable std::shared_mutex mutex_;
};

class EmbeddingStore {
 public:
  explicit EmbeddingStore(const std::string& path);

  const EmbeddingVector* lookup(const std::string& cache_key) const;
  void append(const std::string& cache_key, const EmbeddingVector& vec);
  // Dimension pinned by the first vector stored per model; 0 if none yet.
  int dim_for(const std::string& model_id) const;
  size_t size() const;

 private:
  std::string path_;
  std::map<std::string, EmbeddingVector> by_key_;
  std::map<std::string, int> dim_by_model_;
  mutable std::shared_mutex mutex_;
};

struct RetryPolicy {
  int attempts = 5;
  int base_delay_ms = 100;
  int max_delay_ms = 5000;
  bool jitter = true;
};

struct GatewayConfig {
  int max_in_flight = 8;
  int completion_chunk = 128;  // samples per upstream completions call
  RetryPolicy retry;
  uint64_t jitter_seed = 0;
};

// Uniform access to completion and embedding backends: content-addressed
// cache in front, retries with exponential backoff behind, bounded
// concurrency across upstream calls.
class Gateway {
 public:
  Gateway(std::shared_ptr<CompletionBackend> completions,
          std::shared_ptr<EmbeddingBackend> embeddings,
          std::shared_ptr<CompletionStore> completion_store,
          std::shared_ptr<EmbeddingStore> embedding_store,
          GatewayConfig config = {});

  // Exactly n_samples records sorted by sample_index, every one persisted
  // before return. Cached samples never touch the backend.
  std::vector<CompletionRecord> complete(const CompletionRequest& req);

  // Parallel across requests; records are persisted in request-submission
  // order so cache files are deterministic for a fixed config and seed.
  std::vector<std::vector<CompletionRecord>> complete_many(
      const std::vector<CompletionRequest>& reqs);

  // One vector per text, order preserving, batched by the backend limit,
  // cached by (model_id, text hash). Throws IntegrityError on dimension
  // drift within the run.
  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts,
                                     const std::string& model_id);

  // Upstream call counters, for tests and run reports.
  long completion_calls() const { return completion_calls_; }
  long embedding_calls() const { return embedding_calls_; }

 private:
  std::vector<std::string> call_with_retry(const CompletionRequest& req,
                                           int first_sample, int count);

  std::shared_ptr<CompletionBackend> completions_;
  std::shared_ptr<EmbeddingBackend> embeddings_;
  std::shared_ptr<CompletionStore> completion_store_;
  std::shared_ptr<EmbeddingStore> embedding_store_;
  GatewayConfig config_;
  std::atomic<long> completion_calls_{0};
  std::atomic<long> embedding_calls_{0};
  std::mutex jitter_mutex_;
  Rng jitter_rng_;
};

}  // namespace silico::gateway
