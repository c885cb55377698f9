#include "silico/gateway.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

#include "json.hpp"
#include "silico/errors.hpp"
#include "silico/sha256.hpp"
#include "silico/text.hpp"

namespace silico::gateway {

using nlohmann::json;

void CompletionRequest::validate() const {
  if (prompt.empty()) throw ConfigError("completion request: empty prompt");
  if (n_samples < 1) throw ConfigError("completion request: n_samples must be >= 1");
  if (max_tokens < 1) throw ConfigError("completion request: max_tokens must be >= 1");
  if (temperature < 0.0) throw ConfigError("completion request: temperature must be >= 0");
}

std::string params_hash_for(const CompletionRequest& req) {
  json j;
  j["model_id"] = req.model_id;
  j["max_tokens"] = req.max_tokens;
  j["temperature"] = req.temperature;
  j["stop"] = req.stop;
  return sha256_hex(j.dump()).substr(0, 16);
}

std::string completion_cache_key(const std::string& backend_id,
                                 const std::string& model_id,
                                 const std::string& prompt,
                                 const std::string& params_hash,
                                 int sample_index) {
  std::string key = "c\x1f" + backend_id + "\x1f" + model_id + "\x1f" +
                    sha256_hex(prompt) + "\x1f" + params_hash + "\x1f" +
                    std::to_string(sample_index);
  return sha256_hex(key).substr(0, 32);
}

std::string embedding_cache_key(const std::string& model_id,
                                const std::string& text) {
  return sha256_hex("e\x1f" + model_id + "\x1f" + sha256_hex(text)).substr(0, 32);
}

// ---------------------------------------------------------------------------
// stores

CompletionStore::CompletionStore(const std::string& path) : path_(path) {
  if (path_.empty()) return;
  std::ifstream in(path_);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) continue;  // torn tail line from an interrupted run
    CompletionRecord r;
    r.cache_key = j.value("cache_key", "");
    r.prompt_id = j.value("prompt_id", "");
    r.sample_index = j.value("sample_index", 0);
    r.text = j.value("text", "");
    r.backend_id = j.value("backend_id", "");
    r.model_id = j.value("model_id", "");
    r.params_hash = j.value("params_hash", "");
    r.created_at = j.value("created_at", "");
    if (!r.cache_key.empty()) by_key_[r.cache_key] = std::move(r);
  }
}

const CompletionRecord* CompletionStore::lookup(const std::string& cache_key) const {
  std::shared_lock lock(mutex_);
  auto it = by_key_.find(cache_key);
  return it == by_key_.end() ? nullptr : &it->second;
}

void CompletionStore::append(const std::vector<CompletionRecord>& records) {
  std::unique_lock lock(mutex_);
  std::ofstream out;
  if (!path_.empty()) out.open(path_, std::ios::app);
  for (const auto& r : records) {
    if (!path_.empty()) {
      json j;
      j["cache_key"] = r.cache_key;
      j["prompt_id"] = r.prompt_id;
      j["sample_index"] = r.sample_index;
      j["text"] = r.text;
      j["backend_id"] = r.backend_id;
      j["model_id"] = r.model_id;
      j["params_hash"] = r.params_hash;
      j["created_at"] = r.created_at;
      out << j.dump() << "\n";
    }
    by_key_[r.cache_key] = r;
  }
  if (!path_.empty()) out.flush();
}

size_t CompletionStore::size() const {
  std::shared_lock lock(mutex_);
  return by_key_.size();
}

EmbeddingStore::EmbeddingStore(const std::string& path) : path_(path) {
  if (path_.empty()) return;
  std::ifstream in(path_);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) continue;
    EmbeddingVector v;
    v.model_id = j.value("model_id", "");
    v.dim = j.value("dim", 0);
    v.values = j.value("values", std::vector<double>{});
    std::string key = j.value("cache_key", "");
    if (key.empty() || v.values.empty()) continue;
    if (!dim_by_model_.count(v.model_id)) dim_by_model_[v.model_id] = v.dim;
    by_key_[key] = std::move(v);
  }
}

const EmbeddingVector* EmbeddingStore::lookup(const std::string& cache_key) const {
  std::shared_lock lock(mutex_);
  auto it = by_key_.find(cache_key);
  return it == by_key_.end() ? nullptr : &it->second;
}

void EmbeddingStore::append(const std::string& cache_key, const EmbeddingVector& vec) {
  std::unique_lock lock(mutex_);
  if (!path_.empty()) {
    std::ofstream out(path_, std::ios::app);
    json j;
    j["cache_key"] = cache_key;
    j["model_id"] = vec.model_id;
    j["dim"] = vec.dim;
    j["values"] = vec.values;
    j["created_at"] = utc_timestamp_now();
    out << j.dump() << "\n";
  }
  if (!dim_by_model_.count(vec.model_id)) dim_by_model_[vec.model_id] = vec.dim;
  by_key_[cache_key] = vec;
}

int EmbeddingStore::dim_for(const std::string& model_id) const {
  std::shared_lock lock(mutex_);
  auto it = dim_by_model_.find(model_id);
  return it == dim_by_model_.end() ? 0 : it->second;
}

size_t EmbeddingStore::size() const {
  std::shared_lock lock(mutex_);
  return by_key_.size();
}

// ---------------------------------------------------------------------------
// gateway

Gateway::Gateway(std::shared_ptr<CompletionBackend> completions,
                 std::shared_ptr<EmbeddingBackend> embeddings,
                 std::shared_ptr<CompletionStore> completion_store,
                 std::shared_ptr<EmbeddingStore> embedding_store,
                 GatewayConfig config)
    : completions_(std::move(completions)),
      embeddings_(std::move(embeddings)),
      completion_store_(std::move(completion_store)),
      embedding_store_(std::move(embedding_store)),
      config_(config),
      jitter_rng_(config.jitter_seed) {}

std::vector<std::string> Gateway::call_with_retry(const CompletionRequest& req,
                                                  int first_sample, int count) {
  const RetryPolicy& policy = config_.retry;
  std::string last_error;
  for (int attempt = 1; attempt <= policy.attempts; ++attempt) {
    try {
      auto texts = completions_->complete_chunk(req, first_sample, count);
      ++completion_calls_;
      if (int(texts.size()) != count) {
        throw IntegrityError("backend returned " + std::to_string(texts.size()) +
                             " completions, expected " + std::to_string(count));
      }
      return texts;
    } catch (const TransportError& e) {
      ++completion_calls_;
      last_error = e.what();
      if (attempt == policy.attempts) break;
      long delay = long(policy.base_delay_ms) << (attempt - 1);
      delay = std::min(delay, long(policy.max_delay_ms));
      if (policy.jitter && delay > 0) {
        std::lock_guard<std::mutex> lock(jitter_mutex_);
        delay = long(jitter_rng_.next_double() * double(delay));
      }
      if (delay > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay));
    }
    // BackendError (4xx refusal) propagates: permanent, never retried
  }
  throw TransportError("completion call failed after " +
                           std::to_string(policy.attempts) + " attempts: " + last_error,
                       policy.attempts);
}

// Requests are grouped by cache identity (backend, model, prompt text,
// params), so identical prompts in one batch fetch each missing sample once.
// Chunk tasks for every group go into one pool up front (the worker count is
// the in-flight bound); results are then gathered and persisted strictly in
// first-occurrence order, which keeps completions.jsonl deterministic for a
// fixed config and seed.
std::vector<std::vector<CompletionRecord>> Gateway::complete_many(
    const std::vector<CompletionRequest>& reqs) {
  for (const auto& r : reqs) r.validate();

  struct Group {
    const CompletionRequest* exemplar = nullptr;
    std::string phash;
    std::string prompt_id;
    int max_samples = 0;
    std::vector<int> chunk_first;
    std::vector<std::future<std::vector<std::string>>> futures;
    bool persisted = false;
  };

  std::vector<Group> groups;
  std::map<std::string, size_t> group_of;  // cache identity -> groups index
  std::vector<size_t> request_group(reqs.size());
  for (size_t i = 0; i < reqs.size(); ++i) {
    const CompletionRequest& req = reqs[i];
    std::string phash = params_hash_for(req);
    std::string identity = completions_->backend_id() + "\x1f" + req.model_id +
                           "\x1f" + sha256_hex(req.prompt) + "\x1f" + phash;
    auto [it, fresh_group] = group_of.emplace(identity, groups.size());
    if (fresh_group) {
      Group g;
      g.exemplar = &req;
      g.phash = std::move(phash);
      g.prompt_id = req.prompt_id.empty() ? sha256_hex(req.prompt).substr(0, 32)
                                          : req.prompt_id;
      groups.push_back(std::move(g));
    }
    Group& g = groups[it->second];
    g.max_samples = std::max(g.max_samples, req.n_samples);
    request_group[i] = it->second;
  }

  ThreadPool pool(size_t(config_.max_in_flight));
  for (Group& g : groups) {
    const CompletionRequest* req = g.exemplar;
    int s = 0;
    while (s < g.max_samples) {
      std::string key = completion_cache_key(completions_->backend_id(),
                                             req->model_id, req->prompt, g.phash, s);
      if (completion_store_->lookup(key) != nullptr) {
        ++s;
        continue;
      }
      int begin = s;
      while (s < g.max_samples && (s - begin) < config_.completion_chunk) {
        std::string k = completion_cache_key(completions_->backend_id(),
                                             req->model_id, req->prompt, g.phash, s);
        if (completion_store_->lookup(k) != nullptr) break;
        ++s;
      }
      int count = s - begin;
      g.chunk_first.push_back(begin);
      g.futures.push_back(pool.submit(
          [this, req, begin, count] { return call_with_retry(*req, begin, count); }));
    }
  }

  std::vector<std::vector<CompletionRecord>> out;
  out.reserve(reqs.size());
  for (size_t i = 0; i < reqs.size(); ++i) {
    const CompletionRequest& req = reqs[i];
    Group& g = groups[request_group[i]];
    if (!g.persisted) {
      g.persisted = true;
      std::vector<CompletionRecord> fresh;
      for (size_t c = 0; c < g.futures.size(); ++c) {
        auto texts = g.futures[c].get();
        for (size_t k = 0; k < texts.size(); ++k) {
          CompletionRecord r;
          r.prompt_id = g.prompt_id;
          r.sample_index = g.chunk_first[c] + int(k);
          r.text = texts[k];
          r.backend_id = completions_->backend_id();
          r.model_id = req.model_id;
          r.params_hash = g.phash;
          r.created_at = utc_timestamp_now();
          r.cache_key = completion_cache_key(r.backend_id, r.model_id, req.prompt,
                                             g.phash, r.sample_index);
          fresh.push_back(std::move(r));
        }
      }
      std::sort(fresh.begin(), fresh.end(),
                [](const CompletionRecord& a, const CompletionRecord& b) {
                  return a.sample_index < b.sample_index;
                });
      if (!fresh.empty()) completion_store_->append(fresh);
    }

    std::vector<CompletionRecord> records;
    records.reserve(size_t(req.n_samples));
    for (int s = 0; s < req.n_samples; ++s) {
      std::string key = completion_cache_key(completions_->backend_id(),
                                             req.model_id, req.prompt, g.phash, s);
      const CompletionRecord* r = completion_store_->lookup(key);
      if (!r) throw IntegrityError("completion store missing sample " + std::to_string(s));
      records.push_back(*r);
    }
    out.push_back(std::move(records));
  }
  return out;
}

std::vector<CompletionRecord> Gateway::complete(const CompletionRequest& req) {
  return complete_many({req}).front();
}

std::vector<EmbeddingVector> Gateway::embed(const std::vector<std::string>& texts,
                                            const std::string& model_id) {
  if (texts.empty()) throw ConfigError("embed: no texts given");
  for (const auto& t : texts) {
    if (t.empty()) throw ConfigError("embed: empty text in batch");
  }

  // distinct uncached texts, first-occurrence order
  std::vector<std::string> missing;
  {
    std::map<std::string, bool> seen;
    for (const auto& t : texts) {
      std::string key = embedding_cache_key(model_id, t);
      if (seen.count(key)) continue;
      seen[key] = true;
      if (!embedding_store_->lookup(key)) missing.push_back(t);
    }
  }

  if (!missing.empty()) {
    size_t limit = size_t(std::max(1, embeddings_->batch_limit()));
    struct Batch {
      size_t first;
      size_t count;
    };
    std::vector<Batch> batches;
    for (size_t i = 0; i < missing.size(); i += limit) {
      batches.push_back({i, std::min(limit, missing.size() - i)});
    }
    ThreadPool pool(size_t(config_.max_in_flight));
    std::vector<std::future<std::vector<std::vector<double>>>> futures;
    futures.reserve(batches.size());
    for (const Batch& b : batches) {
      futures.push_back(pool.submit([this, &missing, b, &model_id] {
        std::vector<std::string> chunk(missing.begin() + long(b.first),
                                       missing.begin() + long(b.first + b.count));
        auto vecs = embeddings_->embed_chunk(chunk, model_id);
        ++embedding_calls_;
        if (vecs.size() != chunk.size()) {
          throw IntegrityError("embedding backend returned " +
                               std::to_string(vecs.size()) + " vectors for " +
                               std::to_string(chunk.size()) + " texts");
        }
        return vecs;
      }));
    }
    for (size_t bi = 0; bi < batches.size(); ++bi) {
      auto vecs = futures[bi].get();
      for (size_t k = 0; k < vecs.size(); ++k) {
        EmbeddingVector v;
        v.values = std::move(vecs[k]);
        v.dim = int(v.values.size());
        v.model_id = model_id;
        int pinned = embedding_store_->dim_for(model_id);
        if (pinned != 0 && pinned != v.dim) {
          throw IntegrityError("embedding dimension drift for model '" + model_id +
                               "': " + std::to_string(v.dim) + " vs pinned " +
                               std::to_string(pinned));
        }
        for (double x : v.values) {
          if (!std::isfinite(x)) {
            throw IntegrityError("non-finite embedding value from model '" +
                                 model_id + "'");
          }
        }
        const std::string& text = missing[batches[bi].first + k];
        embedding_store_->append(embedding_cache_key(model_id, text), v);
      }
    }
  }

  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    const EmbeddingVector* v = embedding_store_->lookup(embedding_cache_key(model_id, t));
    if (!v) throw IntegrityError("embedding store missing a just-fetched text");
    out.push_back(*v);
  }
  return out;
}

}  // namespace silico::gateway
