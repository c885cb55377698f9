#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "silico/backend.hpp"
#include "silico/battery.hpp"
#include "silico/toy_model.hpp"

namespace silico::gateway {

// One planted directional effect: applies to prompts containing `marker`.
// effect > 0 means liberal primings choose the positive-valence branch more
// often; the liberal/conservative positive rates are 0.5 +- effect/2.
struct PlantedEffect {
  std::string marker;
  double effect = 0.0;
};

struct MockConfig {
  uint64_t seed = 0;
  int embedding_dim = 256;
  // P(theme-A justification | conservative priming); liberals get 1 - bias.
  double justification_bias = 0.8;
  std::vector<PlantedEffect> effects;
};

// Deterministic offline backend: completions sampled token-by-token from toy
// conditional chains, bag-of-words embeddings, and a rule-based labeler.
// Identical (prompt, sample index, seed) always yields the identical text,
// so the whole pipeline is reproducible without any network access.
// max_tokens and stop are honored; temperature is carried in the cache key
// but does not reshape the toy distributions.
class MockBackend : public CompletionBackend, public EmbeddingBackend {
 public:
  explicit MockBackend(MockConfig config);

  std::string backend_id() const override { return "mock"; }
  int batch_limit() const override { return batch_limit_; }
  void set_batch_limit(int limit) { batch_limit_ = limit; }

  std::vector<std::string> complete_chunk(const CompletionRequest& req,
                                          int first_sample, int count) override;
  std::vector<std::vector<double>> embed_chunk(
      const std::vector<std::string>& texts, const std::string& model_id) override;

  // Single deterministic draw; what complete_chunk calls per sample.
  std::string mock_complete(const CompletionRequest& req, int sample_index) const;

  std::vector<double> embed_text(const std::string& text) const;

  double planted_effect_for(const std::string& prompt) const;
  battery::Side detect_side(const std::string& prompt, bool& found) const;

  const ToyConditionalModel& positive_chain() const { return positive_chain_; }
  const ToyConditionalModel& negative_chain() const { return negative_chain_; }

  const MockConfig& config() const { return config_; }

 private:
  std::string generate_completion(const std::string& prompt, int sample_index,
                                  const CompletionRequest& req) const;
  std::string generate_justification(const std::string& prompt,
                                     int sample_index) const;
  std::string generate_labels(const std::string& prompt) const;
  std::string render(const TokenSeq& tokens) const;

  MockConfig config_;
  int batch_limit_ = 512;
  ToyConditionalModel positive_chain_;
  ToyConditionalModel negative_chain_;
  // justification chains, per parent sign x theme
  ToyConditionalModel pos_theme_a_;
  ToyConditionalModel pos_theme_b_;
  ToyConditionalModel neg_theme_a_;
  ToyConditionalModel neg_theme_b_;
};

}  // namespace silico::gateway
