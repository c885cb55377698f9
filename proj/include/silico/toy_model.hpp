#pragma once

#include <map>
#include <string>
#include <vector>

#include "silico/rng.hpp"

namespace silico::gateway {

using Token = std::string;
using TokenSeq = std::vector<Token>;
using Distribution = std::map<Token, double>;

// A tiny autoregressive model: an explicit table from prefix context to the
// next-token distribution. Big enough to exercise the joint-probability
// arithmetic, small enough to enumerate exhaustively in tests.
class ToyConditionalModel {
 public:
  // Every distribution must sum to 1 within 1e-9 and contain no negative
  // probability; tokens are added to the vocabulary as they appear.
  void add_context(const TokenSeq& context, const Distribution& dist);

  bool has_context(const TokenSeq& context) const;
  const Distribution& distribution(const TokenSeq& context) const;
  const std::vector<Token>& vocabulary() const { return vocabulary_; }
  size_t context_count() const { return table_.size(); }

  // Walk the chain from the empty context, drawing each token from its
  // conditional distribution, until a context with no entry is reached.
  TokenSeq sample_sequence(Rng& rng, size_t max_tokens) const;

 private:
  std::map<TokenSeq, Distribution> table_;
  std::vector<Token> vocabulary_;
  std::map<Token, bool> known_;
};

// P(y_1..y_n) as the product of stepwise conditionals p(y_t | y_<t).
// Throws std::domain_error naming the offending position when a token is
// outside the vocabulary or a prefix context is missing from the table.
double sequence_probability(const ToyConditionalModel& model,
                            const TokenSeq& tokens);

// Convenience builder for straight chains with branching at each step:
// steps[t] is the distribution for the context formed by the previous
// choices, shared across all branches (the distribution at step t does not
// depend on which branch was taken earlier).
ToyConditionalModel build_chain_model(const std::vector<Distribution>& steps);

}  // namespace silico::gateway
