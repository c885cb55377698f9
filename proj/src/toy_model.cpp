#include "silico/toy_model.hpp"

#include <cmath>
#include <stdexcept>

namespace silico::gateway {

namespace {

std::string join_tokens(const TokenSeq& tokens) {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

}  // namespace

void ToyConditionalModel::add_context(const TokenSeq& context,
                                      const Distribution& dist) {
  double total = 0.0;
  for (const auto& [token, p] : dist) {
    if (p < 0.0) {
      throw std::domain_error("toy model: negative probability for token '" +
                              token + "'");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::domain_error("toy model: distribution for context [" +
                            join_tokens(context) + "] sums to " +
                            std::to_string(total));
  }
  for (const auto& [token, p] : dist) {
    if (!known_.count(token)) {
      known_[token] = true;
      vocabulary_.push_back(token);
    }
  }
  table_[context] = dist;
}

bool ToyConditionalModel::has_context(const TokenSeq& context) const {
  return table_.count(context) > 0;
}

const Distribution& ToyConditionalModel::distribution(
    const TokenSeq& context) const {
  auto it = table_.find(context);
  if (it == table_.end()) {
    throw std::domain_error("toy model: no distribution for context [" +
                            join_tokens(context) + "]");
  }
  return it->second;
}

TokenSeq ToyConditionalModel::sample_sequence(Rng& rng,
                                              size_t max_tokens) const {
  TokenSeq out;
  while (out.size() < max_tokens && has_context(out)) {
    const Distribution& dist = distribution(out);
    double r = rng.next_double();
    double acc = 0.0;
    const Token* chosen = nullptr;
    for (const auto& [token, p] : dist) {
      acc += p;
      if (r < acc) {
        chosen = &token;
        break;
      }
    }
    if (!chosen) chosen = &dist.rbegin()->first;  // r landed in rounding slack
    out.push_back(*chosen);
  }
  return out;
}

double sequence_probability(const ToyConditionalModel& model,
                            const TokenSeq& tokens) {
  double prob = 1.0;
  TokenSeq context;
  for (size_t t = 0; t < tokens.size(); ++t) {
    const auto& token = tokens[t];
    if (!model.has_context(context)) {
      throw std::domain_error("sequence_probability: unknown context before position " +
                              std::to_string(t));
    }
    const Distribution& dist = model.distribution(context);
    auto it = dist.find(token);
    if (it == dist.end()) {
      throw std::domain_error("sequence_probability: token '" + token +
                              "' at position " + std::to_string(t) +
                              " not in conditional distribution");
    }
    prob *= it->second;
    context.push_back(token);
  }
  return prob;
}

ToyConditionalModel build_chain_model(const std::vector<Distribution>& steps) {
  ToyConditionalModel model;
  // enumerate every prefix reachable through the earlier steps
  std::vector<TokenSeq> contexts = {TokenSeq{}};
  for (const auto& step : steps) {
    std::vector<TokenSeq> next;
    for (const auto& ctx : contexts) {
      model.add_context(ctx, step);
      for (const auto& [token, p] : step) {
        if (p > 0.0) {
          TokenSeq extended = ctx;
          extended.push_back(token);
          next.push_back(std::move(extended));
        }
      }
    }
    contexts = std::move(next);
  }
  return model;
}

}  // namespace silico::gateway
