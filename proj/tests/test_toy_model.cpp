#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "silico/toy_model.hpp"

using namespace silico;
using namespace silico::gateway;

namespace {

// the four-step chain with the stepwise conditionals 0.339/0.715/0.958/0.578;
// each step padded with a filler token so the distribution sums to one
ToyConditionalModel four_step_chain() {
  return build_chain_model({
      {{"powerful", 0.339}, {"veto", 0.661}},
      {{"entity", 0.715}, {"check", 0.285}},
      {{"on", 0.958}, {"within", 0.042}},
      {{"the", 0.578}, {"a", 0.422}},
  });
}

}  // namespace

TEST_CASE("four-step chain multiplies to 13.4 percent") {
  auto model = four_step_chain();
  double p = sequence_probability(model, {"powerful", "entity", "on", "the"});
  CHECK(std::abs(p - 0.13416) < 1e-4);
  CHECK(std::abs(p - 0.339 * 0.715 * 0.958 * 0.578) < 1e-15);
}

TEST_CASE("single token probability is the one factor") {
  ToyConditionalModel model;
  model.add_context({}, {{"yes", 0.25}, {"no", 0.75}});
  CHECK(sequence_probability(model, {"yes"}) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("uniform model: all 27 length-3 sequences have probability 1/27") {
  // brute-force oracle: enumerate the full tree and check each path and the total
  const std::vector<Token> vocab = {"a", "b", "c"};
  Distribution uniform = {{"a", 1.0 / 3}, {"b", 1.0 / 3}, {"c", 1.0 / 3}};
  auto model = build_chain_model({uniform, uniform, uniform});

  double total = 0.0;
  for (const auto& t0 : vocab) {
    for (const auto& t1 : vocab) {
      for (const auto& t2 : vocab) {
        double p = sequence_probability(model, {t0, t1, t2});
        CHECK(p == doctest::Approx(std::pow(3.0, -3.0)).epsilon(1e-12));
        total += p;
      }
    }
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("extending a sequence never increases its probability") {
  auto model = four_step_chain();
  std::vector<Token> seq = {"powerful", "entity", "on", "the"};
  double prev = 1.0;
  for (size_t len = 1; len <= seq.size(); ++len) {
    double p = sequence_probability(model, {seq.begin(), seq.begin() + long(len)});
    CHECK(p <= prev + 1e-15);
    prev = p;
  }
}

TEST_CASE("unknown token and unknown context name the offending position") {
  auto model = four_step_chain();
  try {
    sequence_probability(model, {"powerful", "banana"});
    FAIL("expected domain_error");
  } catch (const std::domain_error& e) {
    CHECK(std::string(e.what()).find("position 1") != std::string::npos);
  }
  try {
    sequence_probability(model, {"powerful", "entity", "on", "the", "extra"});
    FAIL("expected domain_error");
  } catch (const std::domain_error& e) {
    CHECK(std::string(e.what()).find("position 4") != std::string::npos);
  }
}

TEST_CASE("distributions must sum to one within 1e-9") {
  ToyConditionalModel model;
  CHECK_THROWS_AS(model.add_context({}, {{"a", 0.5}, {"b", 0.6}}), std::domain_error);
  CHECK_THROWS_AS(model.add_context({}, {{"a", -0.1}, {"b", 1.1}}), std::domain_error);
  // within tolerance passes
  model.add_context({}, {{"a", 0.5}, {"b", 0.5 + 5e-10}});
  CHECK(model.has_context({}));
}

TEST_CASE("sampling walks the chain deterministically for a fixed stream") {
  auto model = four_step_chain();
  Rng rng(7);
  auto tokens = model.sample_sequence(rng, 16);
  CHECK(tokens.size() == 4);  // chain ends after four steps
  CHECK(sequence_probability(model, tokens) > 0.0);

  Rng rng_a(7), rng_b(7);
  CHECK(model.sample_sequence(rng_a, 16) == model.sample_sequence(rng_b, 16));
}
