#include "silico/mock_backend.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "silico/errors.hpp"
#include "silico/sha256.hpp"
#include "silico/text.hpp"

namespace silico::gateway {

namespace {

const char* const kJustificationCue = "This is because";
const char* const kLabelingCue =
    "Please write concise, specific, and not overly broad labels";

// Valence cue the axis anchors share with the completions; everything after
// it only adds variety. The neutral tail slots give each prompt's 500 draws
// enough distinct surface forms that downstream justification prompts rarely
// collide in the text-keyed cache.
ToyConditionalModel make_completion_chain(bool positive) {
  std::vector<Distribution> steps;
  steps.push_back({{positive ? "good" : "bad", 1.0}});
  steps.push_back({{"idea", 1.0}});
  steps.push_back({{"that", 0.5}, {"which", 0.5}});
  steps.push_back({{"will", 0.6}, {"should", 0.4}});
  if (positive) {
    steps.push_back({{"help", 0.5}, {"strengthen", 0.5}});
  } else {
    steps.push_back({{"hurt", 0.5}, {"weaken", 0.5}});
  }
  steps.push_back({{"everyone", 0.4}, {"families", 0.3}, {"communities", 0.3}});
  steps.push_back({{"across", 0.5}, {"throughout", 0.5}});
  steps.push_back({{"many", 0.2},
                   {"most", 0.2},
                   {"our", 0.2},
                   {"some", 0.2},
                   {"nearby", 0.1},
                   {"local", 0.1}});
  steps.push_back({{"cities", 0.2},
                   {"towns", 0.2},
                   {"regions", 0.2},
                   {"states", 0.2},
                   {"districts", 0.1},
                   {"counties", 0.1}});
  return build_chain_model(steps);
}

// The two themes inside each sign group share no tokens, so their
// bag-of-words embeddings are (near) orthogonal and cluster cleanly.
ToyConditionalModel make_theme_chain(const std::vector<Distribution>& steps) {
  return build_chain_model(steps);
}

}  // namespace

MockBackend::MockBackend(MockConfig config) : config_(std::move(config)) {
  positive_chain_ = make_completion_chain(true);
  negative_chain_ = make_completion_chain(false);

  // favour: theme A = collective safety, theme B = individual freedom
  pos_theme_a_ = make_theme_chain({
      {{"it", 1.0}},
      {{"protects", 0.5}, {"safeguards", 0.5}},
      {{"public", 1.0}},
      {{"health", 0.6}, {"wellbeing", 0.4}},
      {{"and", 1.0}},
      {{"saves", 0.5}, {"spares", 0.5}},
      {{"lives", 1.0}},
  });
  pos_theme_b_ = make_theme_chain({
      {{"personal", 1.0}},
      {{"freedom", 0.6}, {"liberty", 0.4}},
      {{"matters", 1.0}},
      {{"more", 1.0}},
      {{"than", 1.0}},
      {{"government", 0.5}, {"federal", 0.5}},
      {{"rules", 1.0}},
  });
  // oppose: theme A = overreach, theme B = doubted benefit
  neg_theme_a_ = make_theme_chain({
      {{"mandates", 1.0}},
      {{"are", 1.0}},
      {{"government", 0.5}, {"state", 0.5}},
      {{"overreach", 0.6}, {"coercion", 0.4}},
      {{"against", 1.0}},
      {{"citizens", 1.0}},
  });
  neg_theme_b_ = make_theme_chain({
      {{"the", 1.0}},
      {{"policy", 1.0}},
      {{"would", 0.5}, {"could", 0.5}},
      {{"bring", 1.0}},
      {{"unproven", 0.6}, {"doubtful", 0.4}},
      {{"benefits", 1.0}},
  });
}

battery::Side MockBackend::detect_side(const std::string& prompt,
                                       bool& found) const {
  found = true;
  if (contains(prompt, "I am a strong liberal")) return battery::Side::liberal;
  if (contains(prompt, "I am a strong conservative"))
    return battery::Side::conservative;
  found = false;
  return battery::Side::liberal;
}

double MockBackend::planted_effect_for(const std::string& prompt) const {
  for (const auto& e : config_.effects) {
    if (!e.marker.empty() && contains(prompt, e.marker)) return e.effect;
  }
  return 0.0;
}

std::string MockBackend::render(const TokenSeq& tokens) const {
  std::string out;
  for (const auto& t : tokens) {
    out.push_back(' ');
    out += t;
  }
  out.push_back('.');
  return out;
}

std::string MockBackend::generate_completion(const std::string& prompt,
                                             int sample_index,
                                             const CompletionRequest& req) const {
  Rng rng(derive_seed(config_.seed, "complete:" + prompt + "#" +
                                        std::to_string(sample_index)));
  bool side_found = false;
  battery::Side side = detect_side(prompt, side_found);
  double effect = planted_effect_for(prompt);
  double p_positive = 0.5;
  if (side_found) {
    p_positive += (side == battery::Side::liberal ? 0.5 : -0.5) * effect;
  }
  bool positive = rng.next_double() < p_positive;
  const ToyConditionalModel& chain = positive ? positive_chain_ : negative_chain_;
  TokenSeq tokens = chain.sample_sequence(rng, size_t(req.max_tokens));
  return render(tokens);
}

std::string MockBackend::generate_justification(const std::string& prompt,
                                                int sample_index) const {
  Rng rng(derive_seed(config_.seed, "justify:" + prompt + "#" +
                                        std::to_string(sample_index)));
  bool side_found = false;
  battery::Side side = detect_side(prompt, side_found);
  // the parent completion is embedded in the prompt; its valence cue tells
  // us which sign group this justification belongs to
  bool parent_positive = contains(prompt, " good idea");
  double p_conservative_theme = side_found && side == battery::Side::conservative
                                    ? config_.justification_bias
                                    : 1.0 - config_.justification_bias;
  bool conservative_theme = rng.next_double() < p_conservative_theme;
  // favour group: freedom skews conservative, safety liberal; oppose group:
  // overreach skews conservative, doubted benefits liberal
  const ToyConditionalModel& chain =
      parent_positive ? (conservative_theme ? pos_theme_b_ : pos_theme_a_)
                      : (conservative_theme ? neg_theme_a_ : neg_theme_b_);
  TokenSeq tokens = chain.sample_sequence(rng, 32);
  return render(tokens);
}

std::string MockBackend::generate_labels(const std::string& prompt) const {
  // parse "Cluster N:" sections and label each with its dominant long token
  std::vector<std::string> sections;
  size_t pos = 0;
  while (true) {
    size_t start = prompt.find("Cluster ", pos);
    if (start == std::string::npos) break;
    size_t colon = prompt.find(':', start);
    if (colon == std::string::npos) break;
    size_t next = prompt.find("Cluster ", colon);
    size_t tail = prompt.find(kLabelingCue, colon);
    size_t end = std::min(next == std::string::npos ? prompt.size() : next,
                          tail == std::string::npos ? prompt.size() : tail);
    sections.push_back(prompt.substr(colon + 1, end - colon - 1));
    pos = colon + 1;
  }
  std::ostringstream out;
  for (size_t i = 0; i < sections.size(); ++i) {
    std::map<std::string, int> counts;
    for (const auto& tok : tokenize_words(sections[i])) {
      if (tok.size() >= 4) counts[tok]++;
    }
    std::string best = "misc";
    int best_count = 0;
    for (const auto& [tok, n] : counts) {
      if (n > best_count) {
        best = tok;
        best_count = n;
      }
    }
    out << (i + 1) << ". " << best << "\n";
  }
  return out.str();
}

std::string MockBackend::mock_complete(const CompletionRequest& req,
                                       int sample_index) const {
  std::string text;
  if (contains(req.prompt, kLabelingCue)) {
    text = generate_labels(req.prompt);
  } else if (std::string_view(req.prompt).ends_with(kJustificationCue)) {
    text = generate_justification(req.prompt, sample_index);
  } else {
    text = generate_completion(req.prompt, sample_index, req);
  }
  // stop sequences cut the text before their first occurrence
  size_t cut = std::string::npos;
  for (const auto& stop : req.stop) {
    if (stop.empty()) continue;
    size_t hit = text.find(stop);
    if (hit != std::string::npos) cut = std::min(cut, hit);
  }
  if (cut != std::string::npos) text = text.substr(0, cut);
  return text;
}

std::vector<std::string> MockBackend::complete_chunk(const CompletionRequest& req,
                                                     int first_sample, int count) {
  std::vector<std::string> out;
  out.reserve(size_t(count));
  for (int i = 0; i < count; ++i) {
    out.push_back(mock_complete(req, first_sample + i));
  }
  return out;
}

std::vector<double> MockBackend::embed_text(const std::string& text) const {
  std::vector<double> v(size_t(config_.embedding_dim), 0.0);
  for (const auto& tok : tokenize_words(text)) {
    size_t slot = size_t(sha256_prefix64(tok) % uint64_t(config_.embedding_dim));
    v[slot] += 1.0;
  }
  return v;
}

std::vector<std::vector<double>> MockBackend::embed_chunk(
    const std::vector<std::string>& texts, const std::string&) {
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed_text(t));
  return out;
}

}  // namespace silico::gateway
