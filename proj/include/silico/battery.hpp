#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "silico/axis.hpp"

namespace silico::battery {

enum class Side { liberal, conservative };

std::string side_name(Side s);
Side side_from_name(const std::string& name);

enum class PromptMode { covid, validation };

std::string mode_name(PromptMode m);
PromptMode mode_from_name(const std::string& name);

// The partisan identity block prefixed to every prompt. `side` picks the
// default texts; any field can be overridden in the battery file.
struct PrimingProfile {
  Side side = Side::liberal;
  std::string ideology_label;
  std::string party;
  std::string candidate;
  std::string out_party;

  static PrimingProfile defaults(Side side);
  void validate() const;  // throws ConfigError on empty fields
};

struct StemVariant {
  std::string stem_id;
  std::string text;
};

struct WordingSpec {
  std::string text;
  std::vector<StemVariant> stems;
};

struct IssueSpec {
  std::string issue_id;
  std::string topic;
  std::string axis_ref;
  std::vector<WordingSpec> wordings;
};

struct PromptInstance {
  std::string prompt_id;
  Side side;
  std::string issue_id;
  int wording_index;
  std::string stem_id;
  std::string full_text;
};

struct BatteryConfig {
  std::string battery_id;
  PromptMode mode = PromptMode::covid;
  PrimingProfile liberal_profile = PrimingProfile::defaults(Side::liberal);
  PrimingProfile conservative_profile =
      PrimingProfile::defaults(Side::conservative);
  std::vector<IssueSpec> issues;
  std::map<std::string, axis::AxisSpec> axes;

  const PrimingProfile& profile(Side side) const {
    return side == Side::liberal ? liberal_profile : conservative_profile;
  }
  const IssueSpec* find_issue(const std::string& issue_id) const;
  const axis::AxisSpec& axis_for(const IssueSpec& issue) const;
};

// "I am a strong {ideology} and a lifelong {party}. ..."
std::string compose_priming(const PrimingProfile& profile);

// covid mode interposes the pandemic context sentence and the controversy
// sentence; validation mode keeps only the controversy sentence so the text
// never mentions COVID-19. Blocks join with a single space.
std::string compose_prompt(const PrimingProfile& profile,
                           const std::string& issue_text,
                           const StemVariant& stem, PromptMode mode);

// The middle block on its own (context + "There is a lot of controversy
// around {issue}."), used by tests to invert the concatenation.
std::string issue_block(const std::string& issue_text, PromptMode mode);

// One instance per (side x issue x wording x stem), ordered exactly that way.
// Throws ConfigError on duplicate issue ids.
std::vector<PromptInstance> expand_battery(const BatteryConfig& config);

// Battery-level call budget: |expand| * n_samples.
long planned_sample_count(const BatteryConfig& config, int n_samples);

std::string prompt_id_for(const std::string& battery_id, Side side,
                          const std::string& issue_id, int wording_index,
                          const std::string& stem_id);

BatteryConfig parse_battery(const nlohmann::json& j);
BatteryConfig load_battery_file(const std::string& path);
nlohmann::json battery_to_json(const BatteryConfig& config);

// Hash of the canonical JSON form; pinned in the run manifest.
std::string battery_hash(const BatteryConfig& config);

// Default completion stem attached when a wording lists none.
extern const char* const kDefaultStemText;

}  // namespace silico::battery
