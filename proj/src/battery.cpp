#include "silico/battery.hpp"

#include <fstream>
#include <set>

#include "silico/errors.hpp"
#include "silico/sha256.hpp"
#include "silico/text.hpp"

namespace silico::battery {

const char* const kDefaultStemText = "I believe this is a";

namespace {

const char* const kPrimingTemplate =
    "I am a strong {ideology} and a lifelong {party}. In 2016, I was proud to "
    "vote for {candidate} and I think that the {out_party} have been a "
    "disaster for this country.";

const char* const kPandemicContext =
    "Lately, one of the biggest political issues has been the COVID-19 "
    "pandemic caused by the new coronavirus.";

const char* const kControversyTemplate =
    "There is a lot of controversy around {issue}.";

std::string stem_id_for(const std::string& text) {
  return sha256_hex(text).substr(0, 8);
}

}  // namespace

std::string side_name(Side s) {
  return s == Side::liberal ? "liberal" : "conservative";
}

Side side_from_name(const std::string& name) {
  if (name == "liberal") return Side::liberal;
  if (name == "conservative") return Side::conservative;
  throw ConfigError("unknown priming side '" + name + "'");
}

std::string mode_name(PromptMode m) {
  return m == PromptMode::covid ? "covid" : "validation";
}

PromptMode mode_from_name(const std::string& name) {
  if (name == "covid") return PromptMode::covid;
  if (name == "validation") return PromptMode::validation;
  throw ConfigError("unknown battery mode '" + name + "' (expected covid or validation)");
}

PrimingProfile PrimingProfile::defaults(Side side) {
  PrimingProfile p;
  p.side = side;
  if (side == Side::liberal) {
    p.ideology_label = "liberal";
    p.party = "Democrat";
    p.candidate = "Hillary Clinton";
    p.out_party = "Republicans";
  } else {
    p.ideology_label = "conservative";
    p.party = "Republican";
    p.candidate = "Donald Trump";
    p.out_party = "Democrats";
  }
  return p;
}

void PrimingProfile::validate() const {
  if (ideology_label.empty() || party.empty() || candidate.empty() ||
      out_party.empty()) {
    throw ConfigError("priming profile for side '" + side_name(side) +
                      "' has an empty field");
  }
}

const IssueSpec* BatteryConfig::find_issue(const std::string& issue_id) const {
  for (const auto& issue : issues) {
    if (issue.issue_id == issue_id) return &issue;
  }
  return nullptr;
}

const axis::AxisSpec& BatteryConfig::axis_for(const IssueSpec& issue) const {
  auto it = axes.find(issue.axis_ref);
  if (it == axes.end()) {
    throw ConfigError("issue '" + issue.issue_id + "' references unknown axis '" +
                      issue.axis_ref + "'");
  }
  return it->second;
}

std::string compose_priming(const PrimingProfile& profile) {
  profile.validate();
  std::string out = substitute(kPrimingTemplate, "ideology", profile.ideology_label);
  out = substitute(out, "party", profile.party);
  out = substitute(out, "candidate", profile.candidate);
  out = substitute(out, "out_party", profile.out_party);
  return out;
}

std::string issue_block(const std::string& issue_text, PromptMode mode) {
  std::string controversy = substitute(kControversyTemplate, "issue", issue_text);
  if (mode == PromptMode::covid) {
    return std::string(kPandemicContext) + " " + controversy;
  }
  return controversy;
}

std::string compose_prompt(const PrimingProfile& profile,
                           const std::string& issue_text,
                           const StemVariant& stem, PromptMode mode) {
  if (issue_text.empty()) throw ConfigError("empty issue text");
  if (stem.text.empty()) throw ConfigError("empty completion stem");
  char last = stem.text.back();
  if (last == '.' || last == '!' || last == '?') {
    throw ConfigError("completion stem '" + stem.text +
                      "' must not end in sentence-terminating punctuation");
  }
  return compose_priming(profile) + " " + issue_block(issue_text, mode) + " " +
         stem.text;
}

std::string prompt_id_for(const std::string& battery_id, Side side,
                          const std::string& issue_id, int wording_index,
                          const std::string& stem_id) {
  // canonical tuple; field separator cannot occur in ids
  std::string key = battery_id + "\x1f" + side_name(side) + "\x1f" + issue_id +
                    "\x1f" + std::to_string(wording_index) + "\x1f" + stem_id;
  return sha256_hex(key).substr(0, 32);
}

std::vector<PromptInstance> expand_battery(const BatteryConfig& config) {
  if (config.issues.empty()) throw ConfigError("battery has no issues");
  std::set<std::string> seen;
  for (const auto& issue : config.issues) {
    if (!seen.insert(issue.issue_id).second) {
      throw ConfigError("duplicate issue_id '" + issue.issue_id + "' in battery '" +
                        config.battery_id + "'");
    }
    if (issue.wordings.empty()) {
      throw ConfigError("issue '" + issue.issue_id + "' has no wordings");
    }
  }
  std::vector<PromptInstance> out;
  for (Side side : {Side::liberal, Side::conservative}) {
    const PrimingProfile& profile = config.profile(side);
    for (const auto& issue : config.issues) {
      for (size_t w = 0; w < issue.wordings.size(); ++w) {
        const auto& wording = issue.wordings[w];
        for (const auto& stem : wording.stems) {
          PromptInstance inst;
          inst.side = side;
          inst.issue_id = issue.issue_id;
          inst.wording_index = int(w);
          inst.stem_id = stem.stem_id;
          inst.prompt_id = prompt_id_for(config.battery_id, side, issue.issue_id,
                                         int(w), stem.stem_id);
          inst.full_text = compose_prompt(profile, wording.text, stem, config.mode);
          out.push_back(std::move(inst));
        }
      }
    }
  }
  return out;
}

long planned_sample_count(const BatteryConfig& config, int n_samples) {
  long prompts = 0;
  for (const auto& issue : config.issues) {
    for (const auto& wording : issue.wordings) {
      prompts += long(wording.stems.size());
    }
  }
  return 2 * prompts * n_samples;
}

namespace {

PrimingProfile parse_profile(Side side, const nlohmann::json& j) {
  PrimingProfile p = PrimingProfile::defaults(side);
  if (j.contains("ideology_label")) p.ideology_label = j.at("ideology_label");
  if (j.contains("party")) p.party = j.at("party");
  if (j.contains("candidate")) p.candidate = j.at("candidate");
  if (j.contains("out_party")) p.out_party = j.at("out_party");
  p.validate();
  return p;
}

std::vector<StemVariant> parse_stems(const nlohmann::json& j) {
  std::vector<StemVariant> stems;
  for (const auto& s : j) {
    StemVariant v;
    if (s.is_string()) {
      v.text = s.get<std::string>();
      v.stem_id = stem_id_for(v.text);
    } else {
      v.text = s.at("text");
      v.stem_id = s.contains("id") ? std::string(s.at("id")) : stem_id_for(v.text);
    }
    stems.push_back(std::move(v));
  }
  return stems;
}

}  // namespace

BatteryConfig parse_battery(const nlohmann::json& j) {
  BatteryConfig c;
  try {
    c.battery_id = j.at("battery_id");
    if (j.contains("mode")) c.mode = mode_from_name(j.at("mode"));
    if (j.contains("primings")) {
      const auto& p = j.at("primings");
      if (p.contains("liberal"))
        c.liberal_profile = parse_profile(Side::liberal, p.at("liberal"));
      if (p.contains("conservative"))
        c.conservative_profile =
            parse_profile(Side::conservative, p.at("conservative"));
    }
    if (j.contains("axes")) {
      for (const auto& [axis_id, spec] : j.at("axes").items()) {
        axis::AxisSpec a;
        a.axis_id = axis_id;
        for (const auto& s : spec.at("positive")) a.positive_anchors.push_back(s);
        for (const auto& s : spec.at("negative")) a.negative_anchors.push_back(s);
        a.validate();
        c.axes[axis_id] = std::move(a);
      }
    }
    for (const auto& issue_json : j.at("issues")) {
      IssueSpec issue;
      issue.issue_id = issue_json.at("issue_id");
      issue.topic = issue_json.value("topic", issue.issue_id);
      issue.axis_ref = issue_json.value("axis_ref", "default");
      for (const auto& w : issue_json.at("wordings")) {
        WordingSpec wording;
        if (w.is_string()) {
          wording.text = w.get<std::string>();
        } else {
          wording.text = w.at("text");
          if (w.contains("stems")) wording.stems = parse_stems(w.at("stems"));
        }
        if (wording.text.empty()) {
          throw ConfigError("issue '" + issue.issue_id + "' has an empty wording");
        }
        if (wording.stems.empty()) {
          wording.stems.push_back(
              {stem_id_for(kDefaultStemText), kDefaultStemText});
        }
        issue.wordings.push_back(std::move(wording));
      }
      c.issues.push_back(std::move(issue));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed battery config: ") + e.what());
  }
  return c;
}

BatteryConfig load_battery_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open battery file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("battery file " + path + " is not valid JSON: " + e.what());
  }
  return parse_battery(j);
}

nlohmann::json battery_to_json(const BatteryConfig& config) {
  nlohmann::json j;
  j["battery_id"] = config.battery_id;
  j["mode"] = mode_name(config.mode);
  for (Side side : {Side::liberal, Side::conservative}) {
    const auto& p = config.profile(side);
    j["primings"][side_name(side)] = {{"ideology_label", p.ideology_label},
                                      {"party", p.party},
                                      {"candidate", p.candidate},
                                      {"out_party", p.out_party}};
  }
  for (const auto& [axis_id, a] : config.axes) {
    j["axes"][axis_id] = {{"positive", a.positive_anchors},
                          {"negative", a.negative_anchors}};
  }
  j["issues"] = nlohmann::json::array();
  for (const auto& issue : config.issues) {
    nlohmann::json ij;
    ij["issue_id"] = issue.issue_id;
    ij["topic"] = issue.topic;
    ij["axis_ref"] = issue.axis_ref;
    ij["wordings"] = nlohmann::json::array();
    for (const auto& w : issue.wordings) {
      nlohmann::json wj;
      wj["text"] = w.text;
      wj["stems"] = nlohmann::json::array();
      for (const auto& s : w.stems) {
        wj["stems"].push_back({{"id", s.stem_id}, {"text", s.text}});
      }
      ij["wordings"].push_back(std::move(wj));
    }
    j["issues"].push_back(std::move(ij));
  }
  return j;
}

std::string battery_hash(const BatteryConfig& config) {
  return sha256_hex(battery_to_json(config).dump());
}

}  // namespace silico::battery
