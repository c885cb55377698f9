#include "silico/orchestrator.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "silico/errors.hpp"
#include "silico/http_backend.hpp"
#include "silico/sha256.hpp"
#include "silico/special.hpp"
#include "silico/text.hpp"
#include "silico/version.hpp"

namespace silico::run {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// config

nlohmann::json RunConfig::to_json() const {
  json j;
  j["run_id"] = run_id;
  j["seed"] = seed;
  j["battery"] = battery::battery_to_json(battery);
  j["ground_truth"] = ground_truth_path;
  auto backend_json = [](const BackendConfig& b) {
    json out;
    out["type"] = b.type;
    out["model_id"] = b.model_id;
    if (b.type == "http") {
      out["base_url"] = b.base_url;
    } else {
      out["embedding_dim"] = b.embedding_dim;
      out["justification_bias"] = b.justification_bias;
      json effects = json::array();
      for (const auto& e : b.effects) {
        effects.push_back({{"marker", e.marker}, {"effect", e.effect}});
      }
      out["effects"] = effects;
    }
    return out;
  };
  j["completion_backend"] = backend_json(completion_backend);
  j["embedding_backend"] = backend_json(embedding_backend);
  j["labeling_backend"] = backend_json(labeling_backend);
  j["sampling"] = {{"n_samples", sampling.n_samples},
                   {"max_tokens", sampling.max_tokens},
                   {"temperature", sampling.temperature},
                   {"stop", sampling.stop}};
  json jk;
  jk["issues"] = justification.issues;
  jk["samples_per_parent"] = justification.samples_per_parent;
  jk["max_tokens"] = justification.max_tokens;
  jk["k_min"] = justification.k.k_min;
  jk["k_max"] = justification.k.k_max;
  if (justification.k.override_k) jk["k_override"] = *justification.k.override_k;
  jk["min_group"] = justification.k.min_group;
  jk["normalize"] = justification.k.normalize;
  jk["label_sample_cap"] = justification.label_sample_cap;
  j["justification"] = jk;
  j["concurrency"] = concurrency;
  return j;
}

std::string RunConfig::config_hash() const { return sha256_hex(to_json().dump()); }

namespace {

BackendConfig parse_backend(const json& j) {
  BackendConfig b;
  b.type = j.value("type", "mock");
  if (b.type != "mock" && b.type != "http") {
    throw ConfigError("backend type must be 'mock' or 'http', got '" + b.type + "'");
  }
  b.model_id = j.value("model_id", b.type == "mock" ? "toy-1" : "");
  b.base_url = j.value("base_url", "");
  b.api_key = j.value("api_key", "");
  b.embedding_dim = j.value("embedding_dim", 256);
  b.justification_bias = j.value("justification_bias", 0.8);
  if (j.contains("effects")) {
    for (const auto& e : j.at("effects")) {
      b.effects.push_back({e.at("marker"), e.at("effect")});
    }
  }
  if (b.type == "http" && b.base_url.empty()) {
    throw ConfigError("http backend requires base_url");
  }
  return b;
}

std::string resolve_path(const std::string& base_dir, const std::string& path) {
  if (path.empty() || base_dir.empty()) return path;
  fs::path p(path);
  if (p.is_absolute()) return path;
  return (fs::path(base_dir) / p).string();
}

}  // namespace

RunConfig parse_run_config(const json& j, const std::string& config_dir) {
  RunConfig c;
  try {
    c.run_id = j.value("run_id", "run");
    c.runs_dir = resolve_path(config_dir, j.value("runs_dir", "runs"));
    c.seed = j.value("seed", uint64_t(0));
    if (j.at("battery").is_string()) {
      c.battery = battery::load_battery_file(
          resolve_path(config_dir, j.at("battery").get<std::string>()));
    } else {
      c.battery = battery::parse_battery(j.at("battery"));
    }
    c.ground_truth_path = resolve_path(config_dir, j.value("ground_truth", ""));
    if (j.contains("completion_backend")) {
      c.completion_backend = parse_backend(j.at("completion_backend"));
    }
    if (j.contains("embedding_backend")) {
      c.embedding_backend = parse_backend(j.at("embedding_backend"));
    } else {
      c.embedding_backend = c.completion_backend;
    }
    if (j.contains("labeling_backend")) {
      c.labeling_backend = parse_backend(j.at("labeling_backend"));
    } else {
      c.labeling_backend = c.completion_backend;
    }
    if (j.contains("sampling")) {
      const auto& s = j.at("sampling");
      c.sampling.n_samples = s.value("n_samples", 500);
      c.sampling.max_tokens = s.value("max_tokens", 64);
      c.sampling.temperature = s.value("temperature", 1.0);
      if (s.contains("stop")) {
        c.sampling.stop = s.at("stop").get<std::vector<std::string>>();
      }
    }
    if (j.contains("justification")) {
      const auto& s = j.at("justification");
      if (s.contains("issues")) {
        c.justification.issues = s.at("issues").get<std::vector<std::string>>();
      }
      c.justification.samples_per_parent = s.value("samples_per_parent", 3);
      c.justification.max_tokens = s.value("max_tokens", 96);
      c.justification.k.k_min = s.value("k_min", 2);
      c.justification.k.k_max = s.value("k_max", 6);
      if (s.contains("k_override") && !s.at("k_override").is_null()) {
        c.justification.k.override_k = s.at("k_override").get<int>();
      }
      c.justification.k.min_group = s.value("min_group", 0);
      c.justification.k.normalize = s.value("normalize", false);
      c.justification.label_sample_cap = s.value("label_sample_cap", 100);
    }
    c.concurrency = j.value("concurrency", 8);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed run config: ") + e.what());
  }
  if (c.sampling.n_samples < 1) throw ConfigError("n_samples must be >= 1");
  if (c.justification.k.k_min < 2 ||
      c.justification.k.k_max < c.justification.k.k_min) {
    throw ConfigError("justification k range must satisfy 2 <= k_min <= k_max");
  }
  if (c.justification.samples_per_parent < 1) {
    throw ConfigError("samples_per_parent must be >= 1");
  }
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open run config: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("run config " + path + " is not valid JSON: " + e.what());
  }
  return parse_run_config(j, fs::path(path).parent_path().string());
}

// ---------------------------------------------------------------------------
// stages / manifest

std::string stage_name(Stage s) {
  switch (s) {
    case Stage::battery: return "battery";
    case Stage::complete: return "complete";
    case Stage::score: return "score";
    case Stage::regress: return "regress";
    case Stage::justify: return "justify";
    case Stage::cluster: return "cluster";
    default: return "report";
  }
}

Stage stage_from_name(const std::string& name) {
  for (Stage s : all_stages()) {
    if (stage_name(s) == name) return s;
  }
  throw ConfigError("unknown stage '" + name + "'");
}

std::vector<Stage> all_stages() {
  return {Stage::battery, Stage::complete, Stage::score, Stage::regress,
          Stage::justify, Stage::cluster, Stage::report};
}

namespace {

std::vector<Stage> prerequisites(Stage s) {
  switch (s) {
    case Stage::battery: return {};
    case Stage::complete: return {Stage::battery};
    case Stage::score: return {Stage::complete};
    case Stage::regress: return {Stage::score};
    case Stage::justify: return {Stage::score};
    case Stage::cluster: return {Stage::justify};
    default: return {Stage::regress};
  }
}

// downstream = every stage that can transitively require this one
std::vector<Stage> downstream_of(Stage s) {
  std::vector<Stage> out;
  for (Stage t : all_stages()) {
    if (t == s) continue;
    std::vector<Stage> frontier = {t};
    std::set<std::string> seen;
    bool depends = false;
    while (!frontier.empty() && !depends) {
      Stage cur = frontier.back();
      frontier.pop_back();
      for (Stage p : prerequisites(cur)) {
        if (p == s) depends = true;
        if (seen.insert(stage_name(p)).second) frontier.push_back(p);
      }
    }
    if (depends) out.push_back(t);
  }
  return out;
}

}  // namespace

bool RunManifest::stage_done(Stage s) const {
  return stages_completed.count(stage_name(s)) > 0;
}

json RunManifest::to_json() const {
  json j;
  j["run_id"] = run_id;
  j["created_at"] = created_at;
  j["tool_version"] = tool_version;
  j["root_seed"] = root_seed;
  j["battery_hash"] = battery_hash;
  j["config_hash"] = config_hash;
  j["settings"] = settings;
  j["stages_completed"] = stages_completed;
  return j;
}

RunManifest RunManifest::from_json(const json& j) {
  RunManifest m;
  m.run_id = j.value("run_id", "");
  m.created_at = j.value("created_at", "");
  m.tool_version = j.value("tool_version", "");
  m.root_seed = j.value("root_seed", uint64_t(0));
  m.battery_hash = j.value("battery_hash", "");
  m.config_hash = j.value("config_hash", "");
  if (j.contains("settings")) m.settings = j.at("settings");
  if (j.contains("stages_completed")) {
    m.stages_completed =
        j.at("stages_completed").get<std::map<std::string, std::string>>();
  }
  return m;
}

// ---------------------------------------------------------------------------
// runner

Runner::Runner(RunConfig config) : config_(std::move(config)) { open_run(); }

std::string Runner::run_dir() const {
  return (fs::path(config_.runs_dir) / config_.run_id).string();
}

namespace {

std::shared_ptr<gateway::CompletionBackend> make_completion_backend(
    const BackendConfig& b, uint64_t seed) {
  if (b.type == "http") {
    gateway::HttpConfig h;
    h.base_url = b.base_url;
    h.api_key = b.api_key;
    return std::make_shared<gateway::HttpBackend>(h);
  }
  gateway::MockConfig m;
  m.seed = seed;
  m.embedding_dim = b.embedding_dim;
  m.justification_bias = b.justification_bias;
  m.effects = b.effects;
  return std::make_shared<gateway::MockBackend>(m);
}

std::shared_ptr<gateway::EmbeddingBackend> make_embedding_backend(
    const BackendConfig& b, uint64_t seed) {
  if (b.type == "http") {
    gateway::HttpConfig h;
    h.base_url = b.base_url;
    h.api_key = b.api_key;
    return std::make_shared<gateway::HttpBackend>(h);
  }
  gateway::MockConfig m;
  m.seed = seed;
  m.embedding_dim = b.embedding_dim;
  return std::make_shared<gateway::MockBackend>(m);
}

}  // namespace

void Runner::open_run() {
  fs::create_directories(run_dir());
  std::string manifest_path = (fs::path(run_dir()) / "manifest.json").string();
  std::string bhash = battery::battery_hash(config_.battery);
  std::string chash = config_.config_hash();
  if (fs::exists(manifest_path)) {
    std::ifstream in(manifest_path);
    json j;
    in >> j;
    manifest_ = RunManifest::from_json(j);
    if (manifest_.battery_hash != bhash) {
      throw ConfigError("run '" + config_.run_id +
                        "': battery hash mismatch with manifest (got " + bhash +
                        ", manifest has " + manifest_.battery_hash +
                        "); use a fresh run id");
    }
    if (manifest_.config_hash != chash) {
      throw ConfigError("run '" + config_.run_id +
                        "': config hash mismatch with manifest; use a fresh run id");
    }
  } else {
    manifest_.run_id = config_.run_id;
    manifest_.created_at = utc_timestamp_now();
    manifest_.tool_version = kVersion;
    manifest_.root_seed = config_.seed;
    manifest_.battery_hash = bhash;
    manifest_.config_hash = chash;
    json full = config_.to_json();
    for (const char* key : {"completion_backend", "embedding_backend",
                            "labeling_backend", "sampling", "justification",
                            "concurrency"}) {
      manifest_.settings[key] = full[key];
    }
    save_manifest();
  }

  completion_store_ = std::make_shared<gateway::CompletionStore>(
      (fs::path(run_dir()) / "completions.jsonl").string());
  embedding_store_ = std::make_shared<gateway::EmbeddingStore>(
      (fs::path(run_dir()) / "embeddings.jsonl").string());

  gateway::GatewayConfig gc;
  gc.max_in_flight = config_.concurrency;
  gc.retry = config_.retry;
  gc.jitter_seed = derive_seed(config_.seed, "retry-jitter");
  uint64_t backend_seed = derive_seed(config_.seed, "mock-backend");
  completion_gateway_ = std::make_unique<gateway::Gateway>(
      make_completion_backend(config_.completion_backend, backend_seed),
      make_embedding_backend(config_.embedding_backend, backend_seed),
      completion_store_, embedding_store_, gc);
  labeling_gateway_ = std::make_unique<gateway::Gateway>(
      make_completion_backend(config_.labeling_backend, backend_seed),
      make_embedding_backend(config_.embedding_backend, backend_seed),
      completion_store_, embedding_store_, gc);
  opened_ = true;
}

void Runner::save_manifest() {
  std::ofstream out((fs::path(run_dir()) / "manifest.json").string());
  out << manifest_.to_json().dump(2) << "\n";
}

long Runner::backend_completion_calls() const {
  return completion_gateway_->completion_calls() +
         labeling_gateway_->completion_calls();
}

void Runner::run_stage(Stage stage, bool force) {
  for (Stage p : prerequisites(stage)) {
    if (!manifest_.stage_done(p)) {
      throw ConfigError("stage '" + stage_name(stage) +
                        "' requires completed stage '" + stage_name(p) + "'");
    }
  }
  if (manifest_.stage_done(stage)) {
    if (!force) return;  // idempotent no-op
    manifest_.stages_completed.erase(stage_name(stage));
    for (Stage d : downstream_of(stage)) {
      manifest_.stages_completed.erase(stage_name(d));
    }
    save_manifest();
  }
  switch (stage) {
    case Stage::battery: stage_battery(); break;
    case Stage::complete: stage_complete(); break;
    case Stage::score: stage_score(); break;
    case Stage::regress: stage_regress(); break;
    case Stage::justify: stage_justify(); break;
    case Stage::cluster: stage_cluster(); break;
    case Stage::report: stage_report(); break;
  }
  manifest_.stages_completed[stage_name(stage)] = utc_timestamp_now();
  save_manifest();
}

void Runner::run_all(bool force) {
  for (Stage s : all_stages()) run_stage(s, force);
}

// ---------------------------------------------------------------------------
// stage: battery

void Runner::stage_battery() {
  auto prompts = battery::expand_battery(config_.battery);
  {
    std::ofstream out((fs::path(run_dir()) / "battery.json").string());
    out << battery::battery_to_json(config_.battery).dump(2) << "\n";
  }
  std::ofstream out((fs::path(run_dir()) / "prompts.jsonl").string());
  for (const auto& p : prompts) {
    json j;
    j["prompt_id"] = p.prompt_id;
    j["side"] = battery::side_name(p.side);
    j["issue_id"] = p.issue_id;
    j["wording_index"] = p.wording_index;
    j["stem_id"] = p.stem_id;
    j["full_text"] = p.full_text;
    out << j.dump() << "\n";
  }
}

std::vector<battery::PromptInstance> Runner::load_prompts() const {
  std::ifstream in((fs::path(run_dir()) / "prompts.jsonl").string());
  if (!in) throw ConfigError("prompts.jsonl missing; run the battery stage first");
  std::vector<battery::PromptInstance> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    battery::PromptInstance p;
    p.prompt_id = j.at("prompt_id");
    p.side = battery::side_from_name(j.at("side"));
    p.issue_id = j.at("issue_id");
    p.wording_index = j.at("wording_index");
    p.stem_id = j.at("stem_id");
    p.full_text = j.at("full_text");
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<gateway::CompletionRequest> Runner::battery_requests(
    const std::vector<battery::PromptInstance>& prompts) const {
  std::vector<gateway::CompletionRequest> reqs;
  reqs.reserve(prompts.size());
  for (const auto& p : prompts) {
    gateway::CompletionRequest r;
    r.prompt = p.full_text;
    r.prompt_id = p.prompt_id;
    r.n_samples = config_.sampling.n_samples;
    r.max_tokens = config_.sampling.max_tokens;
    r.temperature = config_.sampling.temperature;
    r.stop = config_.sampling.stop;
    r.model_id = config_.completion_backend.model_id;
    reqs.push_back(std::move(r));
  }
  return reqs;
}

// ---------------------------------------------------------------------------
// stage: complete

void Runner::stage_complete() {
  auto prompts = load_prompts();
  auto reqs = battery_requests(prompts);
  completion_gateway_->complete_many(reqs);  // persists to completions.jsonl
}

// ---------------------------------------------------------------------------
// stage: score

void Runner::stage_score() {
  auto prompts = load_prompts();
  auto reqs = battery_requests(prompts);
  auto responses = completion_gateway_->complete_many(reqs);  // cache hits only

  const std::string& embed_model = config_.embedding_backend.model_id;

  // anchors first, then every completion text (duplicates collapse in the
  // embedding cache)
  std::map<std::string, std::pair<std::vector<std::vector<double>>,
                                  std::vector<std::vector<double>>>>
      anchor_vecs;
  for (const auto& [axis_id, spec] : config_.battery.axes) {
    auto pos = completion_gateway_->embed(spec.positive_anchors, embed_model);
    auto neg = completion_gateway_->embed(spec.negative_anchors, embed_model);
    auto& entry = anchor_vecs[axis_id];
    for (auto& v : pos) entry.first.push_back(std::move(v.values));
    for (auto& v : neg) entry.second.push_back(std::move(v.values));
  }

  long skipped_blank = 0;
  std::ofstream out((fs::path(run_dir()) / "scores.csv").string());
  out << "prompt_id,sample_index,side,issue_id,wording_index,sim_pos,sim_neg,score\n";
  for (size_t pi = 0; pi < prompts.size(); ++pi) {
    const auto& prompt = prompts[pi];
    const battery::IssueSpec* issue = config_.battery.find_issue(prompt.issue_id);
    if (!issue) throw ConfigError("prompt references unknown issue " + prompt.issue_id);
    const auto& axis_spec = config_.battery.axis_for(*issue);
    const auto& anchors = anchor_vecs.at(axis_spec.axis_id);

    std::vector<std::string> texts;
    texts.reserve(responses[pi].size());
    std::vector<const gateway::CompletionRecord*> kept;
    for (const auto& rec : responses[pi]) {
      if (trim(rec.text).empty()) {
        ++skipped_blank;  // nothing to embed; excluded and counted
        continue;
      }
      texts.push_back(rec.text);
      kept.push_back(&rec);
    }
    if (texts.empty()) continue;
    auto vecs = completion_gateway_->embed(texts, embed_model);
    for (size_t i = 0; i < kept.size(); ++i) {
      axis::AxisScore s = axis::score_against_axis(vecs[i].values, axis_spec,
                                                   anchors.first, anchors.second);
      out << prompt.prompt_id << "," << kept[i]->sample_index << ","
          << battery::side_name(prompt.side) << "," << prompt.issue_id << ","
          << prompt.wording_index << "," << format_double(s.sim_pos) << ","
          << format_double(s.sim_neg) << "," << format_double(s.score) << "\n";
    }
  }
  if (skipped_blank > 0) {
    std::cerr << "score: skipped " << skipped_blank << " blank completions\n";
  }
}

// ---------------------------------------------------------------------------
// stage: regress

namespace {

struct ScoreRow {
  std::string prompt_id;
  int sample_index;
  battery::Side side;
  std::string issue_id;
  int wording_index;
  double sim_pos;
  double sim_neg;
  double score;
};

std::vector<ScoreRow> load_scores(const std::string& run_dir) {
  std::ifstream in((fs::path(run_dir) / "scores.csv").string());
  if (!in) throw ConfigError("scores.csv missing; run the score stage first");
  std::vector<ScoreRow> out;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) cols.push_back(col);
    if (cols.size() != 8) throw ConfigError("scores.csv: malformed row: " + line);
    ScoreRow r;
    r.prompt_id = cols[0];
    r.sample_index = std::stoi(cols[1]);
    r.side = battery::side_from_name(cols[2]);
    r.issue_id = cols[3];
    r.wording_index = std::stoi(cols[4]);
    r.sim_pos = std::stod(cols[5]);
    r.sim_neg = std::stod(cols[6]);
    r.score = std::stod(cols[7]);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace

void Runner::stage_regress() {
  auto rows = load_scores(run_dir());
  // group by (issue order in battery, wording_index)
  std::map<std::pair<std::string, int>, std::pair<std::vector<double>, std::vector<double>>>
      groups;
  for (const auto& r : rows) {
    auto& g = groups[{r.issue_id, r.wording_index}];
    if (r.side == battery::Side::liberal) {
      g.first.push_back(r.score);
    } else {
      g.second.push_back(r.score);
    }
  }
  std::ofstream out((fs::path(run_dir()) / "regressions.csv").string());
  out << "issue_id,wording_index,beta,se,t_stat,p_value,n_lib,n_con,degenerate\n";
  for (const auto& issue : config_.battery.issues) {
    for (size_t w = 0; w < issue.wordings.size(); ++w) {
      auto it = groups.find({issue.issue_id, int(w)});
      if (it == groups.end()) continue;
      auto res = stats::ols_binary(it->second.first, it->second.second);
      res.issue_id = issue.issue_id;
      res.wording_index = int(w);
      out << res.issue_id << "," << res.wording_index << ","
          << format_double(res.beta) << "," << format_double(res.se) << ","
          << format_double(res.t_stat) << "," << format_double(res.p_value)
          << "," << res.n_lib << "," << res.n_con << ","
          << (res.degenerate ? 1 : 0) << "\n";
    }
  }
}

// ---------------------------------------------------------------------------
// stage: justify

namespace {

axis::Sign sign_from_name(const std::string& s) {
  if (s == "positive") return axis::Sign::positive;
  if (s == "negative") return axis::Sign::negative;
  return axis::Sign::indeterminate;
}

}  // namespace

void Runner::stage_justify() {
  auto prompts = load_prompts();
  auto rows = load_scores(run_dir());

  std::set<std::string> wanted(config_.justification.issues.begin(),
                               config_.justification.issues.end());
  auto selected = [&](const std::string& issue_id) {
    return wanted.empty() || wanted.count(issue_id) > 0;
  };
  for (const auto& w : wanted) {
    if (!config_.battery.find_issue(w)) {
      throw ConfigError("justification issue '" + w + "' is not in the battery");
    }
  }

  std::map<std::string, const battery::PromptInstance*> by_id;
  for (const auto& p : prompts) by_id[p.prompt_id] = &p;

  // completion texts again, via the cache
  auto reqs = battery_requests(prompts);
  auto responses = completion_gateway_->complete_many(reqs);
  std::map<std::pair<std::string, int>, const gateway::CompletionRecord*> completions;
  for (size_t pi = 0; pi < prompts.size(); ++pi) {
    for (const auto& rec : responses[pi]) {
      completions[{prompts[pi].prompt_id, rec.sample_index}] = &rec;
    }
  }

  justify::JustifyParams params;
  params.samples_per_parent = config_.justification.samples_per_parent;
  params.max_tokens = config_.justification.max_tokens;
  params.temperature = config_.sampling.temperature;
  params.stop = config_.sampling.stop;
  params.model_id = config_.completion_backend.model_id;

  std::ofstream out((fs::path(run_dir()) / "justifications.jsonl").string());
  for (const auto& issue : config_.battery.issues) {
    if (!selected(issue.issue_id)) continue;
    std::vector<justify::ScoredParent> parents;
    for (const auto& r : rows) {
      if (r.issue_id != issue.issue_id) continue;
      auto pit = by_id.find(r.prompt_id);
      auto cit = completions.find({r.prompt_id, r.sample_index});
      if (pit == by_id.end() || cit == completions.end()) {
        throw ConfigError("score row has no matching prompt/completion: " +
                          r.prompt_id);
      }
      justify::ScoredParent parent;
      parent.prompt_id = r.prompt_id;
      parent.sample_index = r.sample_index;
      parent.prompt_text = pit->second->full_text;
      parent.completion_text = cit->second->text;
      parent.side = r.side;
      parent.sign = axis::classify_sign(r.score);
      parents.push_back(std::move(parent));
    }
    auto records = justify::run_justifications(issue.issue_id, parents,
                                               *completion_gateway_, params,
                                               config_.embedding_backend.model_id);
    for (const auto& j : records) {
      json line;
      line["issue_id"] = j.issue_id;
      line["parent_prompt_id"] = j.parent_prompt_id;
      line["parent_sample_index"] = j.parent_sample_index;
      line["justification_index"] = j.justification_index;
      line["text"] = j.text;
      line["embedding_ref"] = j.embedding_ref;
      line["sign_group"] = axis::sign_name(j.sign_group);
      line["side"] = battery::side_name(j.side);
      out << line.dump() << "\n";
    }
  }
}

// ---------------------------------------------------------------------------
// stage: cluster

void Runner::stage_cluster() {
  std::ifstream in((fs::path(run_dir()) / "justifications.jsonl").string());
  if (!in) throw ConfigError("justifications.jsonl missing; run the justify stage first");
  std::map<std::string, std::map<std::string, std::vector<justify::JustificationRecord>>>
      by_issue_sign;
  std::map<std::string, long> indeterminate;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    justify::JustificationRecord r;
    r.issue_id = j.at("issue_id");
    r.parent_prompt_id = j.at("parent_prompt_id");
    r.parent_sample_index = j.at("parent_sample_index");
    r.justification_index = j.at("justification_index");
    r.text = j.at("text");
    r.embedding_ref = j.value("embedding_ref", "");
    r.sign_group = sign_from_name(j.at("sign_group"));
    r.side = battery::side_from_name(j.at("side"));
    if (!indeterminate.count(r.issue_id)) indeterminate[r.issue_id] = 0;
    if (r.sign_group == axis::Sign::indeterminate) {
      indeterminate[r.issue_id]++;
      continue;
    }
    by_issue_sign[r.issue_id][axis::sign_name(r.sign_group)].push_back(std::move(r));
  }

  fs::create_directories(fs::path(run_dir()) / "clusters");
  std::ofstream summary((fs::path(run_dir()) / "clusters_summary.csv").string());
  summary << "issue_id,sign_group,cluster_index,label,n_lib,n_con,prop_lib,"
             "p_vs_most_conservative,p_method\n";

  const std::string& embed_model = config_.embedding_backend.model_id;
  for (const auto& issue : config_.battery.issues) {
    auto iit = by_issue_sign.find(issue.issue_id);
    if (iit == by_issue_sign.end()) continue;
    std::string issue_text =
        issue.wordings.empty() ? issue.topic : issue.wordings.front().text;
    for (const char* sign : {"positive", "negative"}) {
      auto sit = iit->second.find(sign);
      if (sit == iit->second.end()) continue;
      const auto& group = sit->second;
      uint64_t seed = derive_seed(config_.seed,
                                  "cluster:" + issue.issue_id + ":" + sign);
      auto report = justify::cluster_sign_group(issue.issue_id,
                                                sign_from_name(sign), group,
                                                config_.justification.k,
                                                *completion_gateway_,
                                                embed_model, seed);
      if (!report.skipped) {
        justify::label_clusters(report, group, issue_text, *labeling_gateway_,
                                config_.labeling_backend.model_id, seed,
                                config_.justification.label_sample_cap);
      }

      json j;
      j["issue_id"] = report.issue_id;
      j["sign_group"] = axis::sign_name(report.sign_group);
      j["k"] = report.k;
      j["manual_k"] = report.manual_k;
      j["skipped"] = report.skipped;
      j["notice"] = report.notice;
      j["n_records"] = report.n_records;
      j["indeterminate_excluded"] = indeterminate[issue.issue_id];
      j["qualities"] = json::array();
      for (const auto& q : report.qualities) {
        j["qualities"].push_back(
            {{"k", q.k},
             {"silhouette", q.silhouette},
             {"calinski_harabasz",
              std::isinf(q.calinski_harabasz) ? json(nullptr) : json(q.calinski_harabasz)},
             {"davies_bouldin",
              std::isinf(q.davies_bouldin) ? json(nullptr) : json(q.davies_bouldin)},
             {"db_degenerate", q.db_degenerate}});
      }
      j["clusters"] = json::array();
      for (size_t c = 0; c < report.clusters.size(); ++c) {
        const auto& comp = report.clusters[c];
        json cj;
        cj["label"] = comp.label;
        cj["n_lib"] = comp.n_lib;
        cj["n_con"] = comp.n_con;
        cj["prop_lib"] = comp.prop_lib;
        if (comp.p_vs_most_conservative) {
          cj["p_vs_most_conservative"] = *comp.p_vs_most_conservative;
          cj["p_method"] = comp.p_method;
        }
        j["clusters"].push_back(std::move(cj));
        summary << issue.issue_id << "," << sign << "," << c << ","
                << csv_escape(comp.label) << "," << comp.n_lib << ","
                << comp.n_con << "," << format_double(comp.prop_lib) << ","
                << (comp.p_vs_most_conservative
                        ? format_double(*comp.p_vs_most_conservative)
                        : "")
                << "," << comp.p_method << "\n";
      }
      j["assignments"] = report.assignments;
      j["labeling_prompt"] = report.labeling_prompt;
      j["labels_fallback"] = report.labels_fallback;
      std::ofstream cf((fs::path(run_dir()) / "clusters" /
                        (issue.issue_id + "_" + sign + ".json"))
                           .string());
      cf << j.dump(2) << "\n";
    }
  }
}

// ---------------------------------------------------------------------------
// stage: report

CoefficientPlotDatum coefficient_datum(const stats::RegressionResult& r,
                                       const std::string& wording_label) {
  CoefficientPlotDatum d;
  d.issue_id = r.issue_id;
  d.wording_label = wording_label;
  d.beta = r.beta;
  d.p_value = r.p_value;
  if (r.degenerate || r.se == 0.0) {
    d.ci_low = d.ci_high = r.beta;
  } else {
    double q = stats::student_t_quantile(0.975, double(r.n_lib + r.n_con - 2));
    d.ci_low = r.beta - q * r.se;
    d.ci_high = r.beta + q * r.se;
  }
  if (r.p_value < 0.05 && r.beta > 0) {
    d.color = "blue";
  } else if (r.p_value < 0.05 && r.beta < 0) {
    d.color = "red";
  } else {
    d.color = "gray";
  }
  return d;
}

std::string csv_escape(const std::string& field) {
  bool needs_quotes = field.find_first_of(",\"\n") != std::string::npos;
  if (!needs_quotes) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

namespace {

std::vector<stats::RegressionResult> load_regressions(const std::string& run_dir) {
  std::ifstream in((fs::path(run_dir) / "regressions.csv").string());
  if (!in) throw ConfigError("regressions.csv missing; run the regress stage first");
  std::vector<stats::RegressionResult> out;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) cols.push_back(col);
    if (cols.size() != 9) throw ConfigError("regressions.csv: malformed row");
    stats::RegressionResult r;
    r.issue_id = cols[0];
    r.wording_index = std::stoi(cols[1]);
    r.beta = std::stod(cols[2]);
    r.se = std::stod(cols[3]);
    r.t_stat = std::stod(cols[4]);
    r.p_value = std::stod(cols[5]);
    r.n_lib = std::stol(cols[6]);
    r.n_con = std::stol(cols[7]);
    r.degenerate = cols[8] == "1";
    out.push_back(std::move(r));
  }
  return out;
}

struct AccuracyCell {
  long k = 0;
  long n = 0;
  void add(bool hit) {
    ++n;
    if (hit) ++k;
  }
  json to_json() const {
    json j;
    j["k"] = k;
    j["n"] = n;
    j["accuracy"] = n > 0 ? json(double(k) / double(n)) : json(nullptr);
    if (n > 0) {
      double upper = stats::binomial_test(k, n, 0.5);
      double lower = stats::binomial_test(n - k, n, 0.5);
      j["binomial_p_one_sided"] = upper;
      j["binomial_p_two_sided"] = std::min(1.0, 2.0 * std::min(upper, lower));
    } else {
      j["binomial_p_one_sided"] = nullptr;
      j["binomial_p_two_sided"] = nullptr;
    }
    return j;
  }
};

}  // namespace

void Runner::stage_report() {
  auto regressions = load_regressions(run_dir());

  std::vector<stats::GroundTruthEntry> gt_entries;
  if (!config_.ground_truth_path.empty()) {
    gt_entries = stats::load_ground_truth(config_.ground_truth_path);
  }
  auto gt = stats::ground_truth_index(gt_entries);
  std::vector<std::string> unknown_gt;
  for (const auto& e : gt_entries) {
    if (!config_.battery.find_issue(e.issue_id)) unknown_gt.push_back(e.issue_id);
  }

  // coefficients.csv, battery order
  std::map<std::pair<std::string, int>, const stats::RegressionResult*> by_key;
  for (const auto& r : regressions) by_key[{r.issue_id, r.wording_index}] = &r;
  {
    std::ofstream out((fs::path(run_dir()) / "coefficients.csv").string());
    out << "issue_id,wording_label,beta,ci_low,ci_high,p_value,color\n";
    for (const auto& issue : config_.battery.issues) {
      for (size_t w = 0; w < issue.wordings.size(); ++w) {
        auto it = by_key.find({issue.issue_id, int(w)});
        if (it == by_key.end()) continue;
        auto d = coefficient_datum(*it->second, issue.wordings[w].text);
        out << d.issue_id << "," << csv_escape(d.wording_label) << ","
            << format_double(d.beta) << "," << format_double(d.ci_low) << ","
            << format_double(d.ci_high) << "," << format_double(d.p_value)
            << "," << d.color << "\n";
      }
    }
  }

  // verdicts.csv and the three accuracy granularities
  AccuracyCell wording_acc, question_acc, topic_acc;
  AccuracyCell significant_wording_acc;
  long degenerate_count = 0;
  std::vector<std::string> unscored;
  std::map<std::string, std::pair<long, long>> topic_tally;  // correct, scored

  std::ofstream verdicts((fs::path(run_dir()) / "verdicts.csv").string());
  verdicts << "issue_id,topic,verdict,n_wordings,n_matching,n_significant_matching\n";
  for (const auto& issue : config_.battery.issues) {
    std::vector<stats::RegressionResult> wordings;
    for (const auto& r : regressions) {
      if (r.issue_id == issue.issue_id) {
        wordings.push_back(r);
        if (r.degenerate) ++degenerate_count;
      }
    }
    if (wordings.empty()) continue;
    std::optional<stats::GroundTruthEntry> truth;
    auto git = gt.find(issue.issue_id);
    if (git != gt.end()) truth = git->second;

    auto q = stats::aggregate_question(issue.issue_id, wordings, truth);
    verdicts << q.issue_id << "," << csv_escape(issue.topic) << ","
             << stats::verdict_name(q.verdict) << "," << q.n_wordings << ","
             << q.n_matching << "," << q.n_significant_matching << "\n";

    if (truth) {
      for (const auto& r : wordings) {
        auto d = stats::direction_outcome(r, truth);
        wording_acc.add(d.matches);
        if (d.significant) significant_wording_acc.add(d.matches);
      }
      question_acc.add(q.verdict == stats::QuestionVerdict::correct);
      auto& tally = topic_tally[issue.topic];
      tally.second++;
      if (q.verdict == stats::QuestionVerdict::correct) tally.first++;
    } else {
      unscored.push_back(issue.issue_id);
    }
  }
  for (const auto& [topic, tally] : topic_tally) {
    topic_acc.add(tally.first * 2 > tally.second);
  }

  json summary;
  summary["run_id"] = config_.run_id;
  summary["battery_id"] = config_.battery.battery_id;
  summary["n_prompts"] = battery::planned_sample_count(config_.battery, 1);
  summary["planned_samples"] =
      battery::planned_sample_count(config_.battery, config_.sampling.n_samples);
  summary["accuracy"]["wordings"] = wording_acc.to_json();
  summary["accuracy"]["questions"] = question_acc.to_json();
  summary["accuracy"]["topics"] = topic_acc.to_json();
  summary["accuracy"]["significant_wordings"] = significant_wording_acc.to_json();
  summary["degenerate_fits"] = degenerate_count;
  summary["unscored_questions"] = unscored;
  summary["ground_truth_without_battery_issue"] = unknown_gt;
  std::ofstream out((fs::path(run_dir()) / "summary.json").string());
  out << summary.dump(2) << "\n";
}

}  // namespace silico::run
