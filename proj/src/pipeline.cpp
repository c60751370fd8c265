#include "promptevo/pipeline.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "promptevo/errors.hpp"
#include "promptevo/synthetic.hpp"

namespace promptevo {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string env_or_empty(const char* name) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : std::string();
}

std::string resolve(const std::string& base_dir, const std::string& path) {
  if (path.empty()) return path;
  fs::path p(path);
  if (p.is_relative()) p = fs::path(base_dir) / p;
  return p.lexically_normal().string();
}

template <typename T>
T field(const json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key) || obj[key].is_null()) return fallback;
  try {
    return obj[key].get<T>();
  } catch (const json::exception& e) {
    throw ConfigError({where + key}, "config field '" + where + key + "': " + e.what());
  }
}

PromptPair read_pair(const json& obj, const std::string& where) {
  if (!obj.is_object()) throw ConfigError({where}, where + " must be an object");
  PromptPair p{field<std::string>(obj, "negative", "", where + "."), field<std::string>(obj, "positive", "", where + ".")};
  if (p.negative.empty() || p.positive.empty()) {
    throw ConfigError({where}, where + " needs non-empty negative and positive texts");
  }
  return p;
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw ConfigError({where + it.key()}, "unknown config field '" + where + it.key() + "'");
  }
}

MetaPromptTemplate load_template(const std::map<std::string, std::string>& paths, TemplateKind kind) {
  const auto it = paths.find(std::string(to_string(kind)));
  if (it == paths.end()) return MetaPromptTemplate::builtin(kind);
  return MetaPromptTemplate::from_file(kind, it->second);
}

}  // namespace

EvolutionTemplates RunSettings::evolution_templates() const {
  EvolutionTemplates t{load_template(template_paths, TemplateKind::init),
                       load_template(template_paths, TemplateKind::mutate)};
  t.mutate.cot_enabled = run.cot_enabled;
  return t;
}

MetaPromptTemplate RunSettings::crowd_template() const { return load_template(template_paths, TemplateKind::crowd); }

RunSettings settings_from_json(const json& doc, const std::string& base_dir) {
  if (!doc.is_object()) throw ConfigError({"<root>"}, "settings must be a JSON object");
  reject_unknown(doc, {"run", "task_description", "baseline_pair", "templates", "oracle", "embedder"}, "");
  RunSettings s;
  if (doc.contains("run")) s.run = run_config_from_json(doc["run"]);
  s.task_description = field<std::string>(doc, "task_description", "", "");
  if (doc.contains("baseline_pair") && !doc["baseline_pair"].is_null()) {
    s.baseline_pair = read_pair(doc["baseline_pair"], "baseline_pair");
  }
  if (doc.contains("templates")) {
    const auto& t = doc["templates"];
    if (!t.is_object()) throw ConfigError({"templates"}, "templates must be an object");
    reject_unknown(t, {"init", "mutate", "crowd"}, "templates.");
    for (auto it = t.begin(); it != t.end(); ++it) {
      if (!it.value().is_string()) throw ConfigError({"templates." + it.key()}, "template path must be a string");
      s.template_paths[it.key()] = resolve(base_dir, it.value().get<std::string>());
    }
  }
  if (doc.contains("oracle")) {
    const auto& o = doc["oracle"];
    if (!o.is_object()) throw ConfigError({"oracle"}, "oracle must be an object");
    reject_unknown(o, {"kind", "url", "timeout_ms", "max_tokens", "params", "retry", "synthetic", "fixture"},
                   "oracle.");
    s.oracle.kind = field<std::string>(o, "kind", "synthetic", "oracle.");
    s.oracle.url = field<std::string>(o, "url", "", "oracle.");
    s.oracle.timeout = std::chrono::milliseconds(field<long long>(o, "timeout_ms", 300'000, "oracle."));
    s.oracle.max_tokens = field<int>(o, "max_tokens", 4096, "oracle.");
    if (o.contains("params")) s.oracle.params = o["params"];
    if (o.contains("retry")) {
      const auto& r = o["retry"];
      reject_unknown(r, {"max_attempts", "initial_backoff_ms", "backoff_multiplier", "max_prompt_chars"},
                     "oracle.retry.");
      s.oracle.retry.max_attempts = field<int>(r, "max_attempts", 3, "oracle.retry.");
      s.oracle.retry.initial_backoff =
          std::chrono::milliseconds(field<long long>(r, "initial_backoff_ms", 500, "oracle.retry."));
      s.oracle.retry.backoff_multiplier = field<double>(r, "backoff_multiplier", 2.0, "oracle.retry.");
      s.oracle.retry.max_prompt_chars = field<std::size_t>(r, "max_prompt_chars", 200'000, "oracle.retry.");
    }
    if (o.contains("synthetic")) {
      const auto& syn = o["synthetic"];
      reject_unknown(syn, {"target", "pull", "noise", "init_noise", "merge_threshold"}, "oracle.synthetic.");
      if (syn.contains("target")) s.oracle.synthetic.target = read_pair(syn["target"], "oracle.synthetic.target");
      auto& so = s.oracle.synthetic;
      so.pull = field<double>(syn, "pull", so.pull, "oracle.synthetic.");
      so.noise = field<double>(syn, "noise", so.noise, "oracle.synthetic.");
      so.init_noise = field<double>(syn, "init_noise", so.init_noise, "oracle.synthetic.");
      so.merge_threshold = field<double>(syn, "merge_threshold", so.merge_threshold, "oracle.synthetic.");
    }
    s.oracle.fixture_path = resolve(base_dir, field<std::string>(o, "fixture", "", "oracle."));
  }
  if (doc.contains("embedder")) {
    const auto& e = doc["embedder"];
    if (!e.is_object()) throw ConfigError({"embedder"}, "embedder must be an object");
    reject_unknown(e, {"kind", "url", "timeout_ms"}, "embedder.");
    s.embedder.kind = field<std::string>(e, "kind", "synthetic", "embedder.");
    s.embedder.url = field<std::string>(e, "url", "", "embedder.");
    s.embedder.timeout = std::chrono::milliseconds(field<long long>(e, "timeout_ms", 60'000, "embedder."));
  }

  std::vector<std::string> bad;
  if (s.oracle.kind != "http" && s.oracle.kind != "synthetic" && s.oracle.kind != "fixture") bad.push_back("oracle.kind");
  if (s.oracle.kind == "http" && s.oracle.url.empty()) bad.push_back("oracle.url");
  if (s.oracle.kind == "fixture" && s.oracle.fixture_path.empty()) bad.push_back("oracle.fixture");
  if (s.oracle.kind == "synthetic" && s.oracle.synthetic.target.negative.empty()) bad.push_back("oracle.synthetic.target");
  if (s.oracle.retry.max_attempts < 1) bad.push_back("oracle.retry.max_attempts");
  if (s.embedder.kind != "http" && s.embedder.kind != "synthetic") bad.push_back("embedder.kind");
  if (s.embedder.kind == "http" && s.embedder.url.empty()) bad.push_back("embedder.url");
  if (!bad.empty()) {
    std::string what = "invalid endpoint settings:";
    for (const auto& b : bad) what += " " + b;
    throw ConfigError(bad, what);
  }
  return s;
}

RunSettings load_settings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read config '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError({"<root>"}, "config '" + path + "' is not valid JSON: " + e.what());
  }
  const auto base = fs::absolute(fs::path(path)).parent_path().string();
  return settings_from_json(doc, base);
}

json to_json(const RunSettings& s) {
  json j;
  j["run"] = to_json(s.run);
  j["task_description"] = s.task_description;
  j["baseline_pair"] = s.baseline_pair
                           ? json{{"negative", s.baseline_pair->negative}, {"positive", s.baseline_pair->positive}}
                           : json(nullptr);
  j["templates"] = s.template_paths;
  json oracle = {{"kind", s.oracle.kind},
                 {"timeout_ms", s.oracle.timeout.count()},
                 {"max_tokens", s.oracle.max_tokens},
                 {"params", s.oracle.params},
                 {"retry",
                  {{"max_attempts", s.oracle.retry.max_attempts},
                   {"initial_backoff_ms", s.oracle.retry.initial_backoff.count()},
                   {"backoff_multiplier", s.oracle.retry.backoff_multiplier},
                   {"max_prompt_chars", s.oracle.retry.max_prompt_chars}}}};
  if (!s.oracle.url.empty()) oracle["url"] = s.oracle.url;
  if (!s.oracle.fixture_path.empty()) oracle["fixture"] = s.oracle.fixture_path;
  if (s.oracle.kind == "synthetic") {
    const auto& so = s.oracle.synthetic;
    oracle["synthetic"] = {{"target", {{"negative", so.target.negative}, {"positive", so.target.positive}}},
                           {"pull", so.pull},
                           {"noise", so.noise},
                           {"init_noise", so.init_noise},
                           {"merge_threshold", so.merge_threshold}};
  }
  j["oracle"] = std::move(oracle);
  json embedder = {{"kind", s.embedder.kind}, {"timeout_ms", s.embedder.timeout.count()}};
  if (!s.embedder.url.empty()) embedder["url"] = s.embedder.url;
  j["embedder"] = std::move(embedder);
  return j;
}

std::shared_ptr<OracleEndpoint> make_endpoint(const OracleSettings& settings, std::size_t dim) {
  if (settings.kind == "http") {
    return std::make_shared<HttpOracleEndpoint>(settings.url, env_or_empty("ORACLE_API_KEY"), settings.timeout);
  }
  if (settings.kind == "fixture") {
    std::ifstream in(settings.fixture_path);
    if (!in) throw InputError("cannot read oracle fixture '" + settings.fixture_path + "'");
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      throw InputError("oracle fixture '" + settings.fixture_path + "' is not valid JSON: " + e.what());
    }
    return std::make_shared<FixtureOracle>(FixtureOracle::responses_from_json(doc));
  }
  if (settings.kind == "synthetic") {
    auto options = settings.synthetic;
    options.dim = dim;
    return std::make_shared<SyntheticOracle>(options);
  }
  throw ConfigError({"oracle.kind"}, "unknown oracle kind '" + settings.kind + "'");
}

std::shared_ptr<TextEmbedder> make_embedder(const EmbedderSettings& settings, std::size_t dim) {
  if (settings.kind == "http") {
    return std::make_shared<HttpTextEmbedder>(settings.url, env_or_empty("EMBED_API_KEY"), settings.timeout);
  }
  if (settings.kind == "synthetic") return std::make_shared<synthetic::SyntheticTextEmbedder>(dim);
  throw ConfigError({"embedder.kind"}, "unknown embedder kind '" + settings.kind + "'");
}

OfflineRun evolve_offline(const RunConfig& config, const EmbeddingStore& store, const PromptPair& target,
                          SyntheticOracleOptions oracle_options, const EvolutionHooks& hooks,
                          const std::optional<Checkpoint>& resume, std::optional<int> halt_after) {
  oracle_options.target = target;
  oracle_options.dim = store.dim();
  oracle_options.seed = config.seed;
  auto transcript = std::make_shared<TranscriptLog>();
  OracleClient client(std::make_shared<SyntheticOracle>(oracle_options), RetryPolicy{}, transcript);
  PromptEncoder encoder(std::make_shared<synthetic::SyntheticTextEmbedder>(store.dim()), store.dim());
  auto train = store.split(Split::train);
  Evolver evolver(config, client, encoder, train);
  const double alpha = resolve_alpha(config, evolver.metric(), train.labels, std::nullopt);
  auto result = run_evolution(evolver, alpha, hooks, resume, halt_after);
  return {std::move(result), alpha, evolver.metric(), transcript};
}

}  // namespace promptevo
