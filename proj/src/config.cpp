#include "promptevo/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "promptevo/errors.hpp"
#include "promptevo/metrics.hpp"
#include "promptevo/random.hpp"

namespace promptevo {

using nlohmann::json;

void RunConfig::validate() const {
  std::vector<std::string> bad;
  std::string detail;
  auto check = [&](bool ok, const char* field, const char* rule) {
    if (ok) return;
    bad.emplace_back(field);
    if (!detail.empty()) detail += "; ";
    detail += std::string(field) + " " + rule;
  };
  check(generations >= 1, "generations", "must be >= 1");
  check(initial_population >= 1, "initial_population", "must be >= 1");
  check(selection_size >= 1 && selection_size <= buffer_cap, "selection_size", "must be in [1, buffer_cap]");
  check(generation_size >= 1, "generation_size", "must be >= 1");
  check(buffer_cap >= 1, "buffer_cap", "must be >= 1");
  check(!alpha || std::isfinite(*alpha), "alpha", "must be finite");
  check(crowding.batch_size >= 2, "crowding.batch_size", "must be >= 2");
  check(crowding.rounds >= 1, "crowding.rounds", "must be >= 1");
  check(calib.temperature > 0.0 && std::isfinite(calib.temperature), "calibration.temperature", "must be > 0");
  check(checkpoint_interval >= 1, "checkpoint_interval", "must be >= 1");
  check(parse_retries >= 0, "parse_retries", "must be >= 0");
  check(!shots || *shots >= 1, "shots", "must be >= 1");
  check(metric_schedule.low_shot_max_shots >= 0, "metric_schedule.low_shot_max_shots", "must be >= 0");
  if (!bad.empty()) throw ConfigError(bad, "invalid run config: " + detail);
}

MetricId RunConfig::resolved_metric() const {
  if (metric) return *metric;
  if (shots && *shots <= metric_schedule.low_shot_max_shots) return metric_schedule.low_shot;
  return metric_schedule.otherwise;
}

json to_json(const RunConfig& c) {
  json j;
  j["generations"] = c.generations;
  j["initial_population"] = c.initial_population;
  j["selection_size"] = c.selection_size;
  j["generation_size"] = c.generation_size;
  j["alpha"] = c.alpha ? json(*c.alpha) : json(nullptr);
  j["buffer_cap"] = c.buffer_cap;
  j["metric_schedule"] = {{"low_shot", to_string(c.metric_schedule.low_shot)},
                          {"low_shot_max_shots", c.metric_schedule.low_shot_max_shots},
                          {"otherwise", to_string(c.metric_schedule.otherwise)}};
  j["metric"] = c.metric ? json(to_string(*c.metric)) : json(nullptr);
  j["selection"] = to_string(c.selection);
  j["cot_enabled"] = c.cot_enabled;
  j["seed"] = c.seed;
  j["calibration"] = {{"temperature", c.calib.temperature}};
  j["crowding"] = {{"batch_size", c.crowding.batch_size}, {"rounds", c.crowding.rounds}};
  j["checkpoint_interval"] = c.checkpoint_interval;
  j["parse_retries"] = c.parse_retries;
  j["shots"] = c.shots ? json(*c.shots) : json(nullptr);
  return j;
}

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& prefix) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!known.count(it.key())) {
      throw ConfigError({prefix + it.key()}, "unknown config field '" + prefix + it.key() + "'");
    }
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& prefix = {}) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError({prefix + key}, "config field '" + prefix + key + "': " + e.what());
  }
}

template <typename T>
void read_optional(const json& obj, const char* key, std::optional<T>& out) {
  if (!obj.contains(key)) return;
  if (obj.at(key).is_null()) {
    out.reset();
    return;
  }
  T value{};
  read(obj, key, value);
  out = value;
}

template <typename E, typename Parse>
void read_enum(const json& obj, const char* key, E& out, Parse parse, const std::string& prefix = {}) {
  if (!obj.contains(key)) return;
  std::string text;
  read(obj, key, text, prefix);
  try {
    out = parse(text);
  } catch (const Error& e) {
    throw ConfigError({prefix + key}, "config field '" + prefix + key + "': " + e.what());
  }
}

}  // namespace

RunConfig run_config_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError({"run"}, "run config must be a JSON object");
  reject_unknown(doc,
                 {"generations", "initial_population", "selection_size", "generation_size", "alpha", "buffer_cap",
                  "metric_schedule", "metric", "selection", "cot_enabled", "seed", "calibration", "crowding",
                  "checkpoint_interval", "parse_retries", "shots"},
                 "");
  RunConfig c;
  // Sizes are read signed so a negative value is reported instead of wrapping.
  auto read_size = [&](const char* key, std::size_t& out) {
    if (!doc.contains(key)) return;
    long long v = 0;
    read(doc, key, v);
    if (v < 0) throw ConfigError({key}, std::string("config field '") + key + "' must be non-negative");
    out = static_cast<std::size_t>(v);
  };
  read(doc, "generations", c.generations);
  read_size("initial_population", c.initial_population);
  read_size("selection_size", c.selection_size);
  read_size("generation_size", c.generation_size);
  read_optional(doc, "alpha", c.alpha);
  read_size("buffer_cap", c.buffer_cap);
  if (doc.contains("metric_schedule")) {
    const auto& ms = doc["metric_schedule"];
    if (!ms.is_object()) throw ConfigError({"metric_schedule"}, "metric_schedule must be an object");
    reject_unknown(ms, {"low_shot", "low_shot_max_shots", "otherwise"}, "metric_schedule.");
    read_enum(ms, "low_shot", c.metric_schedule.low_shot, parse_metric, "metric_schedule.");
    read(ms, "low_shot_max_shots", c.metric_schedule.low_shot_max_shots, "metric_schedule.");
    read_enum(ms, "otherwise", c.metric_schedule.otherwise, parse_metric, "metric_schedule.");
  }
  if (doc.contains("metric") && !doc["metric"].is_null()) {
    MetricId m{};
    read_enum(doc, "metric", m, parse_metric);
    c.metric = m;
  }
  read_enum(doc, "selection", c.selection, parse_selection);
  read(doc, "cot_enabled", c.cot_enabled);
  read(doc, "seed", c.seed);
  if (doc.contains("calibration")) {
    const auto& cal = doc["calibration"];
    if (!cal.is_object()) throw ConfigError({"calibration"}, "calibration must be an object");
    reject_unknown(cal, {"temperature"}, "calibration.");
    read(cal, "temperature", c.calib.temperature, "calibration.");
  }
  if (doc.contains("crowding")) {
    const auto& cr = doc["crowding"];
    if (!cr.is_object()) throw ConfigError({"crowding"}, "crowding must be an object");
    reject_unknown(cr, {"batch_size", "rounds"}, "crowding.");
    long long batch = static_cast<long long>(c.crowding.batch_size);
    read(cr, "batch_size", batch, "crowding.");
    if (batch < 0) throw ConfigError({"crowding.batch_size"}, "crowding.batch_size must be non-negative");
    c.crowding.batch_size = static_cast<std::size_t>(batch);
    read(cr, "rounds", c.crowding.rounds, "crowding.");
  }
  read(doc, "checkpoint_interval", c.checkpoint_interval);
  read(doc, "parse_retries", c.parse_retries);
  read_optional(doc, "shots", c.shots);
  return c;
}

std::string config_hash(const RunConfig& config) { return to_hex(fnv1a(to_json(config).dump())); }

double resolve_alpha(const RunConfig& config, MetricId metric, std::span<const int> labels,
                     std::optional<double> baseline_fitness) {
  if (config.alpha) return *config.alpha;
  const double chance = chance_level(metric, labels);
  return baseline_fitness ? std::max(*baseline_fitness, chance) : chance;
}

}  // namespace promptevo
