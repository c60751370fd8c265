#pragma once

// Evolutionary run hyperparameters, their JSON form, and the admission-threshold rule.

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include <json.hpp>

#include "promptevo/buffer.hpp"
#include "promptevo/types.hpp"

namespace promptevo {

/// Metric by shot regime: very few labeled shots favor the smoother probabilistic metric.
struct MetricSchedule {
  MetricId low_shot = MetricId::inverse_bce;
  int low_shot_max_shots = 2;
  MetricId otherwise = MetricId::f1_macro;
};

struct CrowdingSettings {
  std::size_t batch_size = 30;
  int rounds = 3;
};

struct RunConfig {
  int generations = 500;
  std::size_t initial_population = 50;
  std::size_t selection_size = 10;
  std::size_t generation_size = 10;
  /// Explicit admission threshold; when unset it is derived from chance and the baseline.
  std::optional<double> alpha;
  std::size_t buffer_cap = 1000;
  MetricSchedule metric_schedule;
  /// Forces a metric regardless of the schedule.
  std::optional<MetricId> metric;
  SelectionStrategy selection = SelectionStrategy::roulette;
  bool cot_enabled = true;
  std::uint64_t seed = 0;
  ProbabilityCalibration calib;
  CrowdingSettings crowding;
  int checkpoint_interval = 10;
  /// Extra oracle requests after an unparseable answer.
  int parse_retries = 2;
  /// Labeled shots per class; unset means the full train split.
  std::optional<int> shots;

  /// Throws ConfigError listing every offending field.
  void validate() const;
  MetricId resolved_metric() const;
};

nlohmann::json to_json(const RunConfig& config);
/// Strict: unknown keys and wrong types raise ConfigError naming the field. Does not validate().
RunConfig run_config_from_json(const nlohmann::json& doc);
/// Stable digest of the canonical JSON form.
std::string config_hash(const RunConfig& config);

/// max(baseline fitness if any, chance level of `metric` on `labels`), unless `config.alpha` is set.
double resolve_alpha(const RunConfig& config, MetricId metric, std::span<const int> labels,
                     std::optional<double> baseline_fitness);

}  // namespace promptevo
