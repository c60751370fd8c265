#pragma once

// Experiment protocols around a run: few-shot sampling, the zero-shot baseline,
// learning-curve export, observation statistics, and seeded ablation grids.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "promptevo/config.hpp"
#include "promptevo/embedding.hpp"
#include "promptevo/engine.hpp"
#include "promptevo/text_embedding.hpp"

namespace promptevo {

struct FewShotSample {
  int shots = 0;
  std::uint64_t seed = 0;
  /// Selected train ids per class label.
  std::map<int, std::vector<std::string>> ids;
  /// The selected records, classes in ascending label order.
  LabeledSet sample;
  /// Train records not selected (evaluation pool when there is no val split).
  LabeledSet remainder;
};

/// Uniform per-class sample without replacement from the train split.
/// Throws InsufficientDataError naming the class when it has fewer than `shots` records.
FewShotSample sample_few_shot(const EmbeddingStore& store, int shots, std::uint64_t seed);

FitnessScore zero_shot_eval(const PromptPair& baseline, const LabeledSet& split, MetricId metric,
                            PromptEncoder& encoder, const ProbabilityCalibration& calib = {});

struct ObservationRow {
  std::string id;
  int label = 0;
  std::string observation;
  bool present = false;
};

using ObservationTable = std::vector<ObservationRow>;

/// CSV with header `id,label,observation,present`. Throws FormatError with the line number.
ObservationTable load_observations(std::istream& in);

struct ConditionalProbability {
  std::string observation;
  double probability = 0.0;
  /// Images exhibiting the observation.
  std::size_t support = 0;
  /// Of those, images of the target class.
  std::size_t matches = 0;
};

/// P(target | observation) per observation with support >= 1, sorted by probability
/// descending (then name). With a store, every id must resolve (ResolutionError).
std::vector<ConditionalProbability> conditional_probabilities(const ObservationTable& table, int target,
                                                              const EmbeddingStore* store = nullptr);

void write_conditional_csv(const std::vector<ConditionalProbability>& rows, std::ostream& out);

/// Line-delimited generation reports. Throws FormatError naming the bad line.
std::vector<GenerationReport> read_run_log(std::istream& in);
/// `generation,best_fitness,mean_fitness,kept`
void write_learning_curve(const std::vector<GenerationReport>& log, std::ostream& out);

struct AblationRun {
  std::uint64_t seed = 0;
  std::vector<GenerationReport> curve;
  std::optional<double> final_best;
  std::string error;
};

struct AblationCell {
  std::string key;
  nlohmann::json delta;
  std::vector<AblationRun> runs;
  /// Mean of final best fitness over successful runs.
  std::optional<double> mean_final_best;
};

struct AblationReport {
  std::vector<AblationCell> cells;
  const AblationCell* find(const nlohmann::json& delta) const;
};

nlohmann::json to_json(const AblationReport& report);

/// Full run for one configuration; returns its generation log.
using AblationRunner = std::function<std::vector<GenerationReport>(const RunConfig&)>;

/// Stable key of a config delta.
std::string delta_key(const nlohmann::json& delta);

/// Each delta is merge-patched onto `base`; every cell runs the same seeds. A failing
/// run is recorded in the report and the rest continue. Invalid deltas raise ConfigError
/// before anything runs.
AblationReport run_ablation(const RunConfig& base, const std::vector<nlohmann::json>& deltas,
                            const std::vector<std::uint64_t>& seeds, const AblationRunner& runner);

/// Deltas for one named axis: selection, generation_size, cot, initial_population.
std::vector<nlohmann::json> ablation_axis(const std::string& axis);

}  // namespace promptevo
