#pragma once

/// @file engine.hpp
/// The evolutionary loop: seed a population from the oracle, score it, and for each
/// generation select parents, ask the oracle for mutations, score them, and merge
/// the survivors into the buffer.
///
/// Every pair is scored exactly once, when it is generated; fitness over a fixed
/// split is deterministic, so re-scoring older pairs would change nothing.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "promptevo/buffer.hpp"
#include "promptevo/config.hpp"
#include "promptevo/embedding.hpp"
#include "promptevo/oracle.hpp"
#include "promptevo/random.hpp"
#include "promptevo/templates.hpp"
#include "promptevo/text_embedding.hpp"

namespace promptevo {

struct GenerationReport {
  int generation = 0;
  std::size_t requested = 0;
  std::size_t parsed = 0;
  std::size_t kept = 0;
  double best_fitness = 0.0;
  double mean_fitness = 0.0;
  std::size_t buffer_size = 0;
  bool skipped = false;
  std::string note;
};

nlohmann::json to_json(const GenerationReport& report);
GenerationReport generation_report_from_json(const nlohmann::json& doc);

struct InitReport {
  std::size_t requested = 0;
  std::size_t parsed = 0;
  std::size_t unique = 0;
  std::size_t admitted = 0;
  double alpha = 0.0;
};

nlohmann::json to_json(const InitReport& report);

struct EvolutionState {
  MemoryBuffer buffer;
  Rng rng;
  /// Last completed generation (0 after initialization).
  int generation = 0;
};

struct Checkpoint {
  int generation = 0;
  std::string rng_state;
  std::string config_hash;
  double alpha = 0.0;
  std::vector<ScoredPair> buffer;
};

nlohmann::json to_json(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_json(const nlohmann::json& doc);
Checkpoint make_checkpoint(const EvolutionState& state, const RunConfig& config);
EvolutionState restore_state(const Checkpoint& checkpoint, const RunConfig& config);

struct EvolutionTemplates {
  MetaPromptTemplate init = MetaPromptTemplate::builtin(TemplateKind::init);
  MetaPromptTemplate mutate = MetaPromptTemplate::builtin(TemplateKind::mutate);
};

class Evolver {
 public:
  /// `fitness_set` is the labeled set every pair is scored on (train split or few-shot sample).
  Evolver(RunConfig config, OracleClient& oracle, PromptEncoder& encoder, LabeledSet fitness_set,
          EvolutionTemplates templates = {}, std::string task_description = {});

  const RunConfig& config() const noexcept { return config_; }
  MetricId metric() const noexcept { return metric_; }
  const LabeledSet& fitness_set() const noexcept { return fitness_set_; }

  /// One init request for K0 pairs, re-requested on unparseable answers; duplicates removed.
  /// Throws InitializationError when no attempt parses.
  std::vector<PromptPair> initialize_population(InitReport* report = nullptr);

  std::vector<ScoredPair> score(std::span<const PromptPair> pairs, int generation);

  /// Initializes, scores and admits the first population. Throws InitializationError
  /// when nothing clears alpha.
  EvolutionState seed_state(double alpha, InitReport* report = nullptr);

  GenerationReport run_generation(EvolutionState& state);

 private:
  std::optional<std::vector<PromptPair>> request_pairs(const std::string& prompt, std::int64_t seed);

  RunConfig config_;
  OracleClient& oracle_;
  PromptEncoder& encoder_;
  LabeledSet fitness_set_;
  EvolutionTemplates templates_;
  std::string task_;
  MetricId metric_;
};

struct EvolutionHooks {
  std::function<void(const GenerationReport&)> on_generation;
  std::function<void(const Checkpoint&)> on_checkpoint;
};

struct EvolutionResult {
  EvolutionState state;
  std::vector<GenerationReport> log;
  std::optional<InitReport> init;
  /// True when stopped early by `halt_after`.
  bool halted = false;
};

/// Runs to `config.generations`, checkpointing every `checkpoint_interval` generations,
/// after initialization, and at termination. With `resume`, continues from that
/// checkpoint (its config hash must match). `halt_after` stops after that generation.
EvolutionResult run_evolution(Evolver& evolver, double alpha, const EvolutionHooks& hooks = {},
                              const std::optional<Checkpoint>& resume = std::nullopt,
                              std::optional<int> halt_after = std::nullopt);

}  // namespace promptevo
