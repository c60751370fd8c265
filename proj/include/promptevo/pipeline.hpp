#pragma once

// Glue between a settings document and the library: endpoint factories, template
// loading, and an in-process offline run used by the CLI, tests and bindings.

#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "promptevo/config.hpp"
#include "promptevo/engine.hpp"
#include "promptevo/mock_oracle.hpp"
#include "promptevo/oracle.hpp"
#include "promptevo/templates.hpp"
#include "promptevo/text_embedding.hpp"

namespace promptevo {

struct OracleSettings {
  /// "http", "synthetic" or "fixture"
  std::string kind = "synthetic";
  std::string url;
  std::chrono::milliseconds timeout{300'000};
  int max_tokens = 4096;
  nlohmann::json params = nlohmann::json::object();
  RetryPolicy retry;
  SyntheticOracleOptions synthetic;
  std::string fixture_path;
};

struct EmbedderSettings {
  /// "http" or "synthetic"
  std::string kind = "synthetic";
  std::string url;
  std::chrono::milliseconds timeout{60'000};
};

/// A complete run description: hyperparameters plus everything needed to reach the models.
/// API keys never live here; they come from ORACLE_API_KEY and EMBED_API_KEY.
struct RunSettings {
  RunConfig run;
  std::string task_description;
  std::optional<PromptPair> baseline_pair;
  /// Absolute template paths; a missing kind uses the built-in template.
  std::map<std::string, std::string> template_paths;
  OracleSettings oracle;
  EmbedderSettings embedder;

  EvolutionTemplates evolution_templates() const;
  MetaPromptTemplate crowd_template() const;
};

/// Relative template and fixture paths resolve against `base_dir`. Throws ConfigError.
RunSettings settings_from_json(const nlohmann::json& doc, const std::string& base_dir);
/// Reads and parses a settings file (I/O problems throw InputError, content problems ConfigError).
RunSettings load_settings(const std::string& path);
nlohmann::json to_json(const RunSettings& settings);

/// `dim` is the store dimension (used by the synthetic oracle's profile codec).
std::shared_ptr<OracleEndpoint> make_endpoint(const OracleSettings& settings, std::size_t dim);
std::shared_ptr<TextEmbedder> make_embedder(const EmbedderSettings& settings, std::size_t dim);

struct OfflineRun {
  EvolutionResult result;
  double alpha = 0.0;
  MetricId metric = MetricId::f1_macro;
  std::shared_ptr<TranscriptLog> transcript;
};

/// Evolution against the synthetic oracle and embedder on the train split of `store`.
/// The oracle seed follows `config.seed`.
OfflineRun evolve_offline(const RunConfig& config, const EmbeddingStore& store, const PromptPair& target,
                          SyntheticOracleOptions oracle_options = {}, const EvolutionHooks& hooks = {},
                          const std::optional<Checkpoint>& resume = std::nullopt,
                          std::optional<int> halt_after = std::nullopt);

}  // namespace promptevo
