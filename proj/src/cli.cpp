#include "promptevo/cli.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <array>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "promptevo/analysis.hpp"
#include "promptevo/crowding.hpp"
#include "promptevo/engine.hpp"
#include "promptevo/ensemble.hpp"
#include "promptevo/errors.hpp"
#include "promptevo/metrics.hpp"
#include "promptevo/pipeline.hpp"
#include "promptevo/synthetic.hpp"

namespace promptevo::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class IoError : public Error {
 public:
  using Error::Error;
};

class StageError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Files

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IoError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_text_file(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw IoError("failed writing '" + path.string() + "'");
  }
  fs::rename(tmp, path);
}

void write_json_file(const fs::path& path, const json& doc) { write_text_file(path, doc.dump(2) + "\n"); }

EmbeddingStore open_store(const std::string& path) {
  try {
    return load_store_file(path);
  } catch (const std::ios_base::failure& e) {
    throw IoError(e.what());
  } catch (const FormatError& e) {
    throw IoError("store '" + path + "': " + e.what());
  } catch (const DimensionError& e) {
    throw IoError("store '" + path + "': " + e.what());
  } catch (const DuplicateIdError& e) {
    throw IoError("store '" + path + "': " + e.what());
  }
}

RunSettings open_settings(const std::string& path) {
  try {
    return load_settings(path);
  } catch (const InputError& e) {
    throw IoError(e.what());
  }
}

/// Exclusive ownership of a run directory for the life of one command.
class DirectoryLock {
 public:
  explicit DirectoryLock(const fs::path& dir) : path_(dir / ".lock") {
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) throw IoError("run directory '" + dir.string() + "' is locked by another process (" + path_.string() + ")");
    const auto pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] const auto written = ::write(fd, pid.data(), pid.size());
    ::close(fd);
  }
  ~DirectoryLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  fs::path path_;
};

// ---------------------------------------------------------------------------
// Manifest

enum Stage : std::size_t { kInitialized, kEvolved, kCrowded, kFitted, kEvaluated, kStageCount };

constexpr std::array<const char*, kStageCount> kStageNames = {"initialized", "evolved", "crowded", "fitted",
                                                               "evaluated"};
constexpr std::array<const char*, kStageCount> kStageCommands = {"evolve", "evolve", "crowd", "fit", "eval"};

struct Manifest {
  std::string run_id;
  std::string config_hash;
  std::string store;
  std::array<bool, kStageCount> stages{};
  json artifacts = json::object();
  json metadata = json::object();

  void complete(Stage s) {
    for (std::size_t i = 0; i < s; ++i) {
      if (!stages[i]) throw StageError(std::string("cannot mark '") + kStageNames[s] + "' before '" + kStageNames[i] + "'");
    }
    stages[s] = true;
  }

  /// Invalidates `s` and every later stage (an earlier stage is being redone).
  void reset_from(Stage s) {
    for (std::size_t i = s; i < kStageCount; ++i) stages[i] = false;
  }

  void require(Stage s) const {
    if (!stages[s]) {
      throw StageError(std::string("stage '") + kStageNames[s] + "' has not completed; run `promptevo " +
                       kStageCommands[s] + "` first");
    }
  }

  json to_json() const {
    json st = json::object();
    for (std::size_t i = 0; i < kStageCount; ++i) st[kStageNames[i]] = stages[i];
    return {{"run_id", run_id}, {"config_hash", config_hash}, {"store", store},
            {"stages", st},     {"artifacts", artifacts},     {"metadata", metadata}};
  }

  static Manifest from_json(const json& doc) {
    Manifest m;
    try {
      m.run_id = doc.at("run_id").get<std::string>();
      m.config_hash = doc.at("config_hash").get<std::string>();
      m.store = doc.at("store").get<std::string>();
      for (std::size_t i = 0; i < kStageCount; ++i) m.stages[i] = doc.at("stages").value(kStageNames[i], false);
      m.artifacts = doc.value("artifacts", json::object());
      m.metadata = doc.value("metadata", json::object());
    } catch (const json::exception& e) {
      throw IoError(std::string("malformed manifest: ") + e.what());
    }
    for (std::size_t i = 1; i < kStageCount; ++i) {
      if (m.stages[i] && !m.stages[i - 1]) throw IoError("manifest stage flags are not monotone");
    }
    return m;
  }
};

struct RunDir {
  fs::path dir;

  fs::path manifest() const { return dir / "manifest.json"; }
  fs::path config() const { return dir / "config.json"; }
  fs::path checkpoints() const { return dir / "checkpoints"; }
  fs::path transcript() const { return dir / "oracle_transcript.jsonl"; }
  fs::path run_log() const { return dir / "run_log.jsonl"; }
  fs::path buffer_final() const { return dir / "buffer_final.json"; }
  fs::path crowding() const { return dir / "crowding.json"; }
  fs::path ensemble() const { return dir / "ensemble.json"; }
  fs::path eval() const { return dir / "eval.json"; }
  fs::path analysis() const { return dir / "analysis"; }

  Manifest load_manifest() const {
    if (!fs::exists(manifest())) throw StageError("no manifest in '" + dir.string() + "'; run `promptevo evolve` first");
    return Manifest::from_json(read_json_file(manifest()));
  }

  void save(const Manifest& m) const {
    for (std::size_t i = 1; i < kStageCount; ++i) {
      if (m.stages[i] && !m.stages[i - 1]) throw StageError("refusing to write a non-monotone manifest");
    }
    write_json_file(manifest(), m.to_json());
  }

  /// Settings frozen into the run directory by `evolve`.
  RunSettings settings() const {
    if (!fs::exists(config())) throw StageError("no config.json in '" + dir.string() + "'; run `promptevo evolve` first");
    return settings_from_json(read_json_file(config()), dir.string());
  }
};

// ---------------------------------------------------------------------------
// Shared pieces

json scored_to_json(const ScoredPair& e) {
  return {{"negative", e.pair.negative},
          {"positive", e.pair.positive},
          {"fitness", e.fitness.value},
          {"metric", to_string(e.fitness.metric)},
          {"generation_added", e.generation_added}};
}

ScoredPair scored_from_json(const json& e) {
  return {{e.at("negative").get<std::string>(), e.at("positive").get<std::string>()},
          {e.at("fitness").get<double>(), parse_metric(e.at("metric").get<std::string>())},
          e.at("generation_added").get<int>()};
}

std::shared_ptr<OracleEndpoint> endpoint_for(const RunSettings& settings, std::size_t dim) {
  auto oracle = settings.oracle;
  oracle.synthetic.seed = settings.run.seed;
  return make_endpoint(oracle, dim);
}

struct FitnessSplit {
  LabeledSet set;
  std::string name;
};

FitnessSplit fitness_split(const RunSettings& settings, const EmbeddingStore& store) {
  if (settings.run.shots) {
    auto sample = sample_few_shot(store, *settings.run.shots, settings.run.seed);
    return {std::move(sample.sample), "train:" + std::to_string(*settings.run.shots) + "-shot"};
  }
  return {store.split(Split::train), "train"};
}

void check_store_matches(const RunSettings&, const EmbeddingStore& store) {
  if (store.count(Split::train) == 0) throw InputError("store has no train records");
}

// ---------------------------------------------------------------------------
// Commands

struct Options {
  std::string config;
  std::string store;
  std::string out;
  std::string resume;
  bool offline = false;
  std::uint64_t seed = 0;
  int shots = 0;
  std::string strategy;
  bool no_cot = false;
  int halt_after = 0;
  bool curves = false;
  std::string observations;
  int target = 1;
  std::string ablation;
  int ablation_seeds = 3;
  // synth
  std::size_t dim = 32;
  std::size_t n_train = 200;
  std::size_t n_val = 100;
  std::size_t n_test = 200;
  int generations = 50;

  CLI::Option* seed_opt = nullptr;
  CLI::Option* shots_opt = nullptr;
  CLI::Option* halt_opt = nullptr;
};

void apply_overrides(RunSettings& settings, const Options& o) {
  if (o.seed_opt && *o.seed_opt) settings.run.seed = o.seed;
  if (o.shots_opt && *o.shots_opt) settings.run.shots = o.shots;
  if (!o.strategy.empty()) settings.run.selection = parse_selection(o.strategy);
  if (o.no_cot) settings.run.cot_enabled = false;
}

bool reachable(const std::string& url) {
  httplib::Client client(url);
  client.set_connection_timeout(std::chrono::seconds(3));
  client.set_read_timeout(std::chrono::seconds(5));
  auto res = client.Get("/");
  return static_cast<bool>(res);
}

int cmd_validate(const Options& o, std::ostream& out) {
  auto settings = open_settings(o.config);
  apply_overrides(settings, o);
  settings.run.validate();
  settings.evolution_templates();
  settings.crowd_template();
  json checks = json::array();
  if (settings.oracle.kind == "fixture" && !fs::exists(settings.oracle.fixture_path)) {
    throw ConfigError({"oracle.fixture"}, "oracle fixture '" + settings.oracle.fixture_path + "' does not exist");
  }
  if (!o.offline) {
    if (settings.oracle.kind == "http") {
      if (!reachable(settings.oracle.url)) throw IoError("oracle endpoint " + settings.oracle.url + " is unreachable");
      checks.push_back("oracle reachable");
    }
    if (settings.embedder.kind == "http") {
      if (!reachable(settings.embedder.url)) {
        throw IoError("embedding endpoint " + settings.embedder.url + " is unreachable");
      }
      checks.push_back("embedder reachable");
    }
  }
  out << json{{"valid", true},
              {"config_hash", config_hash(settings.run)},
              {"metric", to_string(settings.run.resolved_metric())},
              {"checks", checks}}
             .dump()
      << "\n";
  return kOk;
}

int cmd_evolve(const Options& o, std::ostream& out) {
  auto settings = open_settings(o.config);
  apply_overrides(settings, o);
  settings.run.validate();
  const auto templates = settings.evolution_templates();
  settings.crowd_template();
  const auto store_path = fs::absolute(o.store).lexically_normal().string();
  const auto store = open_store(store_path);
  check_store_matches(settings, store);

  const RunDir run{o.out};
  fs::create_directories(run.dir);
  DirectoryLock lock(run.dir);

  std::optional<Checkpoint> resume;
  if (!o.resume.empty()) {
    try {
      resume = checkpoint_from_json(read_json_file(o.resume));
    } catch (const InputError& e) {
      throw IoError(e.what());
    }
    if (resume->config_hash != config_hash(settings.run)) {
      throw ConfigError({"config_hash"}, "checkpoint '" + o.resume + "' was written by a different run config");
    }
  }

  Manifest manifest;
  if (resume && fs::exists(run.manifest())) manifest = run.load_manifest();
  manifest.config_hash = config_hash(settings.run);
  manifest.store = store_path;
  manifest.run_id = to_hex(fnv1a(manifest.config_hash + "|" + store_path));
  manifest.reset_from(resume ? kEvolved : kInitialized);
  if (resume) manifest.stages[kInitialized] = true;
  manifest.artifacts = {{"config", "config.json"},       {"checkpoints", "checkpoints"},
                        {"transcript", "oracle_transcript.jsonl"}, {"run_log", "run_log.jsonl"}};

  if (!resume) {
    std::error_code ec;
    fs::remove_all(run.checkpoints(), ec);
    for (const auto& p : {run.run_log(), run.transcript(), run.buffer_final(), run.crowding(), run.ensemble(),
                          run.eval()}) {
      fs::remove(p, ec);
    }
  } else {
    // Drop log lines past the checkpoint; they will be regenerated.
    std::string kept;
    if (std::ifstream in(run.run_log()); in) {
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto doc = json::parse(line, nullptr, false);
        if (doc.is_discarded() || !doc.contains("generation")) break;
        if (doc["generation"].get<int>() > resume->generation) break;
        kept += line + "\n";
      }
    }
    write_text_file(run.run_log(), kept);
  }
  fs::create_directories(run.checkpoints());
  write_json_file(run.config(), to_json(settings));

  auto transcript = std::make_shared<TranscriptLog>(run.transcript().string());
  OracleClient oracle(endpoint_for(settings, store.dim()), settings.oracle.retry, transcript);
  PromptEncoder encoder(make_embedder(settings.embedder, store.dim()), store.dim());
  auto fitness = fitness_split(settings, store);
  Evolver evolver(settings.run, oracle, encoder, fitness.set, templates, settings.task_description);

  std::optional<double> baseline;
  if (settings.baseline_pair) {
    baseline = zero_shot_eval(*settings.baseline_pair, fitness.set, evolver.metric(), encoder, settings.run.calib).value;
  }
  const double alpha = resolve_alpha(settings.run, evolver.metric(), fitness.set.labels, baseline);
  manifest.metadata["fitness_split"] = fitness.name;
  manifest.metadata["metric"] = to_string(evolver.metric());
  manifest.metadata["alpha"] = resume ? resume->alpha : alpha;
  manifest.metadata["baseline_fitness"] = baseline ? json(*baseline) : json(nullptr);
  run.save(manifest);

  std::ofstream log(run.run_log(), std::ios::app);
  if (!log) throw IoError("cannot open run log");
  EvolutionHooks hooks;
  hooks.on_generation = [&](const GenerationReport& r) {
    log << to_json(r).dump() << '\n';
    log.flush();
  };
  hooks.on_checkpoint = [&](const Checkpoint& c) {
    char name[32];
    std::snprintf(name, sizeof name, "gen_%04d.json", c.generation);
    write_json_file(run.checkpoints() / name, to_json(c));
    write_json_file(run.checkpoints() / "latest.json", to_json(c));
    if (!manifest.stages[kInitialized]) {
      manifest.complete(kInitialized);
      run.save(manifest);
    }
  };

  std::optional<int> halt;
  if (o.halt_opt && *o.halt_opt) halt = o.halt_after;
  auto result = run_evolution(evolver, alpha, hooks, resume, halt);
  log.close();

  if (result.init) manifest.metadata["init"] = to_json(*result.init);
  if (result.halted) {
    run.save(manifest);
    spdlog::warn("halted after generation {}; resume with --resume {}", result.state.generation,
                 (run.checkpoints() / "latest.json").string());
    return kRuntimeAbort;
  }

  json entries = json::array();
  for (const auto& e : result.state.buffer.entries()) entries.push_back(scored_to_json(e));
  write_json_file(run.buffer_final(), {{"generation", result.state.generation},
                                       {"alpha", result.state.buffer.alpha()},
                                       {"cap", result.state.buffer.cap()},
                                       {"metric", to_string(evolver.metric())},
                                       {"entries", std::move(entries)}});
  manifest.artifacts["buffer_final"] = "buffer_final.json";
  manifest.complete(kEvolved);
  run.save(manifest);
  out << json{{"generation", result.state.generation},
              {"best_fitness", result.state.buffer.best_fitness().value_or(0.0)},
              {"buffer_size", result.state.buffer.size()},
              {"alpha", result.state.buffer.alpha()}}
             .dump()
      << "\n";
  return kOk;
}

int cmd_crowd(const Options& o, std::ostream& out) {
  const RunDir run{o.out};
  auto manifest = run.load_manifest();
  manifest.require(kEvolved);
  const auto settings = run.settings();
  const auto store = open_store(manifest.store);
  DirectoryLock lock(run.dir);

  const auto doc = read_json_file(run.buffer_final());
  std::vector<ScoredPair> entries;
  try {
    for (const auto& e : doc.at("entries")) entries.push_back(scored_from_json(e));
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed buffer_final.json: ") + e.what());
  }
  CrowdingPlan plan{settings.run.crowding.batch_size, settings.run.crowding.rounds, settings.run.seed};
  auto transcript = std::make_shared<TranscriptLog>(run.transcript().string());
  OracleClient oracle(endpoint_for(settings, store.dim()), settings.oracle.retry, transcript);
  const auto result = crowd(entries, plan, oracle, settings.crowd_template(), settings.task_description);

  write_json_file(run.crowding(), to_json(result));
  manifest.reset_from(kCrowded);
  manifest.artifacts["crowding"] = "crowding.json";
  manifest.complete(kCrowded);
  run.save(manifest);
  out << json{{"input", entries.size()}, {"output", result.set.entries.size()}}.dump() << "\n";
  return kOk;
}

int cmd_fit(const Options& o, std::ostream& out) {
  const RunDir run{o.out};
  auto manifest = run.load_manifest();
  manifest.require(kCrowded);
  const auto settings = run.settings();
  const auto store = open_store(o.store.empty() ? manifest.store : o.store);
  DirectoryLock lock(run.dir);

  std::vector<ScoredPair> set;
  const auto crowding_doc = read_json_file(run.crowding());
  try {
    for (const auto& e : crowding_doc.at("final")) set.push_back(scored_from_json(e));
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed crowding.json: ") + e.what());
  }
  PromptEncoder encoder(make_embedder(settings.embedder, store.dim()), store.dim());
  const MetricId metric = settings.run.resolved_metric();
  LabeledSet weight_split = store.split(Split::val);
  std::string weight_name = "val";
  if (weight_split.empty()) {
    // No validation data (typical in the smallest few-shot regimes): weight by training fitness.
    auto fitness = fitness_split(settings, store);
    weight_split = std::move(fitness.set);
    weight_name = fitness.name;
    spdlog::info("no validation split; weighting members by {} fitness", weight_name);
  }
  const auto fit = fit_weights(set, encoder, weight_split, metric, settings.run.calib);
  write_json_file(run.ensemble(), to_json(describe(fit.ensemble, metric, settings.run.calib, store.model())));

  manifest.reset_from(kFitted);
  manifest.metadata["weight_split"] = weight_name;
  manifest.metadata["ensemble_members"] = fit.ensemble.size();
  manifest.metadata["ensemble_kept_best_only"] = fit.kept_best_only;
  manifest.artifacts["ensemble"] = "ensemble.json";
  manifest.complete(kFitted);
  run.save(manifest);
  out << json{{"members", fit.ensemble.size()}, {"candidates", set.size()}, {"weight_split", weight_name}}.dump()
      << "\n";
  return kOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
  const RunDir run{o.out};
  auto manifest = run.load_manifest();
  manifest.require(kFitted);
  const auto settings = run.settings();
  const auto store = open_store(o.store.empty() ? manifest.store : o.store);
  DirectoryLock lock(run.dir);

  EnsembleFile file;
  try {
    file = ensemble_file_from_json(read_json_file(run.ensemble()));
  } catch (const InputError& e) {
    throw IoError(e.what());
  }
  PromptEncoder encoder(make_embedder(settings.embedder, store.dim()), store.dim());
  const auto ensemble = load_ensemble(file, encoder);
  const auto test = store.split(Split::test);
  if (test.empty()) throw InputError("store has no test records to evaluate on");
  const auto report = evaluate_ensemble(ensemble, test, file.metric, file.calib);
  json doc = {{"split", "test"}, {"ensemble", to_json(report)}, {"zero_shot", nullptr}};
  if (settings.baseline_pair) {
    const auto z = zero_shot_eval(*settings.baseline_pair, test, file.metric, encoder, file.calib);
    doc["zero_shot"] = {{"metric", to_string(z.metric)}, {"value", z.value}};
  }
  write_json_file(run.eval(), doc);

  manifest.reset_from(kEvaluated);
  manifest.artifacts["eval"] = "eval.json";
  manifest.complete(kEvaluated);
  run.save(manifest);
  out << json{{"metric", to_string(report.metric)}, {"value", report.value}, {"f1_macro", report.f1_macro},
              {"accuracy", report.accuracy}}
             .dump()
      << "\n";
  return kOk;
}

int cmd_analyze(const Options& o, std::ostream& out) {
  const RunDir run{o.out};
  auto manifest = run.load_manifest();
  const bool curves = o.curves || (o.observations.empty() && o.ablation.empty());
  fs::create_directories(run.analysis());
  json summary = json::object();

  if (curves) {
    manifest.require(kEvolved);
    std::ifstream in(run.run_log());
    if (!in) throw IoError("cannot read run log");
    const auto log = read_run_log(in);
    std::ostringstream csv;
    write_learning_curve(log, csv);
    write_text_file(run.analysis() / "learning_curve.csv", csv.str());
    manifest.artifacts["learning_curve"] = "analysis/learning_curve.csv";
    summary["learning_curve_rows"] = log.size();
  }
  if (!o.observations.empty()) {
    std::ifstream in(o.observations);
    if (!in) throw IoError("cannot read observations '" + o.observations + "'");
    ObservationTable table;
    try {
      table = load_observations(in);
    } catch (const FormatError& e) {
      throw IoError("observations '" + o.observations + "': " + e.what());
    }
    const auto store = open_store(o.store.empty() ? manifest.store : o.store);
    const auto rows = conditional_probabilities(table, o.target, &store);
    std::ostringstream csv;
    write_conditional_csv(rows, csv);
    write_text_file(run.analysis() / "conditional_probabilities.csv", csv.str());
    manifest.artifacts["conditional_probabilities"] = "analysis/conditional_probabilities.csv";
    summary["observations"] = rows.size();
  }
  if (!o.ablation.empty()) {
    const auto settings = run.settings();
    const auto store = open_store(o.store.empty() ? manifest.store : o.store);
    const auto deltas = ablation_axis(o.ablation);
    std::vector<std::uint64_t> seeds;
    for (int i = 0; i < o.ablation_seeds; ++i) seeds.push_back(settings.run.seed + static_cast<std::uint64_t>(i));
    const auto templates = settings.evolution_templates();
    auto runner = [&](const RunConfig& cfg) {
      auto cell = settings;
      cell.run = cfg;
      OracleClient oracle(endpoint_for(cell, store.dim()), cell.oracle.retry);
      PromptEncoder encoder(make_embedder(cell.embedder, store.dim()), store.dim());
      auto fitness = fitness_split(cell, store);
      Evolver evolver(cfg, oracle, encoder, fitness.set, templates, cell.task_description);
      std::optional<double> baseline;
      if (cell.baseline_pair) {
        baseline = zero_shot_eval(*cell.baseline_pair, fitness.set, evolver.metric(), encoder, cfg.calib).value;
      }
      const double alpha = resolve_alpha(cfg, evolver.metric(), fitness.set.labels, baseline);
      return run_evolution(evolver, alpha).log;
    };
    const auto report = run_ablation(settings.run, deltas, seeds, runner);
    const auto name = "ablation_" + o.ablation + ".json";
    write_json_file(run.analysis() / name, to_json(report));
    manifest.artifacts["ablation_" + o.ablation] = "analysis/" + name;
    json means = json::object();
    for (const auto& c : report.cells) {
      means[c.delta.dump()] = c.mean_final_best ? json(*c.mean_final_best) : json(nullptr);
    }
    summary["ablation"] = means;
  }
  run.save(manifest);
  out << summary.dump() << "\n";
  return kOk;
}

int cmd_synth(const Options& o, std::ostream& out) {
  synthetic::TaskOptions options;
  options.dim = o.dim;
  options.n_train = o.n_train;
  options.n_val = o.n_val;
  options.n_test = o.n_test;
  options.seed = o.seed;
  const auto task = synthetic::make_task(options);
  const fs::path dir(o.out);
  fs::create_directories(dir);
  std::ostringstream store;
  save_store(task.store, store);
  write_text_file(dir / "store.ndjson", store.str());

  RunSettings settings;
  settings.run.generations = o.generations;
  settings.task_description = "the planted abnormality in synthetic images";
  settings.oracle.kind = "synthetic";
  settings.oracle.synthetic.target = task.planted;
  settings.embedder.kind = "synthetic";
  write_json_file(dir / "config.json", to_json(settings));
  out << json{{"store", (dir / "store.ndjson").string()}, {"config", (dir / "config.json").string()}}.dump()
      << "\n";
  return kOk;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const StageError*>(&e)) return kStageOrder;
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const TemplateError*>(&e)) return kConfigError;
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const std::ios_base::failure*>(&e) ||
      dynamic_cast<const fs::filesystem_error*>(&e)) {
    return kIoError;
  }
  return kRuntimeAbort;
}

/// Routes library logging to `err` for the duration of one command.
class LogScope {
 public:
  explicit LogScope(std::ostream& err) : previous_(spdlog::default_logger()) {
    auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
    auto logger = std::make_shared<spdlog::logger>("promptevo", sink);
    logger->set_pattern("[%l] %v");
    logger->set_level(previous_->level());
    spdlog::set_default_logger(logger);
  }
  ~LogScope() { spdlog::set_default_logger(previous_); }

 private:
  std::shared_ptr<spdlog::logger> previous_;
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  LogScope logging(err);
  CLI::App app{"Evolve prompt-pair ensembles with a generative oracle", "promptevo"};
  app.require_subcommand(1);
  Options o;
  const std::vector<std::string> strategies = {"roulette", "best_n", "random"};

  auto* validate = app.add_subcommand("validate", "Check a config file");
  validate->add_option("--config", o.config, "Run config (JSON)")->required();
  validate->add_flag("--offline", o.offline, "Skip endpoint reachability checks");

  auto* evolve = app.add_subcommand("evolve", "Initialize and evolve the buffer");
  evolve->add_option("--config", o.config, "Run config (JSON)")->required();
  evolve->add_option("--store", o.store, "Embedding store")->required();
  evolve->add_option("--out", o.out, "Run directory")->required();
  evolve->add_option("--resume", o.resume, "Continue from a checkpoint file");
  o.seed_opt = evolve->add_option("--seed", o.seed, "Override the run seed");
  o.shots_opt = evolve->add_option("--shots", o.shots, "Labeled shots per class")->check(CLI::PositiveNumber);
  evolve->add_option("--strategy", o.strategy, "Parent selection")->check(CLI::IsMember(strategies));
  evolve->add_flag("--no-cot", o.no_cot, "Disable chain-of-thought phrases");
  o.halt_opt = evolve->add_option("--halt-after", o.halt_after, "Stop after this generation")->group("");

  auto* crowd_cmd = app.add_subcommand("crowd", "De-duplicate the final buffer");
  crowd_cmd->add_option("--out", o.out, "Run directory")->required();

  auto* fit = app.add_subcommand("fit", "Fit ensemble weights");
  fit->add_option("--out", o.out, "Run directory")->required();
  fit->add_option("--store", o.store, "Embedding store (defaults to the run's)");

  auto* eval = app.add_subcommand("eval", "Evaluate the ensemble on the test split");
  eval->add_option("--out", o.out, "Run directory")->required();
  eval->add_option("--store", o.store, "Embedding store (defaults to the run's)");

  auto* analyze = app.add_subcommand("analyze", "Learning curves, observation statistics, ablations");
  analyze->add_option("--out", o.out, "Run directory")->required();
  analyze->add_option("--store", o.store, "Embedding store (defaults to the run's)");
  analyze->add_flag("--curves", o.curves, "Export the learning curve");
  analyze->add_option("--observations", o.observations, "Observation table CSV");
  analyze->add_option("--target", o.target, "Class for conditional probabilities");
  analyze->add_option("--ablation", o.ablation, "Ablation axis")
      ->check(CLI::IsMember({"selection", "generation_size", "cot", "initial_population"}));
  analyze->add_option("--seeds", o.ablation_seeds, "Seeds per ablation cell")->check(CLI::PositiveNumber);

  auto* synth = app.add_subcommand("synth", "Write a synthetic store and offline config");
  synth->add_option("--out", o.out, "Output directory")->required();
  synth->add_option("--dim", o.dim, "Embedding dimension");
  synth->add_option("--train", o.n_train, "Train records");
  synth->add_option("--val", o.n_val, "Validation records");
  synth->add_option("--test", o.n_test, "Test records");
  synth->add_option("--seed", o.seed, "Task seed");
  synth->add_option("--generations", o.generations, "Generations in the written config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*validate) return cmd_validate(o, out);
    if (*evolve) return cmd_evolve(o, out);
    if (*crowd_cmd) return cmd_crowd(o, out);
    if (*fit) return cmd_fit(o, out);
    if (*eval) return cmd_eval(o, out);
    if (*analyze) return cmd_analyze(o, out);
    if (*synth) return cmd_synth(o, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    for (const auto& f : e.fields()) err << "  field: " << f << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kConfigError;
}

}  // namespace promptevo::cli
