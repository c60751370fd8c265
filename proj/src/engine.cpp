#include "promptevo/engine.hpp"

#include <algorithm>
#include <set>

#include <spdlog/spdlog.h>

#include "promptevo/errors.hpp"
#include "promptevo/metrics.hpp"
#include "promptevo/response_parser.hpp"

namespace promptevo {

using nlohmann::json;

json to_json(const GenerationReport& r) {
  json j = {{"generation", r.generation},   {"requested", r.requested},         {"parsed", r.parsed},
            {"kept", r.kept},               {"best_fitness", r.best_fitness}, {"mean_fitness", r.mean_fitness},
            {"buffer_size", r.buffer_size}, {"skipped", r.skipped}};
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

GenerationReport generation_report_from_json(const json& doc) {
  GenerationReport r;
  r.generation = doc.at("generation").get<int>();
  r.requested = doc.value("requested", std::size_t{0});
  r.parsed = doc.value("parsed", std::size_t{0});
  r.kept = doc.at("kept").get<std::size_t>();
  r.best_fitness = doc.at("best_fitness").get<double>();
  r.mean_fitness = doc.at("mean_fitness").get<double>();
  r.buffer_size = doc.value("buffer_size", std::size_t{0});
  r.skipped = doc.value("skipped", false);
  r.note = doc.value("note", std::string{});
  return r;
}

json to_json(const InitReport& r) {
  return {{"requested", r.requested}, {"parsed", r.parsed}, {"unique", r.unique},
          {"admitted", r.admitted},   {"alpha", r.alpha}};
}

json to_json(const Checkpoint& c) {
  json buffer = json::array();
  for (const auto& e : c.buffer) {
    buffer.push_back({{"negative", e.pair.negative},
                      {"positive", e.pair.positive},
                      {"fitness", e.fitness.value},
                      {"metric", to_string(e.fitness.metric)},
                      {"generation_added", e.generation_added}});
  }
  return {{"generation", c.generation},
          {"rng_state", c.rng_state},
          {"config_hash", c.config_hash},
          {"alpha", c.alpha},
          {"buffer", std::move(buffer)}};
}

Checkpoint checkpoint_from_json(const json& doc) {
  try {
    Checkpoint c;
    c.generation = doc.at("generation").get<int>();
    c.rng_state = doc.at("rng_state").get<std::string>();
    c.config_hash = doc.at("config_hash").get<std::string>();
    c.alpha = doc.at("alpha").get<double>();
    for (const auto& e : doc.at("buffer")) {
      c.buffer.push_back({{e.at("negative").get<std::string>(), e.at("positive").get<std::string>()},
                          {e.at("fitness").get<double>(), parse_metric(e.at("metric").get<std::string>())},
                          e.at("generation_added").get<int>()});
    }
    return c;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed checkpoint: ") + e.what());
  }
}

Checkpoint make_checkpoint(const EvolutionState& state, const RunConfig& config) {
  return {state.generation, serialize_rng(state.rng), config_hash(config), state.buffer.alpha(),
          state.buffer.entries()};
}

EvolutionState restore_state(const Checkpoint& checkpoint, const RunConfig& config) {
  if (checkpoint.config_hash != config_hash(config)) {
    throw ConfigError({"config_hash"}, "checkpoint was written by a different run config");
  }
  return {MemoryBuffer::restore(checkpoint.alpha, config.buffer_cap, checkpoint.buffer),
          deserialize_rng(checkpoint.rng_state), checkpoint.generation};
}

Evolver::Evolver(RunConfig config, OracleClient& oracle, PromptEncoder& encoder, LabeledSet fitness_set,
                 EvolutionTemplates templates, std::string task_description)
    : config_(std::move(config)),
      oracle_(oracle),
      encoder_(encoder),
      fitness_set_(std::move(fitness_set)),
      templates_(std::move(templates)),
      task_(std::move(task_description)),
      metric_(config_.resolved_metric()) {
  config_.validate();
  if (fitness_set_.empty()) throw InputError("fitness split is empty");
  templates_.mutate.cot_enabled = config_.cot_enabled;
}

std::optional<std::vector<PromptPair>> Evolver::request_pairs(const std::string& prompt, std::int64_t seed) {
  const int attempts = 1 + config_.parse_retries;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    OracleRequest request;
    request.prompt = prompt;
    // Distinct seed per retry so a sampling oracle does not repeat the same bad answer.
    request.seed = seed + static_cast<std::int64_t>(attempt) * 1'000'003;
    const auto response = oracle_.generate(request);
    try {
      return parse_prompt_pairs(response.text);
    } catch (const ParseError& e) {
      spdlog::warn("unparseable oracle answer (attempt {}/{}): {}", attempt + 1, attempts, e.what());
    }
  }
  return std::nullopt;
}

namespace {

std::vector<PromptPair> dedupe(const std::vector<PromptPair>& pairs) {
  std::set<PromptPair> seen;
  std::vector<PromptPair> out;
  for (const auto& p : pairs) {
    if (seen.insert(p).second) out.push_back(p);
  }
  return out;
}

}  // namespace

std::vector<PromptPair> Evolver::initialize_population(InitReport* report) {
  const auto prompt =
      render_init_prompt(templates_.init, static_cast<int>(config_.initial_population), task_);
  auto parsed = request_pairs(prompt, static_cast<std::int64_t>(config_.seed));
  if (!parsed) throw InitializationError("oracle produced no parseable initial population");
  auto unique = dedupe(*parsed);
  if (unique.size() != config_.initial_population) {
    spdlog::info("initial population: requested {}, parsed {}, unique {}", config_.initial_population,
                 parsed->size(), unique.size());
  }
  if (report) {
    report->requested = config_.initial_population;
    report->parsed = parsed->size();
    report->unique = unique.size();
  }
  return unique;
}

std::vector<ScoredPair> Evolver::score(std::span<const PromptPair> pairs, int generation) {
  const auto embeddings = encoder_.encode(pairs);
  std::vector<ScoredPair> out;
  out.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    out.push_back({pairs[i], evaluate_pair(embeddings[i], fitness_set_, metric_, config_.calib), generation});
  }
  return out;
}

EvolutionState Evolver::seed_state(double alpha, InitReport* report) {
  InitReport local;
  auto population = initialize_population(&local);
  EvolutionState state{MemoryBuffer(alpha, config_.buffer_cap), Rng(config_.seed), 0};
  const auto scored = score(population, 0);
  state.buffer.update(scored);
  local.admitted = state.buffer.size();
  local.alpha = alpha;
  if (report) *report = local;
  if (state.buffer.empty()) {
    throw InitializationError("no initial pair reached the admission threshold " + std::to_string(alpha));
  }
  return state;
}

GenerationReport Evolver::run_generation(EvolutionState& state) {
  GenerationReport report;
  report.generation = state.generation + 1;
  report.requested = config_.generation_size;

  auto parents = select_parents(state.buffer, config_.selection_size, config_.selection, state.rng);
  std::stable_sort(parents.begin(), parents.end(),
                   [](const ScoredPair& a, const ScoredPair& b) { return a.fitness.value < b.fitness.value; });
  std::vector<double> fitness;
  for (const auto& p : parents) fitness.push_back(p.fitness.value);
  const auto scores = normalize_scores(fitness);
  ExemplarBlock exemplars;
  for (std::size_t i = 0; i < parents.size(); ++i) exemplars.push_back({parents[i].pair, scores[i]});

  const auto prompt =
      render_mutation_prompt(templates_.mutate, exemplars, static_cast<int>(config_.generation_size), task_);
  const auto seed = static_cast<std::int64_t>(config_.seed) + report.generation;
  auto parsed = request_pairs(prompt, seed);

  if (!parsed) {
    report.skipped = true;
    report.note = "no parseable answer after " + std::to_string(1 + config_.parse_retries) + " attempts";
  } else {
    const auto unique = dedupe(*parsed);
    report.parsed = unique.size();
    if (unique.size() != config_.generation_size) {
      report.note = "requested " + std::to_string(config_.generation_size) + ", parsed " +
                    std::to_string(unique.size());
    }
    const auto scored = score(unique, report.generation);
    const auto update = state.buffer.update(scored);
    report.kept = update.kept();
  }

  state.generation = report.generation;
  report.best_fitness = state.buffer.best_fitness().value_or(0.0);
  report.mean_fitness = state.buffer.mean_fitness().value_or(0.0);
  report.buffer_size = state.buffer.size();
  return report;
}

EvolutionResult run_evolution(Evolver& evolver, double alpha, const EvolutionHooks& hooks,
                              const std::optional<Checkpoint>& resume, std::optional<int> halt_after) {
  const auto& config = evolver.config();
  auto checkpoint = [&](const EvolutionState& state) {
    if (hooks.on_checkpoint) hooks.on_checkpoint(make_checkpoint(state, config));
  };

  std::optional<InitReport> init;
  std::optional<EvolutionState> state;
  if (resume) {
    state = restore_state(*resume, config);
  } else {
    InitReport report;
    state = evolver.seed_state(alpha, &report);
    init = report;
    checkpoint(*state);
  }

  EvolutionResult result{std::move(*state), {}, init, false};
  auto& s = result.state;
  while (s.generation < config.generations) {
    const auto report = evolver.run_generation(s);
    result.log.push_back(report);
    if (hooks.on_generation) hooks.on_generation(report);
    const bool last = s.generation == config.generations;
    const bool halt = halt_after && s.generation >= *halt_after && !last;
    if (last || halt || s.generation % config.checkpoint_interval == 0) checkpoint(s);
    if (halt) {
      result.halted = true;
      break;
    }
  }
  return result;
}

}  // namespace promptevo
