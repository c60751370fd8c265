#include "promptevo/analysis.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "promptevo/errors.hpp"
#include "promptevo/metrics.hpp"
#include "promptevo/random.hpp"

namespace promptevo {

using nlohmann::json;

FewShotSample sample_few_shot(const EmbeddingStore& store, int shots, std::uint64_t seed) {
  if (shots < 1) throw InputError("shots per class must be at least 1");
  std::map<int, std::vector<std::size_t>> by_class;
  const auto records = store.records();
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].split == Split::train) by_class[records[i].label].push_back(i);
  }
  for (int label : {0, 1}) by_class.try_emplace(label);

  FewShotSample out;
  out.shots = shots;
  out.seed = seed;
  Rng rng(seed);
  std::set<std::size_t> chosen;
  for (auto& [label, indices] : by_class) {
    if (indices.size() < static_cast<std::size_t>(shots)) {
      throw InsufficientDataError("class " + std::to_string(label) + " has " + std::to_string(indices.size()) +
                                  " train records, " + std::to_string(shots) + " requested");
    }
    shuffle(indices, rng);
    indices.resize(static_cast<std::size_t>(shots));
    std::sort(indices.begin(), indices.end());
    for (auto i : indices) {
      out.ids[label].push_back(records[i].id);
      out.sample.push_back(records[i]);
      chosen.insert(i);
    }
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].split == Split::train && !chosen.count(i)) out.remainder.push_back(records[i]);
  }
  return out;
}

FitnessScore zero_shot_eval(const PromptPair& baseline, const LabeledSet& split, MetricId metric,
                            PromptEncoder& encoder, const ProbabilityCalibration& calib) {
  if (split.empty()) throw InputError("zero-shot evaluation needs a non-empty split");
  return evaluate_pair(encoder.encode(baseline), split, metric, calib);
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

ObservationTable load_observations(std::istream& in) {
  ObservationTable table;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (!header) {
      if (fields != std::vector<std::string>{"id", "label", "observation", "present"}) {
        throw FormatError(line_no, "expected header id,label,observation,present");
      }
      header = true;
      continue;
    }
    if (fields.size() != 4) throw FormatError(line_no, "expected 4 fields");
    ObservationRow row;
    row.id = fields[0];
    try {
      std::size_t used = 0;
      row.label = std::stoi(fields[1], &used);
      if (used != fields[1].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw FormatError(line_no, "label must be an integer");
    }
    row.observation = fields[2];
    if (fields[3] == "1") row.present = true;
    else if (fields[3] == "0") row.present = false;
    else throw FormatError(line_no, "present must be 0 or 1");
    if (row.id.empty() || row.observation.empty()) throw FormatError(line_no, "empty id or observation");
    table.push_back(std::move(row));
  }
  if (!header) throw FormatError(line_no, "missing header");
  return table;
}

std::vector<ConditionalProbability> conditional_probabilities(const ObservationTable& table, int target,
                                                              const EmbeddingStore* store) {
  if (table.empty()) throw InputError("observation table is empty");
  // observation -> image id -> label; an image counts once per observation.
  std::map<std::string, std::map<std::string, int>> present;
  for (const auto& row : table) {
    if (store && !store->find(row.id)) throw ResolutionError("unknown image id '" + row.id + "'");
    if (row.present) present[row.observation][row.id] = row.label;
  }
  std::vector<ConditionalProbability> out;
  for (const auto& [observation, images] : present) {
    ConditionalProbability cp;
    cp.observation = observation;
    cp.support = images.size();
    for (const auto& [id, label] : images) cp.matches += label == target;
    cp.probability = static_cast<double>(cp.matches) / static_cast<double>(cp.support);
    out.push_back(std::move(cp));
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.probability > b.probability;
  });
  return out;
}

void write_conditional_csv(const std::vector<ConditionalProbability>& rows, std::ostream& out) {
  out << "observation,probability,support,matches\n";
  for (const auto& r : rows) {
    out << csv_field(r.observation) << ',' << json(r.probability).dump() << ',' << r.support << ',' << r.matches
        << '\n';
  }
}

std::vector<GenerationReport> read_run_log(std::istream& in) {
  std::vector<GenerationReport> log;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    try {
      log.push_back(generation_report_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw FormatError(line_no, std::string("bad run log entry: ") + e.what());
    }
  }
  return log;
}

void write_learning_curve(const std::vector<GenerationReport>& log, std::ostream& out) {
  out << "generation,best_fitness,mean_fitness,kept\n";
  for (const auto& r : log) {
    out << r.generation << ',' << json(r.best_fitness).dump() << ',' << json(r.mean_fitness).dump() << ','
        << r.kept << '\n';
  }
}

const AblationCell* AblationReport::find(const json& delta) const {
  const auto key = delta_key(delta);
  for (const auto& c : cells) {
    if (c.key == key) return &c;
  }
  return nullptr;
}

json to_json(const AblationReport& report) {
  json out = json::object();
  for (const auto& cell : report.cells) {
    json runs = json::array();
    for (const auto& r : cell.runs) {
      json curve = json::array();
      for (const auto& g : r.curve) curve.push_back({g.generation, g.best_fitness, g.mean_fitness, g.kept});
      json run = {{"seed", r.seed},
                  {"curve", std::move(curve)},
                  {"final_best", r.final_best ? json(*r.final_best) : json(nullptr)}};
      if (!r.error.empty()) run["error"] = r.error;
      runs.push_back(std::move(run));
    }
    out[cell.key] = {{"delta", cell.delta},
                     {"curve_columns", {"generation", "best_fitness", "mean_fitness", "kept"}},
                     {"runs", std::move(runs)},
                     {"mean_final_best", cell.mean_final_best ? json(*cell.mean_final_best) : json(nullptr)}};
  }
  return out;
}

std::string delta_key(const json& delta) { return to_hex(fnv1a(delta.dump())); }

AblationReport run_ablation(const RunConfig& base, const std::vector<json>& deltas,
                            const std::vector<std::uint64_t>& seeds, const AblationRunner& runner) {
  if (seeds.empty()) throw InputError("ablation needs at least one seed");
  std::vector<RunConfig> configs;
  for (const auto& delta : deltas) {
    json merged = to_json(base);
    merged.merge_patch(delta);
    auto cfg = run_config_from_json(merged);
    cfg.validate();
    configs.push_back(cfg);
  }
  AblationReport report;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    AblationCell cell{delta_key(deltas[i]), deltas[i], {}, std::nullopt};
    double sum = 0.0;
    std::size_t ok = 0;
    for (auto seed : seeds) {
      auto cfg = configs[i];
      cfg.seed = seed;
      AblationRun run;
      run.seed = seed;
      try {
        run.curve = runner(cfg);
        if (!run.curve.empty()) {
          run.final_best = run.curve.back().best_fitness;
          sum += *run.final_best;
          ++ok;
        }
      } catch (const std::exception& e) {
        run.error = e.what();
      }
      cell.runs.push_back(std::move(run));
    }
    if (ok) cell.mean_final_best = sum / static_cast<double>(ok);
    report.cells.push_back(std::move(cell));
  }
  return report;
}

std::vector<json> ablation_axis(const std::string& axis) {
  if (axis == "selection") {
    return {{{"selection", "roulette"}}, {{"selection", "best_n"}}, {{"selection", "random"}}};
  }
  if (axis == "generation_size") {
    return {{{"generation_size", 5}}, {{"generation_size", 10}}, {{"generation_size", 50}}};
  }
  if (axis == "cot") return {{{"cot_enabled", true}}, {{"cot_enabled", false}}};
  if (axis == "initial_population") {
    return {{{"initial_population", 10}}, {{"initial_population", 30}}, {{"initial_population", 50}}};
  }
  throw InputError("unknown ablation axis '" + axis + "'");
}

}  // namespace promptevo
