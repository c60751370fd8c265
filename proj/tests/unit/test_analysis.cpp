#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

#include "promptevo/analysis.hpp"
#include "promptevo/errors.hpp"
#include "promptevo/synthetic.hpp"
#include "support.hpp"

using namespace promptevo;
using namespace promptevo::testing;
using Catch::Approx;
using nlohmann::json;

namespace {

ObservationTable fixture_table() {
  std::ifstream in(fixture_path("observations.csv"));
  return load_observations(in);
}

EmbeddingStore tiny_store(std::size_t pos, std::size_t neg) {
  std::vector<LabeledEmbedding> recs;
  for (std::size_t i = 0; i < pos + neg; ++i) {
    recs.push_back({"r" + std::to_string(i), EmbeddingVector{1.0, static_cast<double>(i)}.normalized(),
                    i < pos ? 1 : 0, Split::train});
  }
  recs.push_back({"v0", EmbeddingVector{1.0, 0.0}, 1, Split::val});
  return EmbeddingStore(2, "tiny", recs);
}

}  // namespace

TEST_CASE("few-shot sampling is per class, seeded and disjoint", "[analysis]") {
  const auto store = tiny_store(6, 9);
  const auto s = sample_few_shot(store, 4, 11);
  CHECK(s.ids.at(0).size() == 4);
  CHECK(s.ids.at(1).size() == 4);
  CHECK(s.sample.size() == 8);
  CHECK(s.remainder.size() == 7);
  CHECK(s.sample.labels == std::vector<int>{0, 0, 0, 0, 1, 1, 1, 1});
  for (const auto& id : s.sample.ids) {
    CHECK(std::find(s.remainder.ids.begin(), s.remainder.ids.end(), id) == s.remainder.ids.end());
  }
  CHECK(sample_few_shot(store, 4, 11).ids == s.ids);
  CHECK(sample_few_shot(store, 4, 12).ids != s.ids);
  try {
    sample_few_shot(store, 7, 1);
    FAIL("expected InsufficientDataError");
  } catch (const InsufficientDataError& e) {
    CHECK(std::string(e.what()).find("class 1") != std::string::npos);
  }
  CHECK_THROWS_AS(sample_few_shot(store, 0, 1), InputError);
}

TEST_CASE("zero-shot baseline scores a fixed pair", "[analysis]") {
  const auto task = synthetic::make_task({});
  PromptEncoder encoder(std::make_shared<synthetic::SyntheticTextEmbedder>(32), 32);
  const auto score = zero_shot_eval(task.planted, task.store.split(Split::test), MetricId::f1_macro, encoder);
  CHECK(score.value == 1.0);
  CHECK_THROWS_AS(zero_shot_eval(task.planted, LabeledSet{}, MetricId::f1_macro, encoder), InputError);
}

TEST_CASE("conditional probabilities on the observation fixture", "[analysis]") {
  const auto table = fixture_table();
  REQUIRE(table.size() == 20);
  const auto rows = conditional_probabilities(table, 1);
  REQUIRE(rows.size() == 4);  // regression_structures is never present
  CHECK(rows[0].observation == "streaks");
  CHECK(rows[0].probability == 1.0);
  CHECK(rows[1].observation == "pigment_network");
  CHECK(rows[1].probability == 0.75);
  CHECK(rows[1].support == 4);  // the repeated row counts once
  CHECK(rows[1].matches == 3);
  CHECK(rows[2].observation == "blue_white_veil");
  CHECK(rows[2].probability == 1.0 / 3.0);
  CHECK(rows[3].observation == "dots_globules");
  CHECK(rows[3].probability == 1.0 / 5.0);

  std::ostringstream csv;
  write_conditional_csv(rows, csv);
  CHECK(csv.str().rfind("observation,probability,support,matches\nstreaks,1", 0) == 0);
}

TEST_CASE("observation loading and id resolution errors", "[analysis]") {
  auto line_of = [](const std::string& text) -> std::size_t {
    std::istringstream in(text);
    try {
      load_observations(in);
    } catch (const FormatError& e) {
      return e.line();
    }
    return 0;
  };
  CHECK(line_of("id,label,obs,present\n") == 1);
  CHECK(line_of("id,label,observation,present\na,1,x,1\nb,one,x,1\n") == 3);
  CHECK(line_of("id,label,observation,present\na,1,x,2\n") == 2);
  CHECK(line_of("id,label,observation,present\na,1,x\n") == 2);
  std::istringstream quoted("id,label,observation,present\n\"a,b\",1,\"said \"\"x\"\"\",1\n");
  const auto t = load_observations(quoted);
  CHECK(t[0].id == "a,b");
  CHECK(t[0].observation == "said \"x\"");

  const auto store = tiny_store(1, 1);
  ObservationTable ok{{"r0", 1, "x", true}};
  CHECK_NOTHROW(conditional_probabilities(ok, 1, &store));
  ObservationTable unknown{{"nope", 1, "x", true}};
  CHECK_THROWS_AS(conditional_probabilities(unknown, 1, &store), ResolutionError);
}

TEST_CASE("run logs round-trip into learning curves", "[analysis]") {
  std::vector<GenerationReport> log;
  for (int g = 1; g <= 3; ++g) {
    GenerationReport r;
    r.generation = g;
    r.best_fitness = 0.5 + 0.1 * g;
    r.mean_fitness = 0.5;
    r.kept = static_cast<std::size_t>(g);
    log.push_back(r);
  }
  std::stringstream jsonl;
  for (const auto& r : log) jsonl << to_json(r).dump() << '\n';
  const auto back = read_run_log(jsonl);
  REQUIRE(back.size() == 3);
  CHECK(back[2].best_fitness == log[2].best_fitness);
  std::ostringstream csv;
  write_learning_curve(back, csv);
  CHECK(csv.str().rfind("generation,best_fitness,mean_fitness,kept\n1,", 0) == 0);
  std::istringstream bad(to_json(log[0]).dump() + "\nnot json\n");
  try {
    read_run_log(bad);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("ablation grids run every seed per cell and survive failures", "[analysis]") {
  RunConfig base;
  base.generations = 2;
  std::vector<std::pair<std::string, std::uint64_t>> calls;
  const auto runner = [&](const RunConfig& c) {
    calls.emplace_back(std::string(to_string(c.selection)), c.seed);
    if (c.selection == SelectionStrategy::random && c.seed == 2) throw InitializationError("boom");
    std::vector<GenerationReport> curve(2);
    curve[0].generation = 1;
    curve[1].generation = 2;
    curve[1].best_fitness = c.selection == SelectionStrategy::best_n ? 0.9 : 0.8;
    return curve;
  };
  const auto report = run_ablation(base, ablation_axis("selection"), {1, 2}, runner);
  CHECK(calls.size() == 6);
  REQUIRE(report.cells.size() == 3);
  const auto* random = report.find(json{{"selection", "random"}});
  REQUIRE(random != nullptr);
  CHECK(random->runs[1].error.find("boom") != std::string::npos);
  CHECK(random->mean_final_best == 0.8);
  CHECK(report.find(json{{"selection", "best_n"}})->mean_final_best == 0.9);
  CHECK(report.find(json{{"selection", "tournament"}}) == nullptr);
  const auto doc = to_json(report);
  CHECK(doc.size() == 3);
  CHECK(delta_key(json{{"selection", "random"}}) == random->key);

  calls.clear();
  CHECK_THROWS_AS(run_ablation(base, {json{{"selection_size", 0}}}, {1}, runner), ConfigError);
  CHECK_THROWS_AS(run_ablation(base, {json{{"bogus", 1}}}, {1}, runner), ConfigError);
  CHECK(calls.empty());
  CHECK_THROWS_AS(ablation_axis("temperature"), InputError);
}
