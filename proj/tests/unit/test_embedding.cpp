#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "promptevo/embedding.hpp"
#include "promptevo/errors.hpp"
#include "support.hpp"

using namespace promptevo;
using Catch::Approx;

namespace {

const char* kStore =
    R"({"dim": 3, "model": "toy"})"
    "\n"
    R"({"id": "a", "label": 1, "split": "train", "vector": [3, 0, 4]})"
    "\n\n"
    R"({"id": "b", "label": 0, "split": "val", "vector": [0, 2, 0]})"
    "\n"
    R"({"id": "c", "label": 0, "split": "test", "vector": [1, 1, 1]})"
    "\n";

}  // namespace

TEST_CASE("store loads, normalizes and splits", "[embedding]") {
  std::istringstream in(kStore);
  const auto store = load_store(in);
  CHECK(store.dim() == 3);
  CHECK(store.model() == "toy");
  REQUIRE(store.records().size() == 3);
  CHECK(store.count(Split::train) == 1);
  CHECK(store.count(Split::val) == 1);
  const auto* a = store.find("a");
  REQUIRE(a != nullptr);
  CHECK((*a).vector[0] == Approx(0.6));
  CHECK((*a).vector[2] == Approx(0.8));
  CHECK(a->vector.norm() == Approx(1.0));
  CHECK(store.find("zzz") == nullptr);
  const auto test = store.split(Split::test);
  REQUIRE(test.size() == 1);
  CHECK(test.ids[0] == "c");
  CHECK(test.labels[0] == 0);
}

TEST_CASE("store round-trips through save_store", "[embedding]") {
  std::istringstream in(kStore);
  const auto store = load_store(in);
  std::ostringstream out;
  save_store(store, out);
  std::istringstream again(out.str());
  const auto copy = load_store(again);
  REQUIRE(copy.records().size() == store.records().size());
  for (std::size_t i = 0; i < copy.records().size(); ++i) {
    CHECK(copy.records()[i].id == store.records()[i].id);
    CHECK(copy.records()[i].split == store.records()[i].split);
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(copy.records()[i].vector[k] == Approx(store.records()[i].vector[k]).margin(1e-15));
    }
  }
}

TEST_CASE("store format errors carry the line number", "[embedding]") {
  auto line_of = [](const std::string& text) -> std::size_t {
    std::istringstream in(text);
    try {
      load_store(in);
    } catch (const FormatError& e) {
      return e.line();
    }
    return 0;
  };
  CHECK(line_of("{\"dim\": 2}\n{\"id\": \"x\", \"label\": 1, \"split\": \"train\", \"vector\": [1, 0]}\nnot json\n") == 3);
  CHECK(line_of("{\"dim\": 2}\n{\"id\": \"x\", \"label\": 3, \"split\": \"train\", \"vector\": [1, 0]}\n") == 2);
  CHECK(line_of("{\"dim\": 2}\n{\"id\": \"x\", \"label\": 1, \"split\": \"train\", \"vector\": [0, 0]}\n") == 2);
  CHECK(line_of("{\"dim\": 2}\n{\"id\": \"x\", \"label\": 1, \"split\": \"nope\", \"vector\": [1, 0]}\n") == 2);
  CHECK(line_of("{\"model\": \"m\"}\n") == 1);
  CHECK(line_of("") > 0);
}

TEST_CASE("store rejects dimension mismatches and duplicate ids", "[embedding]") {
  std::istringstream bad_dim("{\"dim\": 2}\n{\"id\": \"x\", \"label\": 1, \"split\": \"train\", \"vector\": [1, 0, 0]}\n");
  CHECK_THROWS_AS(load_store(bad_dim), DimensionError);
  std::istringstream dup(
      "{\"dim\": 2}\n"
      "{\"id\": \"x\", \"label\": 1, \"split\": \"train\", \"vector\": [1, 0]}\n"
      "{\"id\": \"x\", \"label\": 0, \"split\": \"test\", \"vector\": [0, 1]}\n");
  CHECK_THROWS_AS(load_store(dup), DuplicateIdError);
  CHECK_THROWS_AS(load_store_file("/nonexistent/store.jsonl"), std::ios_base::failure);
}

TEST_CASE("cosine similarity and pair classification", "[embedding]") {
  const EmbeddingVector x{1.0, 0.0};
  const EmbeddingVector y{0.0, 2.0};
  const EmbeddingVector d{1.0, 1.0};
  CHECK(cosine_sim(x, y) == Approx(0.0).margin(1e-15));
  CHECK(cosine_sim(x, d) == Approx(std::sqrt(0.5)));
  CHECK_THROWS_AS(cosine_sim(x, EmbeddingVector{1.0, 0.0, 0.0}), DimensionError);
  CHECK_THROWS_AS(cosine_sim(x, EmbeddingVector{0.0, 0.0}), DegenerateVectorError);
  CHECK_THROWS_AS(EmbeddingVector({0.0, 0.0}).normalized(), DegenerateVectorError);

  const PairEmbedding pair{x, y};
  CHECK(classify_pair(pair, EmbeddingVector{0.1, 0.9}) == 1);
  CHECK(classify_pair(pair, EmbeddingVector{0.9, 0.1}) == 0);
  // Exactly equidistant images go to the negative class.
  CHECK(pair_margin(pair, d) == Approx(0.0).margin(1e-15));
  CHECK(classify_pair(pair, d) == 0);
  CHECK(pair_margin(pair, EmbeddingVector{0.0, 1.0}) == Approx(1.0));
}

TEST_CASE("split names round-trip", "[embedding]") {
  for (auto s : {Split::train, Split::val, Split::test}) CHECK(parse_split(to_string(s)) == s);
  CHECK_THROWS_AS(parse_split("holdout"), InputError);
}
