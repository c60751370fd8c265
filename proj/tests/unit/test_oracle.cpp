#include <catch2/catch_amalgamated.hpp>

#include <atomic>

#include "promptevo/errors.hpp"
#include "promptevo/mock_oracle.hpp"
#include "promptevo/oracle.hpp"
#include "promptevo/response_parser.hpp"
#include "promptevo/synthetic.hpp"
#include "promptevo/templates.hpp"
#include "support.hpp"

using namespace promptevo;
using namespace promptevo::testing;
using nlohmann::json;

namespace {

RetryPolicy fast_policy(int attempts = 3) {
  RetryPolicy p;
  p.max_attempts = attempts;
  p.initial_backoff = std::chrono::milliseconds(1);
  return p;
}

class ScriptedEndpoint final : public OracleEndpoint {
 public:
  explicit ScriptedEndpoint(int transient_failures) : remaining_(transient_failures) {}
  OracleResponse complete(const OracleRequest& request) override {
    ++calls;
    if (remaining_-- > 0) throw TransientOracleError("busy");
    return {"echo: " + request.prompt, {3, 4}};
  }
  int calls = 0;

 private:
  int remaining_;
};

}  // namespace

TEST_CASE("client retries transient failures and records the transcript", "[oracle]") {
  auto endpoint = std::make_shared<ScriptedEndpoint>(2);
  OracleClient client(endpoint, fast_policy());
  OracleRequest req;
  req.prompt = "hello";
  req.seed = 11;
  const auto res = client.generate(req);
  CHECK(res.text == "echo: hello");
  CHECK(endpoint->calls == 3);
  REQUIRE(client.transcript().size() == 1);
  const auto entry = client.transcript().entries()[0];
  CHECK(entry["attempts"] == 3);
  CHECK(entry["request"]["seed"] == 11);
  CHECK(entry["response"]["text"] == "echo: hello");
  CHECK(entry["response"]["completion_tokens"] == 4);
}

TEST_CASE("client gives up after the attempt budget", "[oracle]") {
  auto endpoint = std::make_shared<ScriptedEndpoint>(10);
  OracleClient client(endpoint, fast_policy(2));
  OracleRequest req;
  req.prompt = "x";
  CHECK_THROWS_AS(client.generate(req), OracleUnavailable);
  CHECK(endpoint->calls == 2);
  CHECK(client.transcript().entries().back().contains("error"));
}

TEST_CASE("oversized and empty prompts never reach the endpoint", "[oracle]") {
  auto endpoint = std::make_shared<ScriptedEndpoint>(0);
  auto policy = fast_policy();
  policy.max_prompt_chars = 10;
  OracleClient client(endpoint, policy);
  OracleRequest big;
  big.prompt = std::string(11, 'a');
  CHECK_THROWS_AS(client.generate(big), PromptTooLarge);
  CHECK_THROWS_AS(client.generate(OracleRequest{}), InputError);
  CHECK(endpoint->calls == 0);
}

TEST_CASE("transcript mirrors entries to a file", "[oracle]") {
  TempDir dir;
  const auto path = (dir / "transcript.jsonl").string();
  {
    auto log = std::make_shared<TranscriptLog>(path);
    OracleClient client(std::make_shared<ScriptedEndpoint>(0), fast_policy(), log);
    OracleRequest req;
    req.prompt = "a";
    client.generate(req);
    req.prompt = "b";
    client.generate(req);
  }
  std::istringstream lines(read_file(dir / "transcript.jsonl"));
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    const auto doc = json::parse(line);
    CHECK(doc.contains("request"));
    ++n;
  }
  CHECK(n == 2);
}

TEST_CASE("http endpoint speaks the generate wire format", "[oracle]") {
  LocalServer srv;
  json seen;
  std::atomic<int> hits{0};
  srv.server().Post("/v1/generate", [&](const httplib::Request& req, httplib::Response& res) {
    seen = json::parse(req.body);
    const auto prompt = seen.at("prompt").get<std::string>();
    ++hits;
    if (prompt == "flaky" && hits < 3) {
      res.status = 503;
      return;
    }
    if (prompt == "huge") {
      res.status = 413;
      return;
    }
    if (prompt == "forbidden") {
      res.status = 403;
      return;
    }
    if (prompt == "slow") {
      res.status = 429;
      return;
    }
    res.set_content(json{{"text", "ok:" + prompt}, {"prompt_tokens", 5}, {"completion_tokens", 2}}.dump(),
                    "application/json");
  });
  srv.start();

  OracleClient client(std::make_shared<HttpOracleEndpoint>(srv.url(), "k"), fast_policy());
  OracleRequest req;
  req.prompt = "hi";
  req.max_tokens = 77;
  req.seed = 5;
  req.params = {{"temperature", 0.7}};
  const auto res = client.generate(req);
  CHECK(res.text == "ok:hi");
  CHECK(res.usage.prompt_tokens == 5);
  CHECK(seen["max_tokens"] == 77);
  CHECK(seen["seed"] == 5);
  CHECK(seen["params"]["temperature"] == 0.7);

  hits = 0;
  req.prompt = "flaky";
  CHECK(client.generate(req).text == "ok:flaky");
  CHECK(hits == 3);

  req.prompt = "huge";
  CHECK_THROWS_AS(client.generate(req), PromptTooLarge);
  req.prompt = "forbidden";
  CHECK_THROWS_AS(client.generate(req), OracleUnavailable);
  hits = 0;
  req.prompt = "slow";
  CHECK_THROWS_AS(client.generate(req), OracleUnavailable);
  CHECK(hits == 3);
}

TEST_CASE("fixture oracle replays in order, then runs dry", "[oracle]") {
  const auto responses = FixtureOracle::responses_from_json(json{{"responses", {"one", "two"}}});
  auto fixture = std::make_shared<FixtureOracle>(responses);
  OracleClient client(fixture, fast_policy());
  OracleRequest req;
  req.prompt = "p1";
  CHECK(client.generate(req).text == "one");
  req.prompt = "p2";
  CHECK(client.generate(req).text == "two");
  CHECK_THROWS_AS(client.generate(req), FixtureExhausted);
  CHECK(fixture->served() == 2);
  CHECK(fixture->prompts_seen() == std::vector<std::string>{"p1", "p2", "p2"});
  CHECK_THROWS(FixtureOracle::responses_from_json(json{{"responses", "nope"}}));
}

TEST_CASE("synthetic oracle answers each request kind parseably and deterministically", "[oracle]") {
  const auto task = synthetic::make_task({});
  SyntheticOracleOptions opts;
  opts.target = task.planted;
  opts.seed = 3;
  SyntheticOracle oracle(opts);

  OracleRequest init;
  init.prompt = render_init_prompt(MetaPromptTemplate::builtin(TemplateKind::init), 7, "toy");
  init.seed = 1;
  const auto a = oracle.complete(init);
  CHECK(a.text == oracle.complete(init).text);
  const auto pairs = parse_prompt_pairs(a.text);
  CHECK(pairs.size() == 7);
  for (const auto& p : pairs) CHECK(synthetic::decode_profile(p.positive, 32).has_value());

  ExemplarBlock block;
  for (std::size_t i = 0; i < 3; ++i) block.push_back({pairs[i], 60 + 15 * static_cast<int>(i)});
  OracleRequest mutate;
  mutate.prompt = render_mutation_prompt(MetaPromptTemplate::builtin(TemplateKind::mutate), block, 5, "toy");
  mutate.seed = 2;
  const auto m = oracle.complete(mutate);
  CHECK(m.text.find("Strategy") != std::string::npos);
  CHECK(m.text.find("```python") != std::string::npos);
  CHECK(parse_prompt_pairs(m.text).size() == 5);
  auto other = mutate;
  other.seed = 3;
  CHECK(oracle.complete(other).text != m.text);

  std::vector<PromptPair> batch(pairs.begin(), pairs.end());
  batch.push_back(pairs[0]);
  OracleRequest crowd_req;
  crowd_req.prompt = render_crowd_prompt(MetaPromptTemplate::builtin(TemplateKind::crowd), batch);
  const auto c = oracle.complete(crowd_req);
  const auto groups = parse_group_indices(c.text, batch.size());
  bool together = false;
  for (const auto& g : groups) {
    if (std::find(g.begin(), g.end(), 0u) != g.end()) together = std::find(g.begin(), g.end(), 7u) != g.end();
  }
  CHECK(together);
}
