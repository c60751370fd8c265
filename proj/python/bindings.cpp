// Python bindings. Structured values cross the boundary as JSON text or plain
// containers; the package's __init__ turns them into dicts and tuples.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "promptevo/buffer.hpp"
#include "promptevo/cli.hpp"
#include "promptevo/config.hpp"
#include "promptevo/errors.hpp"
#include "promptevo/metrics.hpp"
#include "promptevo/pipeline.hpp"
#include "promptevo/response_parser.hpp"
#include "promptevo/synthetic.hpp"

namespace py = pybind11;
using namespace promptevo;
using nlohmann::json;

namespace {

using PairTuple = std::pair<std::string, std::string>;

std::vector<PairTuple> to_tuples(const std::vector<PromptPair>& pairs) {
  std::vector<PairTuple> out;
  for (const auto& p : pairs) out.emplace_back(p.negative, p.positive);
  return out;
}

synthetic::TaskOptions task_options(std::size_t dim, std::size_t n_train, std::size_t n_val, std::size_t n_test,
                                    std::uint64_t seed) {
  synthetic::TaskOptions o;
  o.dim = dim;
  o.n_train = n_train;
  o.n_val = n_val;
  o.n_test = n_test;
  o.seed = seed;
  return o;
}

std::string make_task_json(std::size_t dim, std::size_t n_train, std::size_t n_val, std::size_t n_test,
                           std::uint64_t seed) {
  const auto task = synthetic::make_task(task_options(dim, n_train, n_val, n_test, seed));
  return json{{"dim", task.store.dim()},
              {"planted", {task.planted.negative, task.planted.positive}},
              {"counts",
               {{"train", task.store.count(Split::train)},
                {"val", task.store.count(Split::val)},
                {"test", task.store.count(Split::test)}}}}
      .dump();
}

/// Evolution against the synthetic oracle on a generated task; returns the run log and final buffer.
std::string evolve_synthetic_json(const std::string& config_json, std::size_t dim, std::size_t n_train,
                                  std::size_t n_val, std::size_t n_test, std::uint64_t task_seed) {
  const auto config = run_config_from_json(json::parse(config_json));
  config.validate();
  const auto task = synthetic::make_task(task_options(dim, n_train, n_val, n_test, task_seed));
  std::optional<OfflineRun> offline;
  {
    py::gil_scoped_release release;
    offline.emplace(evolve_offline(config, task.store, task.planted));
  }
  const auto& run = *offline;
  json log = json::array();
  for (const auto& r : run.result.log) log.push_back(to_json(r));
  json entries = json::array();
  for (const auto& e : run.result.state.buffer.entries()) {
    entries.push_back({{"negative", e.pair.negative},
                       {"positive", e.pair.positive},
                       {"fitness", e.fitness.value},
                       {"generation", e.generation_added}});
  }
  return json{{"alpha", run.alpha}, {"metric", std::string(to_string(run.metric))}, {"log", log},
              {"buffer", entries}}
      .dump();
}

py::tuple cli_run(const std::vector<std::string>& args) {
  std::vector<std::string> full{"promptevo"};
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : full) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = 0;
  {
    py::gil_scoped_release release;
    code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  }
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_promptevo, m) {
  m.doc() = "Evolutionary prompt-pair optimizer core";
  spdlog::set_level(spdlog::level::warn);

  // Translators run newest-first, so the subclasses are registered after their base.
  const auto error = py::register_exception<Error>(m, "Error");
  py::register_exception<ParseError>(m, "ParseError", error.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const json::exception& e) {
      py::set_error(PyExc_ValueError, e.what());
    }
  });

  m.def("accuracy", [](const std::vector<int>& p, const std::vector<int>& l) { return accuracy(p, l); },
        py::arg("predictions"), py::arg("labels"));
  m.def("f1_macro", [](const std::vector<int>& p, const std::vector<int>& l) { return f1_macro(p, l); },
        py::arg("predictions"), py::arg("labels"));
  m.def("inverse_bce", [](const std::vector<double>& p, const std::vector<int>& l) { return inverse_bce(p, l); },
        py::arg("probabilities"), py::arg("labels"));
  m.def("normalize_scores", [](const std::vector<double>& f) { return normalize_scores(f); }, py::arg("fitnesses"));
  m.def("parse_prompt_pairs", [](const std::string& text) { return to_tuples(parse_prompt_pairs(text)); },
        py::arg("text"));
  m.def("parse_group_indices",
        [](const std::string& text, std::size_t n) { return parse_group_indices(text, n); }, py::arg("text"),
        py::arg("expected_count"));
  m.def("default_config_json", [] { return to_json(RunConfig{}).dump(); });
  m.def("make_task_json", &make_task_json, py::arg("dim"), py::arg("n_train"), py::arg("n_val"), py::arg("n_test"),
        py::arg("seed"));
  m.def("evolve_synthetic_json", &evolve_synthetic_json, py::arg("config_json"), py::arg("dim"),
        py::arg("n_train"), py::arg("n_val"), py::arg("n_test"), py::arg("task_seed"));
  m.def("cli_run", &cli_run, py::arg("args"));
}
