#include "promptevo/crowding.hpp"

#include <algorithm>

#include <spdlog/spdlog.h>

#include "promptevo/errors.hpp"
#include "promptevo/random.hpp"
#include "promptevo/response_parser.hpp"

namespace promptevo {

using nlohmann::json;

void CrowdingPlan::validate() const {
  std::vector<std::string> bad;
  if (batch_size < 2) bad.emplace_back("crowding.batch_size");
  if (rounds < 1) bad.emplace_back("crowding.rounds");
  if (!bad.empty()) throw ConfigError(bad, "crowding plan needs batch_size >= 2 and rounds >= 1");
}

bool crowding_prefers(const ScoredPair& a, const ScoredPair& b) {
  if (a.fitness.value != b.fitness.value) return a.fitness.value > b.fitness.value;
  if (a.pair.positive != b.pair.positive) return a.pair.positive < b.pair.positive;
  return a.pair.negative < b.pair.negative;
}

CrowdBatchResult crowd_batch(std::span<const ScoredPair> batch, OracleClient& oracle,
                             const MetaPromptTemplate& tmpl, const CrowdBatchOptions& options) {
  if (batch.size() < 2 || batch.size() > options.max_batch) {
    throw InputError("crowding batch size " + std::to_string(batch.size()) + " outside [2, " +
                     std::to_string(options.max_batch) + "]");
  }
  std::vector<PromptPair> pairs;
  for (const auto& e : batch) pairs.push_back(e.pair);
  const auto prompt = render_crowd_prompt(tmpl, pairs, options.task_description, options.max_batch);

  std::vector<std::vector<std::size_t>> groups;
  CrowdBatchResult result;
  for (int attempt = 0; attempt < options.attempts && groups.empty(); ++attempt) {
    OracleRequest request;
    request.prompt = prompt;
    request.seed = options.seed + static_cast<std::int64_t>(attempt) * 1'000'003;
    const auto response = oracle.generate(request);
    try {
      groups = parse_group_indices(response.text, batch.size());
    } catch (const ParseError& e) {
      spdlog::warn("unusable grouping answer (attempt {}/{}): {}", attempt + 1, options.attempts, e.what());
    }
  }
  if (groups.empty()) {
    result.fallback = true;
    for (std::size_t i = 0; i < batch.size(); ++i) groups.push_back({i});
  }

  for (auto& g : groups) std::sort(g.begin(), g.end());
  std::sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
  for (const auto& g : groups) {
    std::size_t best = g.front();
    for (std::size_t i : g) {
      if (crowding_prefers(batch[i], batch[best])) best = i;
    }
    result.winners.push_back(best);
    result.survivors.push_back(batch[best]);
  }
  result.groups = std::move(groups);
  return result;
}

std::vector<ScoredPair> OptimizedPromptSet::pairs() const {
  std::vector<ScoredPair> out;
  out.reserve(entries.size());
  for (const auto& [id, e] : entries) out.push_back(e);
  return out;
}

json to_json(const CrowdingResult& result) {
  json rounds = json::array();
  for (const auto& r : result.rounds) {
    rounds.push_back({{"round", r.round},
                      {"input", r.input},
                      {"output", r.output},
                      {"groups", r.groups},
                      {"fallback_batches", r.fallback_batches}});
  }
  json final_set = json::array();
  for (const auto& [id, e] : result.set.entries) {
    const auto it = result.set.provenance.find(id);
    final_set.push_back({{"id", id},
                         {"negative", e.pair.negative},
                         {"positive", e.pair.positive},
                         {"fitness", e.fitness.value},
                         {"metric", to_string(e.fitness.metric)},
                         {"generation_added", e.generation_added},
                         {"absorbed", it == result.set.provenance.end() ? json::array() : json(it->second)}});
  }
  return {{"rounds", std::move(rounds)}, {"final", std::move(final_set)}};
}

CrowdingResult crowd(const MemoryBuffer& buffer, const CrowdingPlan& plan, OracleClient& oracle,
                     const MetaPromptTemplate& tmpl, const std::string& task_description,
                     const std::function<void(const CrowdingRound&)>& on_round) {
  return crowd(std::span<const ScoredPair>(buffer.entries()), plan, oracle, tmpl, task_description, on_round);
}

CrowdingResult crowd(std::span<const ScoredPair> entries, const CrowdingPlan& plan, OracleClient& oracle,
                     const MetaPromptTemplate& tmpl, const std::string& task_description,
                     const std::function<void(const CrowdingRound&)>& on_round) {
  plan.validate();
  if (entries.empty()) throw InputError("cannot crowd an empty buffer");

  std::vector<std::size_t> alive(entries.size());
  for (std::size_t i = 0; i < alive.size(); ++i) alive[i] = i;
  std::map<std::size_t, std::vector<std::size_t>> absorbed;
  CrowdingResult result;

  for (int round = 1; round <= plan.rounds; ++round) {
    CrowdingRound record;
    record.round = round;
    record.input = alive.size();
    Rng rng(plan.shuffle_seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(round));
    shuffle(alive, rng);

    // Near-equal batch sizes so no batch is left as a lone remainder.
    const std::size_t n = alive.size();
    const std::size_t batches = (n + plan.batch_size - 1) / plan.batch_size;
    std::vector<std::size_t> next;
    std::size_t start = 0;
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t len = n / batches + (b < n % batches ? 1 : 0);
      std::vector<std::size_t> ids(alive.begin() + static_cast<std::ptrdiff_t>(start),
                                   alive.begin() + static_cast<std::ptrdiff_t>(start + len));
      start += len;
      if (ids.size() < 2) {
        for (auto id : ids) record.groups.push_back({id});
        next.insert(next.end(), ids.begin(), ids.end());
        continue;
      }
      std::vector<ScoredPair> batch;
      for (auto id : ids) batch.push_back(entries[id]);
      CrowdBatchOptions options;
      options.task_description = task_description;
      options.max_batch = plan.batch_size;
      options.seed = static_cast<std::int64_t>(plan.shuffle_seed) + round * 1000 + static_cast<std::int64_t>(b);
      const auto out = crowd_batch(batch, oracle, tmpl, options);
      if (out.fallback) ++record.fallback_batches;
      for (std::size_t g = 0; g < out.groups.size(); ++g) {
        std::vector<std::size_t> group_ids;
        for (auto pos : out.groups[g]) group_ids.push_back(ids[pos]);
        record.groups.push_back(group_ids);
        const std::size_t winner = ids[out.winners[g]];
        for (auto id : group_ids) {
          if (id == winner) continue;
          auto& into = absorbed[winner];
          into.push_back(id);
          if (auto it = absorbed.find(id); it != absorbed.end()) {
            into.insert(into.end(), it->second.begin(), it->second.end());
            absorbed.erase(it);
          }
        }
        next.push_back(winner);
      }
    }
    alive = std::move(next);
    record.output = alive.size();
    if (on_round) on_round(record);
    result.rounds.push_back(std::move(record));
  }

  std::sort(alive.begin(), alive.end());
  for (auto id : alive) {
    result.set.entries.emplace_back(id, entries[id]);
    if (auto it = absorbed.find(id); it != absorbed.end()) {
      auto ids = it->second;
      std::sort(ids.begin(), ids.end());
      result.set.provenance[id] = std::move(ids);
    }
  }
  return result;
}

}  // namespace promptevo
