#pragma once

// Oracle-guided de-duplication of the final buffer: pairs the oracle groups as the same
// observation collapse to the group's fittest member, batch by batch over several
// reshuffled rounds.

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "promptevo/buffer.hpp"
#include "promptevo/oracle.hpp"
#include "promptevo/templates.hpp"

namespace promptevo {

struct CrowdingPlan {
  std::size_t batch_size = 30;
  int rounds = 3;
  std::uint64_t shuffle_seed = 0;

  void validate() const;
};

struct CrowdBatchOptions {
  std::string task_description;
  std::size_t max_batch = 30;
  /// Oracle requests before falling back to keeping the batch intact.
  int attempts = 2;
  std::int64_t seed = 0;
};

struct CrowdBatchResult {
  /// One pair per group, ordered by the group's first batch position.
  std::vector<ScoredPair> survivors;
  /// Groups as 0-based batch positions, aligned with `survivors`.
  std::vector<std::vector<std::size_t>> groups;
  /// Batch position of each survivor.
  std::vector<std::size_t> winners;
  bool fallback = false;
};

/// Highest fitness wins; ties go to the lexicographically smaller positive text, then negative.
bool crowding_prefers(const ScoredPair& a, const ScoredPair& b);

/// Requires 2 <= |batch| <= max_batch. Oracle outages propagate.
CrowdBatchResult crowd_batch(std::span<const ScoredPair> batch, OracleClient& oracle,
                             const MetaPromptTemplate& tmpl, const CrowdBatchOptions& options = {});

struct CrowdingRound {
  int round = 0;
  std::size_t input = 0;
  std::size_t output = 0;
  /// Groups of pair ids (positions in the original buffer).
  std::vector<std::vector<std::size_t>> groups;
  std::size_t fallback_batches = 0;
};

struct OptimizedPromptSet {
  /// Survivors with their pair ids, in buffer order.
  std::vector<std::pair<std::size_t, ScoredPair>> entries;
  /// Survivor id -> ids it absorbed (transitively, across rounds).
  std::map<std::size_t, std::vector<std::size_t>> provenance;

  std::vector<ScoredPair> pairs() const;
};

struct CrowdingResult {
  OptimizedPromptSet set;
  std::vector<CrowdingRound> rounds;
};

nlohmann::json to_json(const CrowdingResult& result);

CrowdingResult crowd(const MemoryBuffer& buffer, const CrowdingPlan& plan, OracleClient& oracle,
                     const MetaPromptTemplate& tmpl, const std::string& task_description = {},
                     const std::function<void(const CrowdingRound&)>& on_round = {});

/// Same, over an explicit list of scored pairs (ids are list positions).
CrowdingResult crowd(std::span<const ScoredPair> entries, const CrowdingPlan& plan, OracleClient& oracle,
                     const MetaPromptTemplate& tmpl, const std::string& task_description = {},
                     const std::function<void(const CrowdingRound&)>& on_round = {});

}  // namespace promptevo
