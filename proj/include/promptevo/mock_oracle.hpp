#pragma once

// Offline oracle endpoints: a replaying fixture and a synthetic optimizer stand-in.

#include <cstdint>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "promptevo/oracle.hpp"
#include "promptevo/types.hpp"

namespace promptevo {

/// Returns canned responses in request order; throws FixtureExhausted past the end.
class FixtureOracle final : public OracleEndpoint {
 public:
  explicit FixtureOracle(std::vector<std::string> responses);
  /// Responses from `{"responses": ["...", ...]}`.
  static std::vector<std::string> responses_from_json(const nlohmann::json& doc);

  OracleResponse complete(const OracleRequest& request) override;
  std::size_t served() const;
  const std::vector<std::string>& prompts_seen() const noexcept { return prompts_; }

 private:
  std::vector<std::string> responses_;
  std::vector<std::string> prompts_;
  std::size_t next_ = 0;
  mutable std::mutex mutex_;
};

struct SyntheticOracleOptions {
  /// Pair the mutation step drifts toward (a synthetic task's planted pair).
  PromptPair target;
  std::size_t dim = 32;
  std::uint64_t seed = 0;
  /// Fraction of the way toward the target a child moves, scaled by the parent's score.
  double pull = 0.12;
  /// Scale of the random perturbation added to each child.
  double noise = 0.35;
  /// Spread of initial pairs around the target (larger is less informed).
  double init_noise = 3.0;
  /// Cosine between both members above which the crowding answer groups two pairs.
  double merge_threshold = 0.80;
};

/// Deterministic in (prompt, request seed, options.seed) and stateless across calls, so a
/// resumed run sees exactly the responses an uninterrupted one would.
///
/// Recognizes the three request kinds by their format instructions:
///  - grouping (`list[list[`): answers with greedy cosine clusters after a reasoning preamble;
///  - mutation (numbered `Score:` lines): children of score-weighted parents, pulled toward
///    the target in proportion to the parent's normalized score;
///  - anything else: `Give N ...` fresh pairs scattered around the target.
class SyntheticOracle final : public OracleEndpoint {
 public:
  explicit SyntheticOracle(SyntheticOracleOptions options) : options_(std::move(options)) {}
  OracleResponse complete(const OracleRequest& request) override;

 private:
  SyntheticOracleOptions options_;
};

}  // namespace promptevo
