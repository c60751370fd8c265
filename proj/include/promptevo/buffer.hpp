#pragma once

/// @file buffer.hpp
/// Threshold-gated, capped pool of scored pairs plus the parent-selection strategies
/// and exemplar score normalization used by the mutation step.

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "promptevo/random.hpp"
#include "promptevo/types.hpp"

namespace promptevo {

struct BufferUpdate {
  std::size_t inserted = 0;
  /// Existing entries overwritten by a strictly fitter copy of the same pair.
  std::size_t replaced = 0;
  std::size_t below_threshold = 0;
  /// Incoming copies of a pair that did not beat the stored fitness.
  std::size_t duplicates = 0;
  std::vector<ScoredPair> evicted;

  std::size_t kept() const noexcept { return inserted + replaced; }
};

/// Entries are kept in insertion order; a replacement keeps its slot.
///
/// Admission: fitness >= alpha. Identity collisions keep the higher fitness (an
/// equal score leaves the stored entry alone). Over capacity, entries are evicted
/// smallest-first by (fitness, generation_added, negative, positive).
class MemoryBuffer {
 public:
  MemoryBuffer(double alpha, std::size_t cap);

  /// Rebuilds a buffer from persisted entries, re-checking every invariant.
  static MemoryBuffer restore(double alpha, std::size_t cap, std::vector<ScoredPair> entries);

  BufferUpdate update(std::span<const ScoredPair> scored);

  double alpha() const noexcept { return alpha_; }
  std::size_t cap() const noexcept { return cap_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const std::vector<ScoredPair>& entries() const noexcept { return entries_; }
  const ScoredPair* find(const PromptPair& pair) const;

  std::optional<double> best_fitness() const;
  std::optional<double> mean_fitness() const;

 private:
  void reindex();

  double alpha_;
  std::size_t cap_;
  std::vector<ScoredPair> entries_;
  std::unordered_map<PromptPair, std::size_t, PromptPairHash> index_;
};

/// Value-semantics form of MemoryBuffer::update.
MemoryBuffer update_buffer(MemoryBuffer buffer, std::span<const ScoredPair> scored);

enum class SelectionStrategy { roulette, best_n, random };

std::string_view to_string(SelectionStrategy strategy);
SelectionStrategy parse_selection(std::string_view text);

inline constexpr double kRouletteEpsilon = 1e-9;

/// Draws min(k, size) distinct entries.
///  - roulette: each draw proportional to fitness - alpha + 1e-9 among the remaining entries
///  - best_n: highest fitness first, ties by insertion order
///  - random: uniform
/// Returned in draw order. Throws EmptyBufferError on an empty buffer.
std::vector<ScoredPair> select_parents(const MemoryBuffer& buffer, std::size_t k, SelectionStrategy strategy,
                                       Rng& rng);

/// Affine min-max map onto [60, 90], rounded half up. All-equal input maps to 90.
std::vector<int> normalize_scores(std::span<const double> fitnesses);

}  // namespace promptevo
