#include "promptevo/buffer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "promptevo/errors.hpp"

namespace promptevo {

namespace {

auto eviction_key(const ScoredPair& e) {
  return std::tie(e.fitness.value, e.generation_added, e.pair.negative, e.pair.positive);
}

}  // namespace

MemoryBuffer::MemoryBuffer(double alpha, std::size_t cap) : alpha_(alpha), cap_(cap) {
  if (cap == 0) throw InputError("buffer cap must be positive");
  if (!std::isfinite(alpha)) throw InputError("buffer alpha must be finite");
}

MemoryBuffer MemoryBuffer::restore(double alpha, std::size_t cap, std::vector<ScoredPair> entries) {
  MemoryBuffer buffer(alpha, cap);
  if (entries.size() > cap) throw InputError("restored buffer exceeds its cap");
  for (const auto& e : entries) {
    if (!(e.fitness.value >= alpha)) throw InputError("restored entry below alpha");
  }
  buffer.entries_ = std::move(entries);
  buffer.reindex();
  if (buffer.index_.size() != buffer.entries_.size()) throw InputError("restored buffer has duplicate pairs");
  return buffer;
}

void MemoryBuffer::reindex() {
  index_.clear();
  for (std::size_t i = 0; i < entries_.size(); ++i) index_.emplace(entries_[i].pair, i);
}

BufferUpdate MemoryBuffer::update(std::span<const ScoredPair> scored) {
  BufferUpdate stats;
  for (const auto& candidate : scored) {
    if (!(candidate.fitness.value >= alpha_)) {  // also rejects NaN
      ++stats.below_threshold;
      continue;
    }
    if (auto it = index_.find(candidate.pair); it != index_.end()) {
      auto& existing = entries_[it->second];
      if (candidate.fitness.value > existing.fitness.value) {
        existing = candidate;
        ++stats.replaced;
      } else {
        ++stats.duplicates;
      }
      continue;
    }
    index_.emplace(candidate.pair, entries_.size());
    entries_.push_back(candidate);
    ++stats.inserted;
  }

  if (entries_.size() > cap_) {
    std::vector<std::size_t> order(entries_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return eviction_key(entries_[a]) < eviction_key(entries_[b]); });
    std::vector<bool> drop(entries_.size(), false);
    const std::size_t excess = entries_.size() - cap_;
    for (std::size_t i = 0; i < excess; ++i) drop[order[i]] = true;
    std::vector<ScoredPair> kept;
    kept.reserve(cap_);
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (drop[i]) stats.evicted.push_back(std::move(entries_[i]));
      else kept.push_back(std::move(entries_[i]));
    }
    entries_ = std::move(kept);
    reindex();
  }
  return stats;
}

const ScoredPair* MemoryBuffer::find(const PromptPair& pair) const {
  auto it = index_.find(pair);
  return it == index_.end() ? nullptr : &entries_[it->second];
}

std::optional<double> MemoryBuffer::best_fitness() const {
  if (entries_.empty()) return std::nullopt;
  double best = entries_.front().fitness.value;
  for (const auto& e : entries_) best = std::max(best, e.fitness.value);
  return best;
}

std::optional<double> MemoryBuffer::mean_fitness() const {
  if (entries_.empty()) return std::nullopt;
  double sum = 0.0;
  for (const auto& e : entries_) sum += e.fitness.value;
  return sum / static_cast<double>(entries_.size());
}

MemoryBuffer update_buffer(MemoryBuffer buffer, std::span<const ScoredPair> scored) {
  buffer.update(scored);
  return buffer;
}

std::string_view to_string(SelectionStrategy strategy) {
  switch (strategy) {
    case SelectionStrategy::roulette: return "roulette";
    case SelectionStrategy::best_n: return "best_n";
    case SelectionStrategy::random: return "random";
  }
  return "roulette";
}

SelectionStrategy parse_selection(std::string_view text) {
  if (text == "roulette") return SelectionStrategy::roulette;
  if (text == "best_n") return SelectionStrategy::best_n;
  if (text == "random") return SelectionStrategy::random;
  throw InputError("unknown selection strategy '" + std::string(text) + "'");
}

std::vector<ScoredPair> select_parents(const MemoryBuffer& buffer, std::size_t k, SelectionStrategy strategy,
                                       Rng& rng) {
  if (buffer.empty()) throw EmptyBufferError("cannot select parents from an empty buffer");
  if (k == 0) throw InputError("selection size must be at least 1");
  const auto& entries = buffer.entries();
  const std::size_t n = std::min(k, entries.size());
  std::vector<ScoredPair> out;
  out.reserve(n);

  switch (strategy) {
    case SelectionStrategy::best_n: {
      std::vector<std::size_t> order(entries.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return entries[a].fitness.value > entries[b].fitness.value;
      });
      for (std::size_t i = 0; i < n; ++i) out.push_back(entries[order[i]]);
      break;
    }
    case SelectionStrategy::random: {
      // Partial Fisher-Yates over indices.
      std::vector<std::size_t> idx(entries.size());
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      for (std::size_t i = 0; i < n; ++i) {
        const auto j = i + static_cast<std::size_t>(uniform_index(rng, idx.size() - i));
        std::swap(idx[i], idx[j]);
        out.push_back(entries[idx[i]]);
      }
      break;
    }
    case SelectionStrategy::roulette: {
      std::vector<double> weights(entries.size());
      for (std::size_t i = 0; i < entries.size(); ++i) {
        weights[i] = std::max(entries[i].fitness.value - buffer.alpha(), 0.0) + kRouletteEpsilon;
      }
      std::vector<bool> taken(entries.size(), false);
      for (std::size_t draw = 0; draw < n; ++draw) {
        double total = 0.0;
        for (std::size_t i = 0; i < entries.size(); ++i) {
          if (!taken[i]) total += weights[i];
        }
        double r = uniform01(rng) * total;
        std::size_t pick = entries.size();
        for (std::size_t i = 0; i < entries.size(); ++i) {
          if (taken[i]) continue;
          pick = i;  // last untaken entry absorbs rounding slack
          if (r < weights[i]) break;
          r -= weights[i];
        }
        taken[pick] = true;
        out.push_back(entries[pick]);
      }
      break;
    }
  }
  return out;
}

std::vector<int> normalize_scores(std::span<const double> fitnesses) {
  if (fitnesses.empty()) return {};
  const auto [lo_it, hi_it] = std::minmax_element(fitnesses.begin(), fitnesses.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  std::vector<int> out;
  out.reserve(fitnesses.size());
  for (double f : fitnesses) {
    if (!(hi > lo)) {
      out.push_back(90);
      continue;
    }
    const double mapped = 60.0 + 30.0 * (f - lo) / (hi - lo);
    out.push_back(std::clamp(static_cast<int>(std::floor(mapped + 0.5)), 60, 90));
  }
  return out;
}

}  // namespace promptevo
