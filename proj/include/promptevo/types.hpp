#pragma once

// Value types shared across the optimizer stages.

#include <compare>
#include <cstddef>
#include <functional>
#include <string>
#include <string_view>

namespace promptevo {

/// One (negative, positive) description pair. Identity is the exact byte pair.
struct PromptPair {
  std::string negative;
  std::string positive;

  friend auto operator<=>(const PromptPair&, const PromptPair&) = default;
};

struct PromptPairHash {
  std::size_t operator()(const PromptPair& p) const noexcept {
    const std::size_t a = std::hash<std::string>{}(p.negative);
    const std::size_t b = std::hash<std::string>{}(p.positive);
    return a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  }
};

enum class MetricId { accuracy, f1_macro, inverse_bce };

std::string_view to_string(MetricId metric);
MetricId parse_metric(std::string_view text);

struct FitnessScore {
  double value = 0.0;
  MetricId metric = MetricId::f1_macro;
};

/// Temperature applied to similarity margins before the logistic link.
struct ProbabilityCalibration {
  double temperature = 0.01;
};

struct ScoredPair {
  PromptPair pair;
  FitnessScore fitness;
  int generation_added = 0;
};

}  // namespace promptevo
