#pragma once

/// @file metrics.hpp
/// Fitness metrics for a single prompt pair scored over a labeled set.
///
/// The probabilistic metric needs a probability per image; a pair only yields a
/// similarity margin, so margins are passed through a logistic link with
/// temperature `tau` and clipped to [1e-7, 1 - 1e-7]. "Inverse" BCE is
/// 1 / (1 + BCE), which is 1 at perfect calibration and decreases strictly.

#include <span>
#include <vector>

#include "promptevo/embedding.hpp"
#include "promptevo/types.hpp"

namespace promptevo {

inline constexpr double kProbabilityClip = 1e-7;

double accuracy(std::span<const int> predictions, std::span<const int> labels);

/// Macro-averaged F1 over classes {0, 1}. A class absent from both predictions and
/// labels is left out of the mean; zero denominators count as 0.
double f1_macro(std::span<const int> predictions, std::span<const int> labels);

/// Macro F1 over every class id seen in predictions or labels (any non-negative ids).
double f1_macro_multiclass(std::span<const int> predictions, std::span<const int> labels);

std::vector<double> pair_probabilities(const PairEmbedding& pair, const LabeledSet& images,
                                       const ProbabilityCalibration& calib);

double inverse_bce(std::span<const double> probabilities, std::span<const int> labels);

FitnessScore evaluate_pair(const PairEmbedding& pair_emb, const LabeledSet& split, MetricId metric,
                           const ProbabilityCalibration& calib);

/// Per-image predictions of one pair.
std::vector<int> predict_all(const PairEmbedding& pair_emb, const LabeledSet& split);

/// Score of an uninformative classifier under `metric` for the given labels:
/// 0.5 for accuracy, the all-majority-class F1-macro, and inverse BCE of p = 0.5.
double chance_level(MetricId metric, std::span<const int> labels);

}  // namespace promptevo
