#include "promptevo/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>

#include "promptevo/errors.hpp"

namespace promptevo {

std::string_view to_string(MetricId metric) {
  switch (metric) {
    case MetricId::accuracy: return "accuracy";
    case MetricId::f1_macro: return "f1_macro";
    case MetricId::inverse_bce: return "inverse_bce";
  }
  return "f1_macro";
}

MetricId parse_metric(std::string_view text) {
  if (text == "accuracy") return MetricId::accuracy;
  if (text == "f1_macro") return MetricId::f1_macro;
  if (text == "inverse_bce") return MetricId::inverse_bce;
  throw InputError("unknown metric '" + std::string(text) + "'");
}

namespace {

void check_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw InputError(std::string(what) + ": length mismatch (" + std::to_string(a) + " vs " +
                     std::to_string(b) + ")");
  }
  if (a == 0) throw InputError(std::string(what) + ": empty input");
}

void check_binary(std::span<const int> xs, const char* what) {
  for (int x : xs) {
    if (x != 0 && x != 1) throw InputError(std::string(what) + ": values must be 0 or 1");
  }
}

}  // namespace

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
  check_lengths(predictions.size(), labels.size(), "accuracy");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predictions[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double f1_macro(std::span<const int> predictions, std::span<const int> labels) {
  check_lengths(predictions.size(), labels.size(), "f1_macro");
  check_binary(predictions, "f1_macro");
  check_binary(labels, "f1_macro");
  // confusion[label][prediction]
  std::size_t confusion[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t i = 0; i < labels.size(); ++i) ++confusion[labels[i]][predictions[i]];

  double total = 0.0;
  int classes = 0;
  for (int c = 0; c < 2; ++c) {
    const std::size_t tp = confusion[c][c];
    const std::size_t fn = confusion[c][1 - c];
    const std::size_t fp = confusion[1 - c][c];
    if (tp + fn == 0 && tp + fp == 0) continue;
    const double precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    const double recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    total += precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    ++classes;
  }
  return total / classes;
}

double f1_macro_multiclass(std::span<const int> predictions, std::span<const int> labels) {
  check_lengths(predictions.size(), labels.size(), "f1_macro_multiclass");
  std::map<int, std::array<std::size_t, 3>> counts;  // class -> {tp, fp, fn}
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (predictions[i] == labels[i]) {
      ++counts[labels[i]][0];
    } else {
      ++counts[predictions[i]][1];
      ++counts[labels[i]][2];
    }
  }
  double total = 0.0;
  for (const auto& [cls, c] : counts) {
    const auto [tp, fp, fn] = c;
    const double denom = static_cast<double>(2 * tp + fp + fn);
    total += denom > 0.0 ? 2.0 * static_cast<double>(tp) / denom : 0.0;
  }
  return total / static_cast<double>(counts.size());
}

std::vector<double> pair_probabilities(const PairEmbedding& pair, const LabeledSet& images,
                                       const ProbabilityCalibration& calib) {
  if (images.empty()) throw InputError("pair_probabilities: empty split");
  if (!(calib.temperature > 0.0)) throw InputError("temperature must be positive");
  std::vector<double> out;
  out.reserve(images.size());
  for (const auto& v : images.vectors) {
    const double z = pair_margin(pair, v) / calib.temperature;
    const double p = 1.0 / (1.0 + std::exp(-z));
    out.push_back(std::clamp(p, kProbabilityClip, 1.0 - kProbabilityClip));
  }
  return out;
}

double inverse_bce(std::span<const double> probabilities, std::span<const int> labels) {
  check_lengths(probabilities.size(), labels.size(), "inverse_bce");
  check_binary(labels, "inverse_bce");
  double sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = probabilities[i];
    if (!(p > 0.0 && p < 1.0)) throw InputError("inverse_bce: probability outside (0, 1)");
    sum += labels[i] ? std::log(p) : std::log1p(-p);
  }
  const double bce = -sum / static_cast<double>(labels.size());
  return 1.0 / (1.0 + bce);
}

std::vector<int> predict_all(const PairEmbedding& pair_emb, const LabeledSet& split) {
  std::vector<int> out;
  out.reserve(split.size());
  for (const auto& v : split.vectors) out.push_back(classify_pair(pair_emb, v));
  return out;
}

FitnessScore evaluate_pair(const PairEmbedding& pair_emb, const LabeledSet& split, MetricId metric,
                           const ProbabilityCalibration& calib) {
  if (split.empty()) throw InputError("evaluate_pair: empty split");
  switch (metric) {
    case MetricId::accuracy:
      return {accuracy(predict_all(pair_emb, split), split.labels), metric};
    case MetricId::f1_macro:
      return {f1_macro(predict_all(pair_emb, split), split.labels), metric};
    case MetricId::inverse_bce:
      return {inverse_bce(pair_probabilities(pair_emb, split, calib), split.labels), metric};
  }
  return {};
}

double chance_level(MetricId metric, std::span<const int> labels) {
  switch (metric) {
    case MetricId::accuracy:
      return 0.5;
    case MetricId::f1_macro: {
      if (labels.empty()) throw InputError("chance_level: empty labels");
      const auto ones = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
      const int majority = 2 * ones >= labels.size() ? 1 : 0;
      const std::vector<int> constant(labels.size(), majority);
      return f1_macro(constant, labels);
    }
    case MetricId::inverse_bce:
      return 1.0 / (1.0 + std::log(2.0));
  }
  return 0.0;
}

}  // namespace promptevo
