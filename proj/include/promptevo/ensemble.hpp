#pragma once

/// @file ensemble.hpp
/// Weighted majority vote over prompt-pair classifiers and its one-vs-rest
/// multiclass composition.
///
/// A binary ensemble predicts 1 iff sum_j w_j h_j(x) > (1/2) sum_j w_j, strictly.
/// The multiclass model picks the class whose ensemble has the largest normalized
/// vote margin, breaking ties toward the smaller class id.

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "promptevo/embedding.hpp"
#include "promptevo/text_embedding.hpp"
#include "promptevo/types.hpp"

namespace promptevo {

struct EnsembleMember {
  PromptPair pair;
  PairEmbedding embedding;
  double weight = 0.0;
};

class WeightedEnsemble {
 public:
  /// Throws InputError unless every weight is finite and non-negative and one is positive.
  explicit WeightedEnsemble(std::vector<EnsembleMember> members);

  const std::vector<EnsembleMember>& members() const noexcept { return members_; }
  std::size_t size() const noexcept { return members_.size(); }
  double total_weight() const noexcept { return total_weight_; }

  std::vector<int> votes(const EmbeddingVector& image) const;
  int predict(const EmbeddingVector& image) const;
  /// Weighted fraction of members voting 1, in [0, 1].
  double vote_margin(const EmbeddingVector& image) const;

 private:
  std::vector<EnsembleMember> members_;
  double total_weight_ = 0.0;
};

/// Lowest validation score a member may have and still vote: random guessing for
/// the metric (0.5 for accuracy and F1-macro, inverse BCE of p = 1/2).
double ensemble_floor(MetricId metric);

struct MemberFit {
  PromptPair pair;
  double weight = 0.0;
  bool kept = false;
};

struct FitResult {
  WeightedEnsemble ensemble;
  std::vector<MemberFit> members;
  /// Every member was below the floor, so only the best one was kept.
  bool kept_best_only = false;
};

/// Weights are each pair's fitness on `weight_split`. Throws InputError for an empty
/// pair list or split.
FitResult fit_weights(std::span<const ScoredPair> prompt_set, PromptEncoder& encoder, const LabeledSet& weight_split,
                      MetricId metric, const ProbabilityCalibration& calib);

class OneVsRestModel {
 public:
  /// Needs >= 2 distinct class ids, one ensemble each.
  OneVsRestModel(std::vector<int> class_ids, std::vector<WeightedEnsemble> ensembles);

  const std::vector<int>& class_ids() const noexcept { return class_ids_; }
  const std::vector<WeightedEnsemble>& ensembles() const noexcept { return ensembles_; }
  int predict(const EmbeddingVector& image) const;

 private:
  std::vector<int> class_ids_;
  std::vector<WeightedEnsemble> ensembles_;
};

struct MemberEvaluation {
  PromptPair pair;
  double weight = 0.0;
  double solo = 0.0;
  /// Fraction of images where the member's vote equals the ensemble decision.
  double agreement = 0.0;
};

struct EnsembleReport {
  MetricId metric = MetricId::f1_macro;
  /// Ensemble score under `metric`; inverse BCE treats the vote margin as a probability.
  double value = 0.0;
  double accuracy = 0.0;
  double f1_macro = 0.0;
  /// confusion[label][prediction]
  std::vector<std::vector<std::size_t>> confusion;
  std::vector<MemberEvaluation> members;
  std::size_t size = 0;
};

nlohmann::json to_json(const EnsembleReport& report);

EnsembleReport evaluate_ensemble(const WeightedEnsemble& ensemble, const LabeledSet& split, MetricId metric,
                                 const ProbabilityCalibration& calib = {});

struct MulticlassReport {
  double accuracy = 0.0;
  double f1_macro = 0.0;
  std::vector<int> class_ids;
  std::vector<std::vector<std::size_t>> confusion;
};

nlohmann::json to_json(const MulticlassReport& report);

MulticlassReport evaluate_multiclass(const OneVsRestModel& model, std::span<const EmbeddingVector> images,
                                     std::span<const int> labels);

/// Persisted form: members with text and weight, metric, calibration and store model.
struct EnsembleFile {
  std::vector<std::pair<PromptPair, double>> members;
  MetricId metric = MetricId::f1_macro;
  ProbabilityCalibration calib;
  std::string store_model;
};

nlohmann::json to_json(const EnsembleFile& file);
EnsembleFile ensemble_file_from_json(const nlohmann::json& doc);
EnsembleFile describe(const WeightedEnsemble& ensemble, MetricId metric, const ProbabilityCalibration& calib,
                      std::string store_model);
/// Re-embeds member texts through `encoder`.
WeightedEnsemble load_ensemble(const EnsembleFile& file, PromptEncoder& encoder);

}  // namespace promptevo
