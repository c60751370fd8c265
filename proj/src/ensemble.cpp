#include "promptevo/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <spdlog/spdlog.h>

#include "promptevo/errors.hpp"
#include "promptevo/metrics.hpp"

namespace promptevo {

using nlohmann::json;

WeightedEnsemble::WeightedEnsemble(std::vector<EnsembleMember> members) : members_(std::move(members)) {
  bool any_positive = false;
  for (const auto& m : members_) {
    if (!std::isfinite(m.weight) || m.weight < 0.0) throw InputError("ensemble weights must be finite and >= 0");
    any_positive = any_positive || m.weight > 0.0;
    total_weight_ += m.weight;
  }
  if (!any_positive) throw InputError("ensemble needs at least one member with positive weight");
}

std::vector<int> WeightedEnsemble::votes(const EmbeddingVector& image) const {
  std::vector<int> out;
  out.reserve(members_.size());
  for (const auto& m : members_) out.push_back(classify_pair(m.embedding, image));
  return out;
}

int WeightedEnsemble::predict(const EmbeddingVector& image) const {
  double yes = 0.0;
  for (const auto& m : members_) yes += m.weight * classify_pair(m.embedding, image);
  return yes > 0.5 * total_weight_ ? 1 : 0;
}

double WeightedEnsemble::vote_margin(const EmbeddingVector& image) const {
  double yes = 0.0;
  for (const auto& m : members_) yes += m.weight * classify_pair(m.embedding, image);
  return std::clamp(yes / total_weight_, 0.0, 1.0);
}

double ensemble_floor(MetricId metric) {
  switch (metric) {
    case MetricId::accuracy:
    case MetricId::f1_macro: return 0.5;
    case MetricId::inverse_bce: return 1.0 / (1.0 + std::log(2.0));
  }
  return 0.5;
}

FitResult fit_weights(std::span<const ScoredPair> prompt_set, PromptEncoder& encoder, const LabeledSet& weight_split,
                      MetricId metric, const ProbabilityCalibration& calib) {
  if (prompt_set.empty()) throw InputError("fit_weights: empty prompt set");
  if (weight_split.empty()) throw InputError("fit_weights: empty weighting split");
  std::vector<PromptPair> pairs;
  for (const auto& e : prompt_set) pairs.push_back(e.pair);
  const auto embeddings = encoder.encode(pairs);
  const double floor = ensemble_floor(metric);

  std::vector<MemberFit> fits;
  std::vector<EnsembleMember> kept;
  std::size_t best = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double w = evaluate_pair(embeddings[i], weight_split, metric, calib).value;
    const bool keep = w >= floor && w > 0.0;
    fits.push_back({pairs[i], w, keep});
    if (keep) kept.push_back({pairs[i], embeddings[i], w});
    if (w > fits[best].weight) best = i;
    if (!keep) spdlog::info("dropping member {} (weight {:.4f} below floor {:.4f})", i, w, floor);
  }
  bool best_only = false;
  if (kept.empty()) {
    // Nothing clears the floor: fall back to the single best member with a usable weight.
    best_only = true;
    fits[best].kept = true;
    const double w = fits[best].weight > 0.0 ? fits[best].weight : 1.0;
    kept.push_back({pairs[best], embeddings[best], w});
  }
  return {WeightedEnsemble(std::move(kept)), std::move(fits), best_only};
}

OneVsRestModel::OneVsRestModel(std::vector<int> class_ids, std::vector<WeightedEnsemble> ensembles)
    : class_ids_(std::move(class_ids)), ensembles_(std::move(ensembles)) {
  if (class_ids_.size() < 2) throw InputError("one-vs-rest model needs at least two classes");
  if (class_ids_.size() != ensembles_.size()) throw InputError("one ensemble per class id is required");
  if (std::set<int>(class_ids_.begin(), class_ids_.end()).size() != class_ids_.size()) {
    throw InputError("class ids must be distinct");
  }
}

int OneVsRestModel::predict(const EmbeddingVector& image) const {
  std::size_t best = 0;
  double best_margin = -1.0;
  for (std::size_t i = 0; i < ensembles_.size(); ++i) {
    const double m = ensembles_[i].vote_margin(image);
    if (m > best_margin || (m == best_margin && class_ids_[i] < class_ids_[best])) {
      best = i;
      best_margin = m;
    }
  }
  return class_ids_[best];
}

json to_json(const EnsembleReport& r) {
  json members = json::array();
  for (const auto& m : r.members) {
    members.push_back({{"negative", m.pair.negative},
                       {"positive", m.pair.positive},
                       {"weight", m.weight},
                       {"solo", m.solo},
                       {"agreement", m.agreement}});
  }
  return {{"metric", to_string(r.metric)}, {"value", r.value},         {"accuracy", r.accuracy},
          {"f1_macro", r.f1_macro},        {"confusion", r.confusion}, {"members", std::move(members)},
          {"size", r.size}};
}

EnsembleReport evaluate_ensemble(const WeightedEnsemble& ensemble, const LabeledSet& split, MetricId metric,
                                 const ProbabilityCalibration& calib) {
  if (split.empty()) throw InputError("evaluate_ensemble: empty split");
  EnsembleReport report;
  report.metric = metric;
  report.size = split.size();
  report.confusion.assign(2, std::vector<std::size_t>(2, 0));

  std::vector<int> predictions;
  std::vector<double> margins;
  std::vector<std::size_t> agree(ensemble.size(), 0);
  for (std::size_t i = 0; i < split.size(); ++i) {
    const auto votes = ensemble.votes(split.vectors[i]);
    double yes = 0.0;
    for (std::size_t j = 0; j < votes.size(); ++j) yes += ensemble.members()[j].weight * votes[j];
    const int p = yes > 0.5 * ensemble.total_weight() ? 1 : 0;
    predictions.push_back(p);
    margins.push_back(std::clamp(yes / ensemble.total_weight(), kProbabilityClip, 1.0 - kProbabilityClip));
    ++report.confusion[static_cast<std::size_t>(split.labels[i])][static_cast<std::size_t>(p)];
    for (std::size_t j = 0; j < votes.size(); ++j) agree[j] += votes[j] == p;
  }
  report.accuracy = accuracy(predictions, split.labels);
  report.f1_macro = f1_macro(predictions, split.labels);
  switch (metric) {
    case MetricId::accuracy: report.value = report.accuracy; break;
    case MetricId::f1_macro: report.value = report.f1_macro; break;
    case MetricId::inverse_bce: report.value = inverse_bce(margins, split.labels); break;
  }
  for (std::size_t j = 0; j < ensemble.size(); ++j) {
    const auto& m = ensemble.members()[j];
    report.members.push_back({m.pair, m.weight, evaluate_pair(m.embedding, split, metric, calib).value,
                              static_cast<double>(agree[j]) / static_cast<double>(split.size())});
  }
  return report;
}

json to_json(const MulticlassReport& r) {
  return {{"accuracy", r.accuracy}, {"f1_macro", r.f1_macro}, {"class_ids", r.class_ids}, {"confusion", r.confusion}};
}

MulticlassReport evaluate_multiclass(const OneVsRestModel& model, std::span<const EmbeddingVector> images,
                                     std::span<const int> labels) {
  if (images.empty() || images.size() != labels.size()) throw InputError("evaluate_multiclass: bad split");
  MulticlassReport report;
  report.class_ids = model.class_ids();
  std::map<int, std::size_t> slot;
  for (std::size_t i = 0; i < report.class_ids.size(); ++i) slot[report.class_ids[i]] = i;
  for (int label : labels) {
    if (!slot.count(label)) throw InputError("label " + std::to_string(label) + " is not a model class");
  }
  report.confusion.assign(slot.size(), std::vector<std::size_t>(slot.size(), 0));
  std::vector<int> predictions;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const int p = model.predict(images[i]);
    predictions.push_back(p);
    ++report.confusion[slot[labels[i]]][slot[p]];
  }
  report.accuracy = accuracy(predictions, labels);
  report.f1_macro = f1_macro_multiclass(predictions, labels);
  return report;
}

json to_json(const EnsembleFile& f) {
  json members = json::array();
  for (const auto& [pair, w] : f.members) {
    members.push_back({{"negative", pair.negative}, {"positive", pair.positive}, {"weight", w}});
  }
  return {{"members", std::move(members)},
          {"metric", to_string(f.metric)},
          {"calibration", {{"temperature", f.calib.temperature}}},
          {"store_model", f.store_model}};
}

EnsembleFile ensemble_file_from_json(const json& doc) {
  try {
    EnsembleFile f;
    for (const auto& m : doc.at("members")) {
      f.members.emplace_back(PromptPair{m.at("negative").get<std::string>(), m.at("positive").get<std::string>()},
                             m.at("weight").get<double>());
    }
    f.metric = parse_metric(doc.at("metric").get<std::string>());
    f.calib.temperature = doc.at("calibration").at("temperature").get<double>();
    f.store_model = doc.value("store_model", std::string{});
    return f;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed ensemble file: ") + e.what());
  }
}

EnsembleFile describe(const WeightedEnsemble& ensemble, MetricId metric, const ProbabilityCalibration& calib,
                      std::string store_model) {
  EnsembleFile f;
  for (const auto& m : ensemble.members()) f.members.emplace_back(m.pair, m.weight);
  f.metric = metric;
  f.calib = calib;
  f.store_model = std::move(store_model);
  return f;
}

WeightedEnsemble load_ensemble(const EnsembleFile& file, PromptEncoder& encoder) {
  std::vector<PromptPair> pairs;
  for (const auto& [pair, w] : file.members) pairs.push_back(pair);
  const auto embeddings = encoder.encode(pairs);
  std::vector<EnsembleMember> members;
  for (std::size_t i = 0; i < pairs.size(); ++i) members.push_back({pairs[i], embeddings[i], file.members[i].second});
  return WeightedEnsemble(std::move(members));
}

}  // namespace promptevo
