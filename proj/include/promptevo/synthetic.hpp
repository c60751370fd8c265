#pragma once

/// @file synthetic.hpp
/// Offline stand-ins for the external models: a text-embedding rule, a planted
/// linearly separable image store, and the pieces the synthetic mutation oracle
/// shares with them.
///
/// Synthetic prompt texts carry their embedding direction in plain text:
/// `"<tag> profile: 0.1234 -0.0567 ..."` with exactly `dim` components. The
/// embedding rule decodes that profile; any other text maps to a pseudo-random
/// direction seeded by the text bytes.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "promptevo/embedding.hpp"
#include "promptevo/text_embedding.hpp"
#include "promptevo/types.hpp"

namespace promptevo::synthetic {

std::string encode_profile(std::string_view tag, std::span<const double> direction);
std::optional<std::vector<double>> decode_profile(std::string_view text, std::size_t dim);

/// Embedding of a synthetic text under the rule above (not normalized).
std::vector<double> embed_text(std::string_view text, std::size_t dim);

class SyntheticTextEmbedder final : public TextEmbedder {
 public:
  explicit SyntheticTextEmbedder(std::size_t dim) : dim_(dim) {}
  std::vector<std::vector<double>> embed(std::span<const std::string> texts) override;

 private:
  std::size_t dim_;
};

struct TaskOptions {
  std::size_t dim = 32;
  std::size_t n_train = 200;
  std::size_t n_val = 100;
  std::size_t n_test = 200;
  double positive_fraction = 0.4;
  /// |cos(image, planted direction)| is drawn uniformly from [min_margin, max_margin].
  double min_margin = 0.02;
  double max_margin = 0.30;
  std::uint64_t seed = 7;
};

struct Task {
  EmbeddingStore store;
  /// Pair whose embeddings separate every image in the store.
  PromptPair planted;
  std::vector<double> direction;
};

Task make_task(const TaskOptions& options);

/// Multiclass variant: `classes` planted directions; each image is nearest its class direction.
struct MulticlassTask {
  std::vector<EmbeddingVector> vectors;
  std::vector<int> labels;
  std::vector<std::vector<double>> directions;
};

MulticlassTask make_multiclass_task(std::size_t classes, std::size_t per_class, std::size_t dim,
                                    std::uint64_t seed);

}  // namespace promptevo::synthetic
