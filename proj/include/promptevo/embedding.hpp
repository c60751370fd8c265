#pragma once

/// @file embedding.hpp
/// Image embedding store and the prompt-pair classifier that compares an image
/// against the negative and positive text embeddings of a pair.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace promptevo {

/// A point in the shared image/text embedding space.
class EmbeddingVector {
 public:
  EmbeddingVector() = default;
  explicit EmbeddingVector(std::vector<double> components) : components_(std::move(components)) {}
  EmbeddingVector(std::initializer_list<double> components) : components_(components) {}

  std::size_t dim() const noexcept { return components_.size(); }
  std::span<const double> components() const noexcept { return components_; }
  double operator[](std::size_t i) const { return components_[i]; }

  double norm() const noexcept;
  /// Copy scaled to unit L2 norm. Throws DegenerateVectorError for the zero vector.
  EmbeddingVector normalized() const;

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

 private:
  std::vector<double> components_;
};

enum class Split { train, val, test };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

struct LabeledEmbedding {
  std::string id;
  EmbeddingVector vector;
  int label = 0;
  Split split = Split::train;
};

/// Vectors and labels of one evaluation set, in store order.
struct LabeledSet {
  std::vector<std::string> ids;
  std::vector<EmbeddingVector> vectors;
  std::vector<int> labels;

  std::size_t size() const noexcept { return vectors.size(); }
  bool empty() const noexcept { return vectors.empty(); }
  void push_back(const LabeledEmbedding& record);
};

/// Immutable collection of unit-norm image embeddings.
class EmbeddingStore {
 public:
  EmbeddingStore(std::size_t dim, std::string model, std::vector<LabeledEmbedding> records);

  std::size_t dim() const noexcept { return dim_; }
  const std::string& model() const noexcept { return model_; }
  std::span<const LabeledEmbedding> records() const noexcept { return records_; }

  LabeledSet split(Split which) const;
  std::size_t count(Split which) const;
  const LabeledEmbedding* find(std::string_view id) const;

 private:
  std::size_t dim_;
  std::string model_;
  std::vector<LabeledEmbedding> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Parses the line-delimited JSON store format. Vectors are L2-normalized on load.
/// Throws FormatError (with line number), DimensionError or DuplicateIdError.
EmbeddingStore load_store(std::istream& source);
EmbeddingStore load_store_file(const std::string& path);
void save_store(const EmbeddingStore& store, std::ostream& out);

struct PairEmbedding {
  EmbeddingVector negative;
  EmbeddingVector positive;
};

double cosine_sim(const EmbeddingVector& a, const EmbeddingVector& b);

/// sim(image, positive) - sim(image, negative).
double pair_margin(const PairEmbedding& pair, const EmbeddingVector& image);

/// 1 iff the image is strictly closer to the positive text; ties go to 0.
int classify_pair(const PairEmbedding& pair, const EmbeddingVector& image);

}  // namespace promptevo
