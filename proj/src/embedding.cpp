#include "promptevo/embedding.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "promptevo/errors.hpp"

namespace promptevo {

using nlohmann::json;

double EmbeddingVector::norm() const noexcept {
  double sum = 0.0;
  for (double x : components_) sum += x * x;
  return std::sqrt(sum);
}

EmbeddingVector EmbeddingVector::normalized() const {
  const double n = norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw DegenerateVectorError("cannot normalize a zero or non-finite vector");
  }
  std::vector<double> out(components_.size());
  std::transform(components_.begin(), components_.end(), out.begin(),
                 [n](double x) { return x / n; });
  return EmbeddingVector(std::move(out));
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "train";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::train;
  if (text == "val") return Split::val;
  if (text == "test") return Split::test;
  throw InputError("unknown split '" + std::string(text) + "'");
}

void LabeledSet::push_back(const LabeledEmbedding& record) {
  ids.push_back(record.id);
  vectors.push_back(record.vector);
  labels.push_back(record.label);
}

EmbeddingStore::EmbeddingStore(std::size_t dim, std::string model,
                               std::vector<LabeledEmbedding> records)
    : dim_(dim), model_(std::move(model)), records_(std::move(records)) {
  if (dim_ == 0) throw DimensionError("store dimension must be positive");
  index_.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (r.vector.dim() != dim_) {
      throw DimensionError("record '" + r.id + "' has dimension " + std::to_string(r.vector.dim()) +
                           ", store declares " + std::to_string(dim_));
    }
    if (r.label != 0 && r.label != 1) throw InputError("record '" + r.id + "' label must be 0 or 1");
    if (!index_.emplace(r.id, i).second) throw DuplicateIdError("duplicate id '" + r.id + "'");
  }
}

LabeledSet EmbeddingStore::split(Split which) const {
  LabeledSet out;
  for (const auto& r : records_) {
    if (r.split == which) out.push_back(r);
  }
  return out;
}

std::size_t EmbeddingStore::count(Split which) const {
  return static_cast<std::size_t>(
      std::count_if(records_.begin(), records_.end(), [which](const auto& r) { return r.split == which; }));
}

const LabeledEmbedding* EmbeddingStore::find(std::string_view id) const {
  const auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &records_[it->second];
}

EmbeddingStore load_store(std::istream& source) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t dim = 0;
  std::string model;
  bool have_header = false;
  std::vector<LabeledEmbedding> records;
  std::unordered_map<std::string, std::size_t> seen;

  while (std::getline(source, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::parse_error& e) {
      throw FormatError(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw FormatError(line_no, "expected a JSON object");

    if (!have_header) {
      if (!doc.contains("dim") || !doc["dim"].is_number_integer() || doc["dim"].get<long long>() <= 0) {
        throw FormatError(line_no, "header must carry a positive integer \"dim\"");
      }
      dim = doc["dim"].get<std::size_t>();
      model = doc.value("model", std::string{});
      have_header = true;
      continue;
    }

    LabeledEmbedding rec;
    try {
      rec.id = doc.at("id").get<std::string>();
      const auto& label = doc.at("label");
      if (!label.is_number_integer()) throw FormatError(line_no, "label must be 0 or 1");
      rec.label = label.get<int>();
      rec.split = parse_split(doc.at("split").get<std::string>());
      const auto& vec = doc.at("vector");
      if (!vec.is_array()) throw FormatError(line_no, "vector must be an array");
      std::vector<double> components;
      components.reserve(vec.size());
      for (const auto& x : vec) {
        if (!x.is_number()) throw FormatError(line_no, "vector components must be numbers");
        components.push_back(x.get<double>());
      }
      rec.vector = EmbeddingVector(std::move(components));
    } catch (const json::exception& e) {
      throw FormatError(line_no, std::string("malformed record: ") + e.what());
    } catch (const InputError& e) {
      throw FormatError(line_no, e.what());
    }
    if (rec.label != 0 && rec.label != 1) throw FormatError(line_no, "label must be 0 or 1");
    if (rec.vector.dim() != dim) {
      throw DimensionError("line " + std::to_string(line_no) + ": vector length " +
                           std::to_string(rec.vector.dim()) + " does not match dim " + std::to_string(dim));
    }
    try {
      rec.vector = rec.vector.normalized();
    } catch (const DegenerateVectorError&) {
      throw FormatError(line_no, "zero vector");
    }
    if (!seen.emplace(rec.id, line_no).second) {
      throw DuplicateIdError("line " + std::to_string(line_no) + ": duplicate id '" + rec.id + "'");
    }
    records.push_back(std::move(rec));
  }
  if (!have_header) throw FormatError(std::max<std::size_t>(line_no, 1), "missing header line");
  return EmbeddingStore(dim, std::move(model), std::move(records));
}

EmbeddingStore load_store_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open store '" + path + "'");
  return load_store(in);
}

void save_store(const EmbeddingStore& store, std::ostream& out) {
  out << json{{"dim", store.dim()}, {"model", store.model()}}.dump() << '\n';
  for (const auto& r : store.records()) {
    json rec = {{"id", r.id},
                {"label", r.label},
                {"split", std::string(to_string(r.split))},
                {"vector", std::vector<double>(r.vector.components().begin(), r.vector.components().end())}};
    out << rec.dump() << '\n';
  }
}

double cosine_sim(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) {
    throw DimensionError("cosine_sim: dimensions " + std::to_string(a.dim()) + " and " +
                         std::to_string(b.dim()) + " differ");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  const auto x = a.components();
  const auto y = b.components();
  for (std::size_t i = 0; i < x.size(); ++i) {
    dot += x[i] * y[i];
    na += x[i] * x[i];
    nb += y[i] * y[i];
  }
  if (!(na > 0.0) || !(nb > 0.0)) throw DegenerateVectorError("cosine_sim: zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double pair_margin(const PairEmbedding& pair, const EmbeddingVector& image) {
  return cosine_sim(image, pair.positive) - cosine_sim(image, pair.negative);
}

int classify_pair(const PairEmbedding& pair, const EmbeddingVector& image) {
  return cosine_sim(image, pair.positive) > cosine_sim(image, pair.negative) ? 1 : 0;
}

}  // namespace promptevo
