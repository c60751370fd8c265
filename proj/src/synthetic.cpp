#include "promptevo/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "promptevo/errors.hpp"
#include "promptevo/random.hpp"

namespace promptevo::synthetic {

namespace {

constexpr std::string_view kProfileMarker = "profile:";

std::vector<double> gaussian(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  for (auto& x : v) x = standard_normal(rng) * scale;
  return v;
}

void normalize(std::vector<double>& v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  for (auto& x : v) x /= n;
}

}  // namespace

std::string encode_profile(std::string_view tag, std::span<const double> direction) {
  std::string out(tag);
  out += " profile:";
  char buf[32];
  for (double x : direction) {
    // Avoid "-0.0000" so equal directions always produce equal text.
    const double rounded = std::round(x * 1e4) / 1e4;
    std::snprintf(buf, sizeof buf, " %.4f", rounded == 0.0 ? 0.0 : rounded);
    out += buf;
  }
  return out;
}

std::optional<std::vector<double>> decode_profile(std::string_view text, std::size_t dim) {
  const auto at = text.rfind(kProfileMarker);
  if (at == std::string_view::npos) return std::nullopt;
  const std::string rest(text.substr(at + kProfileMarker.size()));
  std::vector<double> out;
  const char* p = rest.c_str();
  for (;;) {
    char* end = nullptr;
    const double x = std::strtod(p, &end);
    if (end == p) break;
    out.push_back(x);
    p = end;
  }
  while (*p == ' ' || *p == '.' || *p == '\n') ++p;
  if (*p != '\0' || out.size() != dim) return std::nullopt;
  double n = 0.0;
  for (double x : out) n += x * x;
  if (!(n > 0.0)) return std::nullopt;
  return out;
}

std::vector<double> embed_text(std::string_view text, std::size_t dim) {
  if (auto v = decode_profile(text, dim)) return *v;
  Rng rng(fnv1a(text));
  return gaussian(rng, dim);
}

std::vector<std::vector<double>> SyntheticTextEmbedder::embed(std::span<const std::string> texts) {
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    if (t.empty()) throw ProviderError("embed_text: empty text");
    out.push_back(embed_text(t, dim_));
  }
  return out;
}

Task make_task(const TaskOptions& options) {
  if (options.dim < 2) throw InputError("synthetic task needs dim >= 2");
  Rng rng(options.seed);
  auto direction = gaussian(rng, options.dim);
  normalize(direction);

  std::vector<LabeledEmbedding> records;
  auto emit = [&](Split split, std::size_t n) {
    const auto positives = static_cast<std::size_t>(std::llround(options.positive_fraction * static_cast<double>(n)));
    for (std::size_t i = 0; i < n; ++i) {
      const int label = i < positives ? 1 : 0;
      const double s = (label ? 1.0 : -1.0) *
                       (options.min_margin + (options.max_margin - options.min_margin) * uniform01(rng));
      auto w = gaussian(rng, options.dim);
      double along = 0.0;
      for (std::size_t k = 0; k < options.dim; ++k) along += w[k] * direction[k];
      for (std::size_t k = 0; k < options.dim; ++k) w[k] -= along * direction[k];
      normalize(w);
      const double ortho = std::sqrt(1.0 - s * s);
      std::vector<double> v(options.dim);
      for (std::size_t k = 0; k < options.dim; ++k) v[k] = s * direction[k] + ortho * w[k];
      char id[48];
      std::snprintf(id, sizeof id, "%s-%04zu", std::string(to_string(split)).c_str(), i);
      records.push_back({id, EmbeddingVector(std::move(v)).normalized(), label, split});
    }
  };
  emit(Split::train, options.n_train);
  emit(Split::val, options.n_val);
  emit(Split::test, options.n_test);

  std::vector<double> negated(direction.size());
  for (std::size_t k = 0; k < direction.size(); ++k) negated[k] = -direction[k];
  PromptPair planted{encode_profile("normal", negated), encode_profile("abnormal", direction)};
  return {EmbeddingStore(options.dim, "synthetic-planted-d" + std::to_string(options.dim), std::move(records)),
          std::move(planted), std::move(direction)};
}

MulticlassTask make_multiclass_task(std::size_t classes, std::size_t per_class, std::size_t dim,
                                    std::uint64_t seed) {
  Rng rng(seed);
  MulticlassTask task;
  for (std::size_t c = 0; c < classes; ++c) {
    auto d = gaussian(rng, dim);
    normalize(d);
    task.directions.push_back(std::move(d));
  }
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      auto noise = gaussian(rng, dim);
      std::vector<double> v(dim);
      for (std::size_t k = 0; k < dim; ++k) v[k] = task.directions[c][k] + 0.35 * noise[k];
      task.vectors.push_back(EmbeddingVector(std::move(v)).normalized());
      task.labels.push_back(static_cast<int>(c));
    }
  }
  return task;
}

}  // namespace promptevo::synthetic
