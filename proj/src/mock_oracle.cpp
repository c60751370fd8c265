#include "promptevo/mock_oracle.hpp"

#include <cmath>
#include <regex>
#include <sstream>

#include "promptevo/errors.hpp"
#include "promptevo/random.hpp"
#include "promptevo/response_parser.hpp"
#include "promptevo/synthetic.hpp"
#include "promptevo/templates.hpp"

namespace promptevo {

FixtureOracle::FixtureOracle(std::vector<std::string> responses) : responses_(std::move(responses)) {}

std::vector<std::string> FixtureOracle::responses_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("responses") || !doc["responses"].is_array()) {
    throw InputError("fixture oracle: expected {\"responses\": [...]}");
  }
  try {
    return doc["responses"].get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception&) {
    throw InputError("fixture oracle: responses must be strings");
  }
}

OracleResponse FixtureOracle::complete(const OracleRequest& request) {
  std::lock_guard lock(mutex_);
  prompts_.push_back(request.prompt);
  if (next_ >= responses_.size()) {
    throw FixtureExhausted("fixture oracle: no response left for request " + std::to_string(next_ + 1));
  }
  OracleResponse out;
  out.text = responses_[next_++];
  out.usage.prompt_tokens = static_cast<int>(request.prompt.size() / 4);
  out.usage.completion_tokens = static_cast<int>(out.text.size() / 4);
  return out;
}

std::size_t FixtureOracle::served() const {
  std::lock_guard lock(mutex_);
  return next_;
}

namespace {

using Vec = std::vector<double>;

Vec unit(Vec v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  if (n == 0.0) return v;
  for (auto& x : v) x /= n;
  return v;
}

Vec noise_vec(Rng& rng, std::size_t dim, double scale) {
  Vec v(dim);
  const double s = scale / std::sqrt(static_cast<double>(dim));
  for (auto& x : v) x = standard_normal(rng) * s;
  return v;
}

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

int requested_count(const std::string& prompt, const std::regex& pattern, int fallback) {
  std::smatch m;
  if (std::regex_search(prompt, m, pattern)) return std::max(1, std::stoi(m[1].str()));
  return fallback;
}

struct DecodedPair {
  std::size_t index;
  Vec negative;
  Vec positive;
  int score;
};

std::vector<DecodedPair> decode_numbered(const std::string& prompt, std::size_t dim) {
  std::vector<DecodedPair> out;
  for (const auto& n : parse_numbered_pairs(prompt)) {
    auto neg = synthetic::decode_profile(n.pair.negative, dim);
    auto pos = synthetic::decode_profile(n.pair.positive, dim);
    if (!neg || !pos) continue;
    out.push_back({n.index, unit(*neg), unit(*pos), n.score.value_or(60)});
  }
  return out;
}

std::string pair_block(const std::vector<PromptPair>& pairs) {
  std::string out = "```python\nprompts = [\n";
  for (const auto& p : pairs) out += "    " + format_pair_literal(p) + ",\n";
  out += "]\n```\n";
  return out;
}

PromptPair encode_pair(const Vec& neg, const Vec& pos) {
  return {synthetic::encode_profile("normal", neg), synthetic::encode_profile("abnormal", pos)};
}

}  // namespace

OracleResponse SyntheticOracle::complete(const OracleRequest& request) {
  const auto& prompt = request.prompt;
  const std::size_t dim = options_.dim;
  std::uint64_t seed = fnv1a(prompt) ^ (options_.seed * 0x9e3779b97f4a7c15ULL);
  if (request.seed) seed ^= static_cast<std::uint64_t>(*request.seed) * 0xbf58476d1ce4e5b9ULL;
  Rng rng(seed);

  // Grouping never looks at the target, so it is only required for generation requests.
  Vec tn, tp;
  auto load_target = [&] {
    const auto target_neg = synthetic::decode_profile(options_.target.negative, dim);
    const auto target_pos = synthetic::decode_profile(options_.target.positive, dim);
    if (!target_neg || !target_pos) throw InputError("synthetic oracle: target pair is not a profile text");
    tn = unit(*target_neg);
    tp = unit(*target_pos);
  };

  OracleResponse out;
  std::ostringstream text;

  if (prompt.find("list[list[") != std::string::npos) {
    const auto listed = parse_numbered_pairs(prompt);
    std::vector<int> group_of(listed.size(), -1);
    std::vector<std::vector<std::size_t>> groups;
    std::vector<std::optional<std::pair<Vec, Vec>>> vecs;
    for (const auto& n : listed) {
      auto neg = synthetic::decode_profile(n.pair.negative, dim);
      auto pos = synthetic::decode_profile(n.pair.positive, dim);
      if (neg && pos) vecs.emplace_back(std::pair{unit(*neg), unit(*pos)});
      else vecs.emplace_back(std::nullopt);
    }
    for (std::size_t i = 0; i < listed.size(); ++i) {
      if (group_of[i] >= 0) continue;
      group_of[i] = static_cast<int>(groups.size());
      groups.push_back({listed[i].index});
      if (!vecs[i]) continue;
      for (std::size_t j = i + 1; j < listed.size(); ++j) {
        if (group_of[j] >= 0 || !vecs[j]) continue;
        if (dot(vecs[i]->first, vecs[j]->first) >= options_.merge_threshold &&
            dot(vecs[i]->second, vecs[j]->second) >= options_.merge_threshold) {
          group_of[j] = group_of[i];
          groups.back().push_back(listed[j].index);
        }
      }
    }
    text << "Comparing the profiles pairwise, pairs whose features point the same way describe one "
            "observation.\n\n--- Final Output ---\n[";
    for (std::size_t g = 0; g < groups.size(); ++g) {
      text << (g ? ", " : "") << "[";
      for (std::size_t k = 0; k < groups[g].size(); ++k) text << (k ? ", " : "") << groups[g][k];
      text << "]";
    }
    text << "]\n";
  } else if (auto parents = decode_numbered(prompt, dim); !parents.empty()) {
    load_target();
    static const std::regex kWrite(R"(Write\s+(\d+))");
    const int count = requested_count(prompt, kWrite, 10);
    std::vector<double> weights;
    double total = 0.0;
    for (const auto& p : parents) {
      const double w = std::pow(static_cast<double>(p.score) - 59.0, 2.0);
      weights.push_back(w);
      total += w;
    }
    std::vector<PromptPair> children;
    for (int c = 0; c < count; ++c) {
      double r = uniform01(rng) * total;
      std::size_t pick = 0;
      while (pick + 1 < parents.size() && r >= weights[pick]) r -= weights[pick++];
      const auto& parent = parents[pick];
      const double q = std::clamp((static_cast<double>(parent.score) - 60.0) / 30.0, 0.0, 1.0);
      const double step = options_.pull * (0.25 + q);
      auto child_neg = noise_vec(rng, dim, options_.noise);
      auto child_pos = noise_vec(rng, dim, options_.noise);
      for (std::size_t k = 0; k < dim; ++k) {
        child_neg[k] += parent.negative[k] + step * (tn[k] - parent.negative[k]);
        child_pos[k] += parent.positive[k] + step * (tp[k] - parent.positive[k]);
      }
      children.push_back(encode_pair(unit(child_neg), unit(child_pos)));
    }
    if (prompt.find(kCotStrategy) != std::string::npos) {
      text << "Strategy: keep the features of the highest-scoring pairs and sharpen the contrast "
              "between the normal and abnormal descriptions.\n\n";
    }
    text << pair_block(children);
  } else {
    static const std::regex kGive(R"(Give\s+(\d+))");
    const int count = requested_count(prompt, kGive, 10);
    load_target();
    std::vector<PromptPair> pairs;
    for (int c = 0; c < count; ++c) {
      auto neg = noise_vec(rng, dim, options_.init_noise);
      auto pos = noise_vec(rng, dim, options_.init_noise);
      for (std::size_t k = 0; k < dim; ++k) {
        neg[k] += tn[k];
        pos[k] += tp[k];
      }
      pairs.push_back(encode_pair(unit(neg), unit(pos)));
    }
    text << pair_block(pairs);
  }

  out.text = text.str();
  out.usage.prompt_tokens = static_cast<int>(prompt.size() / 4);
  out.usage.completion_tokens = static_cast<int>(out.text.size() / 4);
  return out;
}

}  // namespace promptevo
