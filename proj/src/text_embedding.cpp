#include "promptevo/text_embedding.hpp"

#include <thread>
#include <unordered_set>

#include <httplib.h>
#include <json.hpp>

#include "promptevo/errors.hpp"

namespace promptevo {

using nlohmann::json;

HttpTextEmbedder::HttpTextEmbedder(std::string base_url, std::string api_key,
                                   std::chrono::milliseconds timeout)
    : base_url_(std::move(base_url)), api_key_(std::move(api_key)), timeout_(timeout) {}

std::vector<std::vector<double>> HttpTextEmbedder::embed(std::span<const std::string> texts) {
  httplib::Client client(base_url_);
  const auto secs = timeout_.count() / 1000;
  const auto usecs = (timeout_.count() % 1000) * 1000;
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  client.set_connection_timeout(secs, usecs);
  if (!api_key_.empty()) client.set_bearer_token_auth(api_key_);

  const json body = {{"texts", std::vector<std::string>(texts.begin(), texts.end())}};
  auto res = client.Post("/v1/embed_text", body.dump(), "application/json");
  if (!res) throw ProviderError("embed_text: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300) {
    throw ProviderError("embed_text: HTTP " + std::to_string(res->status) + ": " + res->body);
  }
  try {
    const auto doc = json::parse(res->body);
    auto vectors = doc.at("vectors").get<std::vector<std::vector<double>>>();
    if (vectors.size() != texts.size()) {
      throw ProviderError("embed_text: expected " + std::to_string(texts.size()) + " vectors, got " +
                          std::to_string(vectors.size()));
    }
    const auto dim = doc.at("dim").get<std::size_t>();
    for (const auto& v : vectors) {
      if (v.size() != dim) throw ProviderError("embed_text: vector length disagrees with \"dim\"");
    }
    return vectors;
  } catch (const json::exception& e) {
    throw ProviderError(std::string("embed_text: malformed response: ") + e.what());
  }
}

PromptEncoder::PromptEncoder(std::shared_ptr<TextEmbedder> provider, std::size_t dim,
                             EncoderOptions options)
    : provider_(std::move(provider)), dim_(dim), options_(options) {
  if (!provider_) throw InputError("PromptEncoder: null provider");
  if (options_.batch_size == 0) options_.batch_size = 1;
  if (options_.max_attempts < 1) options_.max_attempts = 1;
}

std::size_t PromptEncoder::cache_size() const {
  std::lock_guard lock(mutex_);
  return cache_.size();
}

std::size_t PromptEncoder::texts_requested() const {
  std::lock_guard lock(mutex_);
  return texts_requested_;
}

void PromptEncoder::fetch(const std::vector<std::string>& texts) {
  for (std::size_t start = 0; start < texts.size(); start += options_.batch_size) {
    const auto end = std::min(texts.size(), start + options_.batch_size);
    const std::span<const std::string> batch(texts.data() + start, end - start);

    std::vector<std::vector<double>> vectors;
    for (int attempt = 1;; ++attempt) {
      try {
        vectors = provider_->embed(batch);
        break;
      } catch (const ProviderError&) {
        if (attempt >= options_.max_attempts) throw;
        std::this_thread::sleep_for(options_.backoff * (1 << (attempt - 1)));
      }
    }
    if (vectors.size() != batch.size()) {
      throw ProviderError("provider returned " + std::to_string(vectors.size()) + " vectors for " +
                          std::to_string(batch.size()) + " texts");
    }

    std::lock_guard lock(mutex_);
    texts_requested_ += batch.size();
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (vectors[i].size() != dim_) {
        throw DimensionError("provider returned dimension " + std::to_string(vectors[i].size()) +
                             ", store dimension is " + std::to_string(dim_));
      }
      cache_.emplace(batch[i], EmbeddingVector(std::move(vectors[i])).normalized());
    }
  }
}

std::vector<PairEmbedding> PromptEncoder::encode(std::span<const PromptPair> pairs) {
  std::vector<std::string> missing;
  {
    std::lock_guard lock(mutex_);
    std::unordered_set<std::string> queued;
    for (const auto& p : pairs) {
      for (const std::string* text : {&p.negative, &p.positive}) {
        if (text->empty()) throw InputError("cannot embed an empty prompt text");
        if (!cache_.contains(*text) && queued.insert(*text).second) missing.push_back(*text);
      }
    }
  }
  if (!missing.empty()) fetch(missing);

  std::lock_guard lock(mutex_);
  std::vector<PairEmbedding> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back({cache_.at(p.negative), cache_.at(p.positive)});
  return out;
}

PairEmbedding PromptEncoder::encode(const PromptPair& pair) {
  return encode(std::span<const PromptPair>(&pair, 1)).front();
}

}  // namespace promptevo
