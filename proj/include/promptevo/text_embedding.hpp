#pragma once

// Text-embedding provider contract and the caching prompt encoder built on it.

#include <chrono>
#include <cstddef>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "promptevo/embedding.hpp"
#include "promptevo/types.hpp"

namespace promptevo {

/// Maps texts to vectors, positionally. Implementations throw ProviderError on failure.
class TextEmbedder {
 public:
  virtual ~TextEmbedder() = default;
  virtual std::vector<std::vector<double>> embed(std::span<const std::string> texts) = 0;
};

/// Client for `POST /v1/embed_text` ({"texts": [...]} -> {"dim": d, "vectors": [[...], ...]}).
class HttpTextEmbedder final : public TextEmbedder {
 public:
  /// `base_url` like "http://127.0.0.1:8080". `api_key` is sent as a bearer token when non-empty.
  HttpTextEmbedder(std::string base_url, std::string api_key = {},
                   std::chrono::milliseconds timeout = std::chrono::seconds(60));
  std::vector<std::vector<double>> embed(std::span<const std::string> texts) override;

 private:
  std::string base_url_;
  std::string api_key_;
  std::chrono::milliseconds timeout_;
};

struct EncoderOptions {
  int max_attempts = 3;
  std::size_t batch_size = 64;
  std::chrono::milliseconds backoff{200};
};

/// Encodes prompt pairs through a provider, caching by exact text bytes.
/// Safe to share between threads.
class PromptEncoder {
 public:
  PromptEncoder(std::shared_ptr<TextEmbedder> provider, std::size_t dim, EncoderOptions options = {});

  std::vector<PairEmbedding> encode(std::span<const PromptPair> pairs);
  PairEmbedding encode(const PromptPair& pair);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t cache_size() const;
  /// Total texts sent to the provider so far.
  std::size_t texts_requested() const;

 private:
  void fetch(const std::vector<std::string>& texts);

  std::shared_ptr<TextEmbedder> provider_;
  std::size_t dim_;
  EncoderOptions options_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, EmbeddingVector> cache_;
  std::size_t texts_requested_ = 0;
};

}  // namespace promptevo
