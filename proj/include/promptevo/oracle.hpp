#pragma once

// Generative-text oracle: endpoint contract, retrying client, and transcript log.

#include <chrono>
#include <cstdint>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace promptevo {

struct OracleRequest {
  std::string prompt;
  int max_tokens = 4096;
  std::optional<std::int64_t> seed;
  /// Sampling parameters forwarded untouched to the endpoint.
  nlohmann::json params = nlohmann::json::object();
};

struct TokenUsage {
  int prompt_tokens = 0;
  int completion_tokens = 0;
};

struct OracleResponse {
  std::string text;
  TokenUsage usage;
};

nlohmann::json to_json(const OracleRequest& request);
nlohmann::json to_json(const OracleResponse& response);

/// Single-turn text completion. Implementations throw TransientOracleError for
/// failures worth retrying; any other Error is treated as permanent.
class OracleEndpoint {
 public:
  virtual ~OracleEndpoint() = default;
  virtual OracleResponse complete(const OracleRequest& request) = 0;
};

/// Client for `POST /v1/generate`.
class HttpOracleEndpoint final : public OracleEndpoint {
 public:
  HttpOracleEndpoint(std::string base_url, std::string api_key = {},
                     std::chrono::milliseconds timeout = std::chrono::seconds(300));
  OracleResponse complete(const OracleRequest& request) override;

 private:
  std::string base_url_;
  std::string api_key_;
  std::chrono::milliseconds timeout_;
};

/// Append-only record of oracle traffic, one JSON object per generate call.
class TranscriptLog {
 public:
  TranscriptLog() = default;
  /// Also mirrors every entry as a line in `path` (appending).
  explicit TranscriptLog(const std::string& path);

  void append(nlohmann::json entry);
  std::size_t size() const;
  std::vector<nlohmann::json> entries() const;

 private:
  mutable std::mutex mutex_;
  std::vector<nlohmann::json> entries_;
  std::ofstream file_;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  double backoff_multiplier = 2.0;
  std::size_t max_prompt_chars = 200'000;
};

class OracleClient {
 public:
  OracleClient(std::shared_ptr<OracleEndpoint> endpoint, RetryPolicy policy = {},
               std::shared_ptr<TranscriptLog> transcript = std::make_shared<TranscriptLog>());

  /// Retries transient failures with exponential backoff; throws OracleUnavailable once
  /// attempts are exhausted and PromptTooLarge without contacting the endpoint.
  OracleResponse generate(const OracleRequest& request);

  const TranscriptLog& transcript() const noexcept { return *transcript_; }
  const RetryPolicy& policy() const noexcept { return policy_; }

 private:
  std::shared_ptr<OracleEndpoint> endpoint_;
  RetryPolicy policy_;
  std::shared_ptr<TranscriptLog> transcript_;
};

}  // namespace promptevo
