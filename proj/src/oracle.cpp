#include "promptevo/oracle.hpp"

#include <ctime>
#include <thread>

#include <httplib.h>

#include "promptevo/errors.hpp"

namespace promptevo {

using nlohmann::json;

json to_json(const OracleRequest& request) {
  json out = {{"prompt", request.prompt}, {"max_tokens", request.max_tokens}};
  if (request.seed) out["seed"] = *request.seed;
  if (!request.params.empty()) out["params"] = request.params;
  return out;
}

json to_json(const OracleResponse& response) {
  return {{"text", response.text},
          {"prompt_tokens", response.usage.prompt_tokens},
          {"completion_tokens", response.usage.completion_tokens}};
}

HttpOracleEndpoint::HttpOracleEndpoint(std::string base_url, std::string api_key,
                                       std::chrono::milliseconds timeout)
    : base_url_(std::move(base_url)), api_key_(std::move(api_key)), timeout_(timeout) {}

OracleResponse HttpOracleEndpoint::complete(const OracleRequest& request) {
  httplib::Client client(base_url_);
  const auto secs = timeout_.count() / 1000;
  const auto usecs = (timeout_.count() % 1000) * 1000;
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  client.set_connection_timeout(secs, usecs);
  if (!api_key_.empty()) client.set_bearer_token_auth(api_key_);

  auto res = client.Post("/v1/generate", to_json(request).dump(), "application/json");
  if (!res) throw TransientOracleError("generate: " + httplib::to_string(res.error()));
  if (res->status == 413) throw PromptTooLarge("generate: endpoint rejected prompt size");
  if (res->status == 408 || res->status == 429 || res->status >= 500) {
    throw TransientOracleError("generate: HTTP " + std::to_string(res->status));
  }
  if (res->status < 200 || res->status >= 300) {
    throw OracleUnavailable("generate: HTTP " + std::to_string(res->status) + ": " + res->body);
  }
  try {
    const auto doc = json::parse(res->body);
    OracleResponse out;
    out.text = doc.at("text").get<std::string>();
    out.usage.prompt_tokens = doc.value("prompt_tokens", 0);
    out.usage.completion_tokens = doc.value("completion_tokens", 0);
    return out;
  } catch (const json::exception& e) {
    throw TransientOracleError(std::string("generate: malformed response: ") + e.what());
  }
}

TranscriptLog::TranscriptLog(const std::string& path) : file_(path, std::ios::app) {
  if (!file_) throw std::ios_base::failure("cannot open transcript '" + path + "'");
}

void TranscriptLog::append(json entry) {
  std::lock_guard lock(mutex_);
  if (file_.is_open()) {
    file_ << entry.dump() << '\n';
    file_.flush();
  }
  entries_.push_back(std::move(entry));
}

std::size_t TranscriptLog::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

std::vector<json> TranscriptLog::entries() const {
  std::lock_guard lock(mutex_);
  return entries_;
}

namespace {

std::string iso8601_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

}  // namespace

OracleClient::OracleClient(std::shared_ptr<OracleEndpoint> endpoint, RetryPolicy policy,
                           std::shared_ptr<TranscriptLog> transcript)
    : endpoint_(std::move(endpoint)), policy_(policy), transcript_(std::move(transcript)) {
  if (!endpoint_) throw InputError("OracleClient: null endpoint");
  if (!transcript_) transcript_ = std::make_shared<TranscriptLog>();
  if (policy_.max_attempts < 1) policy_.max_attempts = 1;
}

OracleResponse OracleClient::generate(const OracleRequest& request) {
  json entry = {{"ts", iso8601_now()}, {"request", to_json(request)}};
  auto fail = [&](const std::string& message, int attempts) {
    entry["error"] = message;
    entry["attempts"] = attempts;
    transcript_->append(entry);
  };

  if (request.prompt.empty()) {
    fail("empty prompt", 0);
    throw InputError("oracle prompt must be non-empty");
  }
  if (request.prompt.size() > policy_.max_prompt_chars) {
    fail("prompt too large", 0);
    throw PromptTooLarge("prompt of " + std::to_string(request.prompt.size()) + " characters exceeds limit " +
                         std::to_string(policy_.max_prompt_chars));
  }

  auto delay = policy_.initial_backoff;
  std::string last_error;
  for (int attempt = 1; attempt <= policy_.max_attempts; ++attempt) {
    try {
      OracleResponse response = endpoint_->complete(request);
      entry["response"] = to_json(response);
      entry["attempts"] = attempt;
      transcript_->append(entry);
      return response;
    } catch (const TransientOracleError& e) {
      last_error = e.what();
    } catch (const std::exception& e) {
      fail(e.what(), attempt);
      throw;
    }
    if (attempt < policy_.max_attempts && delay.count() > 0) {
      std::this_thread::sleep_for(delay);
      delay = std::chrono::milliseconds(static_cast<long long>(delay.count() * policy_.backoff_multiplier));
    }
  }
  fail(last_error, policy_.max_attempts);
  throw OracleUnavailable("oracle unavailable after " + std::to_string(policy_.max_attempts) +
                          " attempts: " + last_error);
}

}  // namespace promptevo
