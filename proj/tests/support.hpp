#pragma once

// Shared helpers for the unit and acceptance tests.

#include <atomic>
#include <cmath>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "promptevo/embedding.hpp"
#include "promptevo/errors.hpp"
#include "promptevo/text_embedding.hpp"
#include "promptevo/types.hpp"

namespace promptevo::testing {

inline std::string fixture_path(const std::string& name) {
  return std::string(PROMPTEVO_FIXTURE_DIR) + "/" + name;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string read_fixture(const std::string& name) { return read_file(fixture_path(name)); }

inline nlohmann::json read_fixture_json(const std::string& name) {
  return nlohmann::json::parse(read_fixture(name));
}

inline std::vector<PromptPair> pairs_from_json(const nlohmann::json& arr) {
  std::vector<PromptPair> out;
  for (const auto& p : arr) out.push_back({p.at("negative").get<std::string>(), p.at("positive").get<std::string>()});
  return out;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            ("promptevo-test-" + std::to_string(stamp) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::string str() const { return path_.string(); }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Text embedder backed by a fixed table; unknown texts fail like a provider would.
class MapEmbedder final : public TextEmbedder {
 public:
  explicit MapEmbedder(std::map<std::string, std::vector<double>> table) : table_(std::move(table)) {}

  std::vector<std::vector<double>> embed(std::span<const std::string> texts) override {
    std::lock_guard lock(mutex_);
    ++calls_;
    std::vector<std::vector<double>> out;
    for (const auto& t : texts) {
      auto it = table_.find(t);
      if (it == table_.end()) throw ProviderError("no embedding for '" + t + "'");
      out.push_back(it->second);
    }
    return out;
  }

  int calls() const {
    std::lock_guard lock(mutex_);
    return calls_;
  }

 private:
  std::map<std::string, std::vector<double>> table_;
  mutable std::mutex mutex_;
  int calls_ = 0;
};

/// httplib server on an ephemeral loopback port, served from a background thread.
class LocalServer {
 public:
  LocalServer() = default;
  ~LocalServer() { stop(); }
  LocalServer(const LocalServer&) = delete;
  LocalServer& operator=(const LocalServer&) = delete;

  httplib::Server& server() { return server_; }

  void start() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    if (port_ <= 0) throw std::runtime_error("cannot bind a test port");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  void stop() {
    if (thread_.joinable()) {
      server_.stop();
      thread_.join();
    }
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

inline std::vector<double> random_unit(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(dim);
  double s = 0.0;
  do {
    s = 0.0;
    for (auto& x : v) {
      x = n(rng);
      s += x * x;
    }
  } while (s == 0.0);
  for (auto& x : v) x /= std::sqrt(s);
  return v;
}

inline LabeledSet make_set(const std::vector<std::vector<double>>& vectors, const std::vector<int>& labels) {
  LabeledSet set;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    LabeledEmbedding rec;
    rec.id = "img-" + std::to_string(i);
    rec.vector = EmbeddingVector(vectors[i]).normalized();
    rec.label = labels[i];
    set.push_back(rec);
  }
  return set;
}

}  // namespace promptevo::testing
