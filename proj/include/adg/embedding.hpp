#pragma once

// Client for an external sentence-embedding service plus the persistent
// vector cache in front of it.
//
// Wire format (JSON over HTTP POST):
//   request  {"model": "...", "texts": ["...", ...]}
//   response {"vectors": [[...], ...]}
// Cache file: append-only JSON lines {"model", "hash", "vector"}.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "adg/error.hpp"
#include "adg/similarity.hpp"

namespace adg {

using DenseVector = std::vector<double>;

/// FNV-1a 64-bit, hex encoded. Stable across platforms and runs.
inline std::string text_hash(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xF];
    h >>= 4;
  }
  return out;
}

/// Scales to unit length. A zero or non-finite vector is a malformed reply.
inline DenseVector unit_normalize(DenseVector v) {
  double sum = 0.0;
  for (double x : v) sum += x * x;
  const double length = std::sqrt(sum);
  if (!(length > 0.0) || !std::isfinite(length)) {
    throw Error("provider-malformed", "embedding vector has zero or non-finite norm");
  }
  for (double& x : v) x /= length;
  return v;
}

/// Append-only on-disk cache keyed by (model, text hash). Concurrent readers,
/// serialized writers. An empty path keeps the cache in memory only.
class EmbeddingCache {
 public:
  explicit EmbeddingCache(std::string path = {}) : path_(std::move(path)) {
    if (path_.empty()) return;
    std::ifstream in(path_);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      try {
        const auto record = nlohmann::json::parse(line);
        entries_[{record.at("model").get<std::string>(), record.at("hash").get<std::string>()}] =
            record.at("vector").get<DenseVector>();
      } catch (const nlohmann::json::exception&) {
        // a torn final line from an interrupted append is ignored
      }
    }
  }

  std::optional<DenseVector> find(const std::string& model, const std::string& hash) const {
    std::shared_lock lock(mutex_);
    auto it = entries_.find({model, hash});
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  void put(const std::string& model, const std::string& hash, const DenseVector& vector) {
    std::unique_lock lock(mutex_);
    if (!entries_.emplace(std::pair{model, hash}, vector).second) return;
    if (path_.empty()) return;
    std::ofstream out(path_, std::ios::app);
    if (!out) throw Error("io", "cannot append to embedding cache " + path_, path_);
    out << nlohmann::json{{"model", model}, {"hash", hash}, {"vector", vector}}.dump() << '\n';
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
  }

 private:
  std::string path_;
  mutable std::shared_mutex mutex_;
  std::map<std::pair<std::string, std::string>, DenseVector> entries_;
};

struct RemoteEmbeddingConfig {
  std::string endpoint;  // e.g. "http://127.0.0.1:8090/embed"
  std::string model;
  std::chrono::milliseconds timeout{5000};
  std::string cache_path;
};

class EmbeddingClient {
 public:
  explicit EmbeddingClient(RemoteEmbeddingConfig config)
      : config_(std::move(config)), cache_(config_.cache_path) {}

  const RemoteEmbeddingConfig& config() const noexcept { return config_; }
  std::size_t requests_made() const noexcept { return requests_.load(); }
  const EmbeddingCache& cache() const noexcept { return cache_; }

  /// One unit vector per text. Cached texts never reach the service; the rest
  /// go out in a single batch and are written through to the cache.
  std::vector<DenseVector> embed(std::span<const std::string> texts) {
    std::vector<DenseVector> out(texts.size());
    std::vector<std::string> missing;
    std::map<std::string, std::vector<std::size_t>> positions;
    for (std::size_t i = 0; i < texts.size(); ++i) {
      const auto hash = text_hash(texts[i]);
      if (auto hit = cache_.find(config_.model, hash)) {
        out[i] = std::move(*hit);
      } else {
        auto& slots = positions[texts[i]];
        if (slots.empty()) missing.push_back(texts[i]);
        slots.push_back(i);
      }
    }
    if (!missing.empty()) {
      const auto fetched = request(missing);
      for (std::size_t k = 0; k < missing.size(); ++k) {
        cache_.put(config_.model, text_hash(missing[k]), fetched[k]);
        for (std::size_t i : positions[missing[k]]) out[i] = fetched[k];
      }
    }
    for (std::size_t i = 1; i < out.size(); ++i) {
      if (out[i].size() != out[0].size()) {
        throw Error("dimension-mismatch", "vectors in one batch differ in dimension");
      }
    }
    return out;
  }

 private:
  std::vector<DenseVector> request(const std::vector<std::string>& texts) {
    const auto scheme_end = config_.endpoint.find("://");
    const auto path_start =
        config_.endpoint.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    const auto host = config_.endpoint.substr(0, path_start);
    const auto path = path_start == std::string::npos ? std::string("/") : config_.endpoint.substr(path_start);

    httplib::Client client(host);
    const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - seconds);
    client.set_connection_timeout(seconds.count(), micros.count());
    client.set_read_timeout(seconds.count(), micros.count());
    client.set_write_timeout(seconds.count(), micros.count());

    ++requests_;
    const nlohmann::json body{{"model", config_.model}, {"texts", texts}};
    auto result = client.Post(path, body.dump(), "application/json");
    if (!result) {
      const auto err = result.error();
      if (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout) {
        throw Error("provider-timeout", "embedding service timed out at " + config_.endpoint);
      }
      throw Error("provider-unreachable", "embedding service error: " + httplib::to_string(err));
    }
    if (result->status != 200) {
      throw Error("provider-http", "embedding service answered HTTP " + std::to_string(result->status));
    }

    std::vector<DenseVector> vectors;
    try {
      const auto reply = nlohmann::json::parse(result->body);
      vectors = reply.at("vectors").get<std::vector<DenseVector>>();
    } catch (const nlohmann::json::exception& e) {
      throw Error("provider-malformed", std::string("unreadable embedding reply: ") + e.what());
    }
    if (vectors.size() != texts.size()) {
      throw Error("provider-malformed", "expected " + std::to_string(texts.size()) + " vectors, got " +
                                            std::to_string(vectors.size()));
    }
    for (auto& v : vectors) {
      if (v.empty() || v.size() != vectors.front().size()) {
        throw Error("dimension-mismatch", "vectors in one reply differ in dimension");
      }
      v = unit_normalize(std::move(v));
    }
    return vectors;
  }

  RemoteEmbeddingConfig config_;
  EmbeddingCache cache_;
  std::atomic<std::size_t> requests_{0};
};

inline std::vector<DenseVector> embed_remote(std::span<const std::string> texts, EmbeddingClient& client) {
  return client.embed(texts);
}

/// Similarity as the clamped cosine of service embeddings. Any client-side
/// failure surfaces as `provider-unavailable`.
class RemoteEmbeddingProvider final : public SimilarityProvider {
 public:
  explicit RemoteEmbeddingProvider(std::shared_ptr<EmbeddingClient> client) : client_(std::move(client)) {}

  ProviderKind kind() const override { return ProviderKind::remote_embedding; }
  const EmbeddingClient& client() const noexcept { return *client_; }

  SimilarityScores score(std::string_view cue, std::span<const std::string> candidates) const override {
    std::vector<std::string> batch;
    batch.reserve(candidates.size() + 1);
    batch.emplace_back(cue);
    batch.insert(batch.end(), candidates.begin(), candidates.end());
    std::vector<DenseVector> vectors;
    try {
      vectors = client_->embed(batch);
    } catch (const Error& e) {
      throw Error("provider-unavailable", e.code() + ": " + e.message());
    }
    SimilarityScores out{{}, kind()};
    for (std::size_t i = 1; i < vectors.size(); ++i) {
      double dot = 0.0;
      for (std::size_t k = 0; k < vectors[0].size(); ++k) dot += vectors[0][k] * vectors[i][k];
      out.values.push_back(std::clamp(dot, 0.0, 1.0));
    }
    return out;
  }

 private:
  std::shared_ptr<EmbeddingClient> client_;
};

}  // namespace adg
