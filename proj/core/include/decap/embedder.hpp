#pragma once

#include "decap/http_transport.hpp"
#include "decap/textmetrics.hpp"

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace decap {

/// Text -> fixed-dimension vector. Deterministic for a fixed implementation
/// and input; implementations must tolerate concurrent calls.
class Embedder {
 public:
  virtual ~Embedder() = default;

  /// Stable identifier used to key embedding caches.
  virtual std::string id() const = 0;
  virtual EmbeddingVector embed(std::string_view text) const = 0;
  virtual std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const;
};

/// Offline embedder: unigram and bigram features hashed (FNV-1a) into `dim`
/// buckets as counts, then L2-normalized. Text without tokens maps to the
/// zero vector.
class HashingEmbedder final : public Embedder {
 public:
  static constexpr std::size_t kDefaultDim = 256;

  explicit HashingEmbedder(std::size_t dim = kDefaultDim);

  std::size_t dim() const noexcept { return dim_; }
  std::string id() const override;
  EmbeddingVector embed(std::string_view text) const override;

  /// Bucket for one feature string ("tok" or "tok1 tok2").
  std::size_t bucket(std::string_view feature) const noexcept;

 private:
  std::size_t dim_;
};

struct RemoteEmbedderConfig {
  std::string base_url;
  std::string api_key;
  std::string model;
  std::size_t batch_size = 64;

  /// Reads EMBED_BASE_URL and EMBED_API_KEY; `model` is left to the caller.
  static RemoteEmbedderConfig from_env();
};

/// OpenAI-compatible embeddings client:
///   POST {base_url}/embeddings {"model", "input": [..]} -> {"data": [{"embedding": [..]}]}
class RemoteEmbedder final : public Embedder {
 public:
  explicit RemoteEmbedder(RemoteEmbedderConfig config);
  RemoteEmbedder(RemoteEmbedderConfig config, std::shared_ptr<HttpTransport> transport);

  std::string id() const override;
  EmbeddingVector embed(std::string_view text) const override;
  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const override;

 private:
  std::vector<EmbeddingVector> request(std::span<const std::string> texts) const;

  RemoteEmbedderConfig config_;
  std::shared_ptr<HttpTransport> transport_;
};

/// Wraps another embedder with a JSONL cache keyed by (embedder id, content
/// hash). Misses are computed by the inner embedder and appended to the file.
class CachingEmbedder final : public Embedder {
 public:
  CachingEmbedder(std::shared_ptr<const Embedder> inner, std::filesystem::path cache_file);

  std::string id() const override { return inner_->id(); }
  EmbeddingVector embed(std::string_view text) const override;
  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const override;

  std::size_t hits() const;
  std::size_t misses() const;

 private:
  std::string key(std::string_view text) const;
  void append(const std::string& key, const EmbeddingVector& vector) const;

  std::shared_ptr<const Embedder> inner_;
  std::filesystem::path cache_file_;
  mutable std::mutex mutex_;
  mutable std::map<std::string, EmbeddingVector> entries_;
  mutable std::size_t hits_ = 0;
  mutable std::size_t misses_ = 0;
};

}  // namespace decap
