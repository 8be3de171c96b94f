#include "decap/embedder.hpp"

#include "decap/errors.hpp"
#include "decap/jsonl.hpp"
#include "decap/rng.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>

namespace decap {

std::vector<EmbeddingVector> Embedder::embed_batch(std::span<const std::string> texts) const {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& text : texts) out.push_back(embed(text));
  return out;
}

// --- HashingEmbedder ---------------------------------------------------------

HashingEmbedder::HashingEmbedder(std::size_t dim) : dim_(dim) {
  if (dim_ == 0) throw ConfigError("HashingEmbedder: dim must be positive");
}

std::string HashingEmbedder::id() const { return "hashing-uni-bi-" + std::to_string(dim_); }

std::size_t HashingEmbedder::bucket(std::string_view feature) const noexcept {
  return static_cast<std::size_t>(fnv1a64(feature) % dim_);
}

EmbeddingVector HashingEmbedder::embed(std::string_view text) const {
  const auto tokens = tokenize(text);
  std::vector<double> values(dim_, 0.0);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    values[bucket(tokens[i])] += 1.0;
    if (i + 1 < tokens.size()) values[bucket(tokens[i] + " " + tokens[i + 1])] += 1.0;
  }
  double norm = 0.0;
  for (double v : values) norm += v * v;
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double& v : values) v /= norm;
  }
  return EmbeddingVector(std::move(values));
}

// --- RemoteEmbedder ----------------------------------------------------------

RemoteEmbedderConfig RemoteEmbedderConfig::from_env() {
  RemoteEmbedderConfig config;
  if (const char* url = std::getenv("EMBED_BASE_URL")) config.base_url = url;
  if (const char* key = std::getenv("EMBED_API_KEY")) config.api_key = key;
  return config;
}

RemoteEmbedder::RemoteEmbedder(RemoteEmbedderConfig config)
    : RemoteEmbedder(config, make_http_transport(config.base_url)) {}

RemoteEmbedder::RemoteEmbedder(RemoteEmbedderConfig config, std::shared_ptr<HttpTransport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
  if (config_.batch_size == 0) throw ConfigError("RemoteEmbedder: batch_size must be positive");
}

std::string RemoteEmbedder::id() const { return "remote:" + config_.model; }

EmbeddingVector RemoteEmbedder::embed(std::string_view text) const {
  const std::string owned(text);
  return request(std::span<const std::string>(&owned, 1)).front();
}

std::vector<EmbeddingVector> RemoteEmbedder::embed_batch(std::span<const std::string> texts) const {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (std::size_t start = 0; start < texts.size(); start += config_.batch_size) {
    const auto count = std::min(config_.batch_size, texts.size() - start);
    auto chunk = request(texts.subspan(start, count));
    for (auto& v : chunk) out.push_back(std::move(v));
  }
  return out;
}

std::vector<EmbeddingVector> RemoteEmbedder::request(std::span<const std::string> texts) const {
  nlohmann::json body{{"model", config_.model}, {"input", nlohmann::json::array()}};
  for (const auto& text : texts) body["input"].push_back(text);
  HttpHeaders headers;
  if (!config_.api_key.empty()) headers.emplace_back("Authorization", "Bearer " + config_.api_key);

  const auto response = transport_->post_json("/embeddings", body.dump(), headers);
  if (response.status < 200 || response.status >= 300) {
    throw HttpStatusError(response.status, response.body);
  }
  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(response.body);
  } catch (const nlohmann::json::parse_error& e) {
    throw TransportError(std::string("embeddings: invalid JSON reply: ") + e.what());
  }
  const auto data = parsed.find("data");
  if (data == parsed.end() || !data->is_array() || data->size() != texts.size()) {
    throw TransportError("embeddings: reply does not carry one embedding per input");
  }
  std::vector<std::optional<EmbeddingVector>> slots(texts.size());
  for (std::size_t i = 0; i < data->size(); ++i) {
    const auto& item = (*data)[i];
    const std::size_t index = item.value("index", i);
    if (index >= slots.size() || slots[index]) throw TransportError("embeddings: bad index in reply");
    try {
      slots[index].emplace(item.at("embedding").get<std::vector<double>>());
    } catch (const nlohmann::json::exception& e) {
      throw TransportError(std::string("embeddings: ") + e.what());
    }
  }
  std::vector<EmbeddingVector> out;
  out.reserve(slots.size());
  for (auto& slot : slots) out.push_back(std::move(*slot));
  return out;
}

// --- CachingEmbedder ---------------------------------------------------------

CachingEmbedder::CachingEmbedder(std::shared_ptr<const Embedder> inner, std::filesystem::path cache_file)
    : inner_(std::move(inner)), cache_file_(std::move(cache_file)) {
  if (!std::filesystem::exists(cache_file_)) return;
  jsonl::for_each_line(cache_file_, [&](const nlohmann::json& row, std::size_t) {
    entries_.insert_or_assign(row.at("key").get<std::string>(),
                              EmbeddingVector(row.at("embedding").get<std::vector<double>>()));
  });
}

std::string CachingEmbedder::key(std::string_view text) const {
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a64(text)));
  return inner_->id() + ":" + hash;
}

void CachingEmbedder::append(const std::string& k, const EmbeddingVector& vector) const {
  if (cache_file_.has_parent_path()) std::filesystem::create_directories(cache_file_.parent_path());
  std::ofstream out(cache_file_, std::ios::binary | std::ios::app);
  if (!out) throw Error("cannot append to embedding cache " + cache_file_.string());
  nlohmann::json row{{"key", k}, {"embedding", std::vector<double>(vector.values().begin(), vector.values().end())}};
  out << row.dump() << '\n';
}

EmbeddingVector CachingEmbedder::embed(std::string_view text) const {
  const auto k = key(text);
  {
    std::lock_guard lock(mutex_);
    if (const auto it = entries_.find(k); it != entries_.end()) {
      ++hits_;
      return it->second;
    }
  }
  auto vector = inner_->embed(text);
  std::lock_guard lock(mutex_);
  ++misses_;
  if (entries_.emplace(k, vector).second) append(k, vector);
  return vector;
}

std::vector<EmbeddingVector> CachingEmbedder::embed_batch(std::span<const std::string> texts) const {
  std::vector<std::optional<EmbeddingVector>> slots(texts.size());
  std::vector<std::string> missing;
  std::vector<std::size_t> missing_at;
  {
    std::lock_guard lock(mutex_);
    for (std::size_t i = 0; i < texts.size(); ++i) {
      if (const auto it = entries_.find(key(texts[i])); it != entries_.end()) {
        slots[i] = it->second;
        ++hits_;
      } else {
        missing.push_back(texts[i]);
        missing_at.push_back(i);
      }
    }
  }
  if (!missing.empty()) {
    auto computed = inner_->embed_batch(missing);
    std::lock_guard lock(mutex_);
    for (std::size_t m = 0; m < computed.size(); ++m) {
      const auto k = key(missing[m]);
      ++misses_;
      if (entries_.emplace(k, computed[m]).second) append(k, computed[m]);
      slots[missing_at[m]] = std::move(computed[m]);
    }
  }
  std::vector<EmbeddingVector> out;
  out.reserve(slots.size());
  for (auto& slot : slots) out.push_back(std::move(*slot));
  return out;
}

std::size_t CachingEmbedder::hits() const {
  std::lock_guard lock(mutex_);
  return hits_;
}

std::size_t CachingEmbedder::misses() const {
  std::lock_guard lock(mutex_);
  return misses_;
}

}  // namespace decap
