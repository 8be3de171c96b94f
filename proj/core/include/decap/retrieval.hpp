#pragma once

#include "decap/corpus.hpp"
#include "decap/embedder.hpp"
#include "decap/textmetrics.hpp"

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace decap {

/// One neutral-corpus entry: a sensitive question and an acceptable response.
struct NeutralPair {
  std::string pair_id;
  std::string sensitive_question;
  std::string acceptable_response;
  std::optional<EmbeddingVector> embedding;
};

struct RetrievalConfig {
  std::size_t k = 5;

  void validate() const;
};

/// Neutral corpus JSONL: {"id", "question", "response"} per line.
std::vector<NeutralPair> load_neutral_corpus(const std::filesystem::path& path);

/// Retrieval query for a record: context + " " + question.
std::string retrieval_query(const QuestionRecord& record);

/// Exhaustive cosine index over sensitive-question embeddings. Immutable
/// after construction; concurrent queries are safe.
class NeutralIndex {
 public:
  /// Throws PreconditionError for an empty corpus, duplicate ids or empty
  /// texts; embedder failures propagate as TransportError naming the pair.
  static NeutralIndex build(std::vector<NeutralPair> pairs, std::shared_ptr<const Embedder> embedder);

  std::size_t size() const noexcept { return pairs_.size(); }
  std::span<const NeutralPair> pairs() const noexcept { return pairs_; }
  const Embedder& embedder() const noexcept { return *embedder_; }

  /// Top-k by descending cosine to embed(query); ties by ascending pair_id.
  /// Requires 1 <= k <= size() and a non-empty query.
  std::vector<NeutralPair> top_k(const std::string& query, std::size_t k) const;

 private:
  NeutralIndex(std::vector<NeutralPair> pairs, std::shared_ptr<const Embedder> embedder)
      : pairs_(std::move(pairs)), embedder_(std::move(embedder)) {}

  std::vector<NeutralPair> pairs_;
  std::shared_ptr<const Embedder> embedder_;
};

}  // namespace decap
