#include "decap/retrieval.hpp"

#include "decap/errors.hpp"
#include "decap/jsonl.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace decap {

void RetrievalConfig::validate() const {
  if (k < 1) throw ConfigError("retrieval k must be >= 1");
}

std::vector<NeutralPair> load_neutral_corpus(const std::filesystem::path& path) {
  std::vector<NeutralPair> pairs;
  jsonl::for_each_line(path, [&](const nlohmann::json& row, std::size_t line) {
    NeutralPair pair;
    try {
      pair.pair_id = row.at("id").get<std::string>();
      pair.sensitive_question = row.at("question").get<std::string>();
      pair.acceptable_response = row.at("response").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw IngestionError(path.string(), line, e.what());
    }
    pairs.push_back(std::move(pair));
  });
  return pairs;
}

std::string retrieval_query(const QuestionRecord& record) {
  return record.context + " " + record.question;
}

NeutralIndex NeutralIndex::build(std::vector<NeutralPair> pairs, std::shared_ptr<const Embedder> embedder) {
  if (!embedder) throw PreconditionError("NeutralIndex: no embedder");
  if (pairs.empty()) throw PreconditionError("NeutralIndex: empty neutral corpus");
  std::set<std::string> seen;
  std::vector<std::string> questions;
  questions.reserve(pairs.size());
  for (const auto& pair : pairs) {
    if (!seen.insert(pair.pair_id).second) {
      throw PreconditionError("NeutralIndex: duplicate pair id '" + pair.pair_id + "'");
    }
    if (pair.sensitive_question.empty() || pair.acceptable_response.empty()) {
      throw PreconditionError("NeutralIndex: pair '" + pair.pair_id + "' has an empty text");
    }
    questions.push_back(pair.sensitive_question);
  }

  std::vector<EmbeddingVector> vectors;
  try {
    vectors = embedder->embed_batch(questions);
  } catch (const TransportError&) {
    // Re-embed one at a time to name the failing pair.
    vectors.clear();
    for (const auto& pair : pairs) {
      try {
        vectors.push_back(embedder->embed(pair.sensitive_question));
      } catch (const TransportError& e) {
        throw TransportError("embedding pair '" + pair.pair_id + "' failed: " + e.what(), e.attempts());
      }
    }
  }
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (vectors[i].is_zero()) {
      throw PreconditionError("NeutralIndex: pair '" + pairs[i].pair_id + "' embeds to the zero vector");
    }
    pairs[i].embedding = std::move(vectors[i]);
  }
  return NeutralIndex(std::move(pairs), std::move(embedder));
}

std::vector<NeutralPair> NeutralIndex::top_k(const std::string& query, std::size_t k) const {
  if (k < 1 || k > pairs_.size()) {
    throw PreconditionError("top_k: k=" + std::to_string(k) + " outside [1, " + std::to_string(pairs_.size()) + "]");
  }
  if (query.empty()) throw PreconditionError("top_k: empty query");
  const auto q = embedder_->embed(query);

  std::vector<double> scores(pairs_.size());
  for (std::size_t i = 0; i < pairs_.size(); ++i) scores[i] = cosine(q, *pairs_[i].embedding);

  std::vector<std::size_t> order(pairs_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return pairs_[a].pair_id < pairs_[b].pair_id;
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), better);

  std::vector<NeutralPair> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(pairs_[order[i]]);
  return out;
}

}  // namespace decap
