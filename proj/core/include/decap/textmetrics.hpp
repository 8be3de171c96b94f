#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace decap {

/// Lowercase ASCII-alphanumeric tokens. Any other byte is a separator.
class TokenSequence {
 public:
  TokenSequence() = default;
  explicit TokenSequence(std::vector<std::string> tokens);

  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  std::size_t size() const noexcept { return tokens_.size(); }
  bool empty() const noexcept { return tokens_.empty(); }
  const std::string& operator[](std::size_t i) const { return tokens_[i]; }
  auto begin() const noexcept { return tokens_.begin(); }
  auto end() const noexcept { return tokens_.end(); }

  /// Space-joined tokens; tokenize(joined()) == *this.
  std::string joined() const;

  bool operator==(const TokenSequence&) const = default;

 private:
  std::vector<std::string> tokens_;
};

TokenSequence tokenize(std::string_view text);

enum class RougeVariant { L, One, Two };

std::string_view to_string(RougeVariant variant) noexcept;
RougeVariant parse_rouge_variant(std::string_view text);

/// Length of the longest common subsequence, O(|a|*|b|) time, O(min) space.
std::size_t lcs_length(const TokenSequence& a, const TokenSequence& b);

/// ROUGE-L F1: with L = LCS, P = L/|candidate|, R = L/|reference|,
/// returns 2PR/(P+R) = 2L/(|reference|+|candidate|); 0 if either side is
/// empty or L = 0.
double rouge_l(const TokenSequence& reference, const TokenSequence& candidate);

/// ROUGE-N F1 over clipped n-gram counts.
double rouge_n(const TokenSequence& reference, const TokenSequence& candidate, std::size_t n);

double rouge(const TokenSequence& reference, const TokenSequence& candidate, RougeVariant variant);

/// Fixed-dimension real vector with finite entries.
class EmbeddingVector {
 public:
  /// Throws PreconditionError if `values` is empty or has a non-finite entry.
  explicit EmbeddingVector(std::vector<double> values);

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  bool is_zero() const noexcept;

  bool operator==(const EmbeddingVector&) const = default;

 private:
  std::vector<double> values_;
};

/// dot(u,v)/(|u||v|). Throws PreconditionError on a dimension mismatch or a
/// zero vector.
double cosine(const EmbeddingVector& u, const EmbeddingVector& v);

}  // namespace decap
