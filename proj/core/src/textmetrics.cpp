#include "decap/textmetrics.hpp"

#include "decap/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace decap {

namespace {

bool is_alnum_ascii(unsigned char c) noexcept {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

char lower_ascii(unsigned char c) noexcept {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
}

double f1_from_overlap(double overlap, double reference_size, double candidate_size) {
  if (overlap <= 0.0 || reference_size <= 0.0 || candidate_size <= 0.0) return 0.0;
  // 2PR/(P+R) with P = o/c and R = o/r reduces to 2o/(r+c).
  return 2.0 * overlap / (reference_size + candidate_size);
}

std::map<std::vector<std::string_view>, std::size_t> ngram_counts(const TokenSequence& seq,
                                                                  std::size_t n) {
  std::map<std::vector<std::string_view>, std::size_t> counts;
  if (seq.size() < n) return counts;
  for (std::size_t i = 0; i + n <= seq.size(); ++i) {
    std::vector<std::string_view> gram;
    gram.reserve(n);
    for (std::size_t k = 0; k < n; ++k) gram.emplace_back(seq[i + k]);
    ++counts[gram];
  }
  return counts;
}

}  // namespace

TokenSequence::TokenSequence(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  for (const auto& token : tokens_) {
    if (token.empty()) throw PreconditionError("TokenSequence: empty token");
  }
}

std::string TokenSequence::joined() const {
  std::string out;
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (i > 0) out += ' ';
    out += tokens_[i];
  }
  return out;
}

TokenSequence tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (is_alnum_ascii(c)) {
      current += lower_ascii(c);
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return TokenSequence(std::move(tokens));
}

std::string_view to_string(RougeVariant variant) noexcept {
  switch (variant) {
    case RougeVariant::L: return "rouge-l";
    case RougeVariant::One: return "rouge-1";
    case RougeVariant::Two: return "rouge-2";
  }
  return "rouge-l";
}

RougeVariant parse_rouge_variant(std::string_view text) {
  if (text == "rouge-l" || text == "L" || text == "l") return RougeVariant::L;
  if (text == "rouge-1" || text == "1") return RougeVariant::One;
  if (text == "rouge-2" || text == "2") return RougeVariant::Two;
  throw ConfigError("unknown ROUGE variant '" + std::string(text) + "'");
}

std::size_t lcs_length(const TokenSequence& a, const TokenSequence& b) {
  const TokenSequence& rows = a.size() >= b.size() ? a : b;
  const TokenSequence& cols = a.size() >= b.size() ? b : a;
  std::vector<std::size_t> prev(cols.size() + 1, 0);
  std::vector<std::size_t> curr(cols.size() + 1, 0);
  for (std::size_t i = 1; i <= rows.size(); ++i) {
    for (std::size_t j = 1; j <= cols.size(); ++j) {
      curr[j] = rows[i - 1] == cols[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], curr[j - 1]);
    }
    std::swap(prev, curr);
  }
  return prev[cols.size()];
}

double rouge_l(const TokenSequence& reference, const TokenSequence& candidate) {
  if (reference.empty() || candidate.empty()) return 0.0;
  return f1_from_overlap(static_cast<double>(lcs_length(reference, candidate)),
                         static_cast<double>(reference.size()),
                         static_cast<double>(candidate.size()));
}

double rouge_n(const TokenSequence& reference, const TokenSequence& candidate, std::size_t n) {
  if (n == 0) throw PreconditionError("rouge_n: n must be positive");
  if (reference.size() < n || candidate.size() < n) return 0.0;
  const auto ref_counts = ngram_counts(reference, n);
  const auto cand_counts = ngram_counts(candidate, n);
  std::size_t overlap = 0;
  for (const auto& [gram, count] : cand_counts) {
    const auto it = ref_counts.find(gram);
    if (it != ref_counts.end()) overlap += std::min(count, it->second);
  }
  return f1_from_overlap(static_cast<double>(overlap),
                         static_cast<double>(reference.size() - n + 1),
                         static_cast<double>(candidate.size() - n + 1));
}

double rouge(const TokenSequence& reference, const TokenSequence& candidate, RougeVariant variant) {
  switch (variant) {
    case RougeVariant::L: return rouge_l(reference, candidate);
    case RougeVariant::One: return rouge_n(reference, candidate, 1);
    case RougeVariant::Two: return rouge_n(reference, candidate, 2);
  }
  return rouge_l(reference, candidate);
}

EmbeddingVector::EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw PreconditionError("EmbeddingVector: dim must be positive");
  if (!std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); })) {
    throw PreconditionError("EmbeddingVector: non-finite value");
  }
}

bool EmbeddingVector::is_zero() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
}

double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
  if (u.dim() != v.dim()) {
    throw PreconditionError("cosine: dimension mismatch (" + std::to_string(u.dim()) + " vs " +
                            std::to_string(v.dim()) + ")");
  }
  double dot = 0.0;
  double uu = 0.0;
  double vv = 0.0;
  for (std::size_t i = 0; i < u.dim(); ++i) {
    dot += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0) throw PreconditionError("cosine: zero vector");
  const double c = dot / (std::sqrt(uu) * std::sqrt(vv));
  return std::clamp(c, -1.0, 1.0);
}

}  // namespace decap
