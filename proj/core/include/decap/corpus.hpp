#pragma once

// Benchmark ingestion into canonical QuestionRecords.
//
// Both loaders read JSONL, one object per line:
//   {"id", "dataset", "category", "context", "question",
//    "options": [{"text", "role"}], "gold_role", "question_type", "polarity"}
// UNQOVER-like sources carry only the two social-group options and no
// "question_type"; the loader adds the unknown option.

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace decap {

enum class DatasetKind { BbqLike, UnqoverLike };
enum class OptionRole { Target, NonTarget, Unknown };
enum class QuestionType { Ambiguous, Unambiguous };
enum class Polarity { Negative, NonNegative };

std::string_view to_string(DatasetKind kind) noexcept;
std::string_view to_string(OptionRole role) noexcept;
std::string_view to_string(QuestionType type) noexcept;
std::string_view to_string(Polarity polarity) noexcept;

// Parsers throw ConfigError on unknown spellings.
DatasetKind parse_dataset_kind(std::string_view text);
OptionRole parse_option_role(std::string_view text);
QuestionType parse_question_type(std::string_view text);
Polarity parse_polarity(std::string_view text);

struct OptionEntry {
  std::string text;
  OptionRole role = OptionRole::Unknown;

  bool operator==(const OptionEntry&) const = default;
};

struct QuestionRecord {
  std::string id;
  DatasetKind dataset = DatasetKind::BbqLike;
  std::string category;
  std::string context;
  std::string question;
  std::vector<OptionEntry> options;  // exactly 3 once validated
  OptionRole gold_role = OptionRole::Unknown;
  QuestionType question_type = QuestionType::Ambiguous;
  Polarity polarity = Polarity::Negative;

  /// Index of the option carrying `role`; validated records always have one.
  std::size_t option_index(OptionRole role) const;

  bool operator==(const QuestionRecord&) const = default;
};

/// Throws ValidationError naming the record id on the first violated invariant.
void validate(const QuestionRecord& record);

/// All invariant violations, empty when the record is valid.
std::vector<std::string> violations(const QuestionRecord& record);

/// The ten canonical surface forms of the "unknown" answer, in fixed order.
std::span<const std::string_view> unknown_identifiers() noexcept;

/// Matches unknown_identifiers() after trimming, lowercasing and stripping
/// one trailing period on both sides.
bool is_unknown_option(std::string_view text);

std::vector<QuestionRecord> load_bbq_like(const std::filesystem::path& path);
std::vector<QuestionRecord> load_unqover_like(const std::filesystem::path& path,
                                              std::uint64_t rng_seed);

/// Dispatches on the "dataset" field of the first record. An empty file
/// yields an empty list.
std::vector<QuestionRecord> load_dataset(const std::filesystem::path& path,
                                         std::uint64_t rng_seed = 0);

struct DatasetIssue {
  std::size_t line = 0;
  std::string record_id;
  std::string message;
};

struct DatasetCheck {
  std::size_t n_records = 0;  // lines that parsed into a record
  std::vector<DatasetIssue> issues;
  bool clean() const noexcept { return issues.empty(); }
};

/// Non-throwing scan reporting every malformed line and invariant violation.
/// Only an unreadable file raises (IngestionError).
DatasetCheck check_dataset(const std::filesystem::path& path);

void to_json(nlohmann::json& j, const OptionEntry& option);
void to_json(nlohmann::json& j, const QuestionRecord& record);
void from_json(const nlohmann::json& j, OptionEntry& option);
void from_json(const nlohmann::json& j, QuestionRecord& record);

}  // namespace decap
