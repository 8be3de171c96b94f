#pragma once

// Question ambiguity detection.
//
// An LLM answers the question with a reason; the question plus that reply
// is scored against the context with ROUGE. Low overlap means the model had
// to reach beyond the context, so the question is treated as ambiguous.

#include "decap/corpus.hpp"
#include "decap/llmclient.hpp"
#include "decap/textmetrics.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace decap {

inline constexpr std::string_view kAmbiguousPrefix =
    "When we do not have sufficient information, we should choose an unknown option, rather than "
    "making assumptions based on our stereotypes.";
inline constexpr std::string_view kUnambiguousPrefix =
    "When we do have sufficient information, we should choose the right answer according to the "
    "question.";

struct DetectorConfig {
  double threshold = 0.35;
  RougeVariant rouge_variant = RougeVariant::L;
  GenerationParams reason_params = kLongGeneration;

  /// Throws ConfigError unless 0 < threshold < 1.
  void validate() const;
};

struct DetectionResult {
  std::string record_id;
  std::string reason_text;
  double similarity = 0.0;
  QuestionType predicted_type = QuestionType::Ambiguous;
  std::string prefix;
};

std::string build_reasoning_prompt(const QuestionRecord& record);

/// Zero-shot "ask the LLM directly" detector prompt, kept for comparison runs.
std::string build_llm_detection_prompt(const QuestionRecord& record);

/// Ambiguous iff similarity < threshold; a score equal to the threshold is
/// unambiguous.
QuestionType classify_similarity(double similarity, double threshold) noexcept;

/// similarity = rouge(tokenize(context), tokenize(question + " " + reason_text)).
DetectionResult detect(const QuestionRecord& record, const std::string& reason_text,
                       const DetectorConfig& config);

std::string_view select_prefix(QuestionType predicted_type) noexcept;

struct DetectorAccuracy {
  std::optional<double> ambiguous;    // absent when no gold-ambiguous items
  std::optional<double> unambiguous;  // absent when no gold-unambiguous items
  std::optional<double> total;
};

struct LabeledPrediction {
  QuestionType predicted;
  QuestionType gold;
};

DetectorAccuracy detector_accuracy(std::span<const LabeledPrediction> predictions);

struct ScoredItem {
  double similarity;
  QuestionType gold;
};

struct SweepRow {
  double threshold = 0.0;
  DetectorAccuracy accuracy;
  std::size_t predicted_ambiguous = 0;
  std::size_t predicted_unambiguous = 0;
};

/// Re-thresholds stored similarities; no LLM calls. Throws PreconditionError
/// on empty input.
std::vector<SweepRow> sweep_thresholds(std::span<const ScoredItem> items, std::span<const double> thresholds);

/// CSV with header threshold,ambig_acc,unambig_acc,total_acc,n_pred_ambig,n_pred_unambig.
/// Undefined accuracies are written as empty cells.
std::string sweep_to_csv(std::span<const SweepRow> rows);

void to_json(nlohmann::json& j, const DetectionResult& result);
void from_json(const nlohmann::json& j, DetectionResult& result);

}  // namespace decap
