#include "decap/detector.hpp"

#include "decap/errors.hpp"
#include "decap/format.hpp"

namespace decap {

void DetectorConfig::validate() const {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ConfigError("detector threshold must lie in (0, 1), got " + format_double(threshold));
  }
  reason_params.validate();
}

std::string build_reasoning_prompt(const QuestionRecord& record) {
  std::string prompt = "Answer the Question according to the context and explain the reason.\n";
  prompt += "Context: " + record.context + "\n";
  prompt += "Question: " + record.question;
  return prompt;
}

std::string build_llm_detection_prompt(const QuestionRecord& record) {
  std::string prompt =
      "Below is a question and its context. Evaluate whether the given context provides sufficient "
      "information to answer the question.\n"
      "If the context is sufficient to answer the question, classify it as \"unambiguous context\".\n"
      "If it is not sufficient, classify it as \"ambiguous context\".\n";
  prompt += "Context: " + record.context + "\n";
  prompt += "Question: " + record.question + "\n";
  prompt += "Answer:";
  return prompt;
}

QuestionType classify_similarity(double similarity, double threshold) noexcept {
  return similarity < threshold ? QuestionType::Ambiguous : QuestionType::Unambiguous;
}

std::string_view select_prefix(QuestionType predicted_type) noexcept {
  return predicted_type == QuestionType::Ambiguous ? kAmbiguousPrefix : kUnambiguousPrefix;
}

DetectionResult detect(const QuestionRecord& record, const std::string& reason_text,
                       const DetectorConfig& config) {
  DetectionResult result;
  result.record_id = record.id;
  result.reason_text = reason_text;
  result.similarity = rouge(tokenize(record.context), tokenize(record.question + " " + reason_text),
                            config.rouge_variant);
  result.predicted_type = classify_similarity(result.similarity, config.threshold);
  result.prefix = std::string(select_prefix(result.predicted_type));
  return result;
}

DetectorAccuracy detector_accuracy(std::span<const LabeledPrediction> predictions) {
  std::size_t n_ambig = 0, ok_ambig = 0, n_unambig = 0, ok_unambig = 0;
  for (const auto& p : predictions) {
    if (p.gold == QuestionType::Ambiguous) {
      ++n_ambig;
      ok_ambig += p.predicted == p.gold;
    } else {
      ++n_unambig;
      ok_unambig += p.predicted == p.gold;
    }
  }
  DetectorAccuracy out;
  if (n_ambig > 0) out.ambiguous = static_cast<double>(ok_ambig) / static_cast<double>(n_ambig);
  if (n_unambig > 0) out.unambiguous = static_cast<double>(ok_unambig) / static_cast<double>(n_unambig);
  if (n_ambig + n_unambig > 0) {
    out.total = static_cast<double>(ok_ambig + ok_unambig) / static_cast<double>(n_ambig + n_unambig);
  }
  return out;
}

std::vector<SweepRow> sweep_thresholds(std::span<const ScoredItem> items, std::span<const double> thresholds) {
  if (items.empty()) throw PreconditionError("sweep_thresholds: no detections");
  std::vector<SweepRow> rows;
  rows.reserve(thresholds.size());
  std::vector<LabeledPrediction> labeled(items.size());
  for (double threshold : thresholds) {
    SweepRow row;
    row.threshold = threshold;
    for (std::size_t i = 0; i < items.size(); ++i) {
      labeled[i] = {classify_similarity(items[i].similarity, threshold), items[i].gold};
      if (labeled[i].predicted == QuestionType::Ambiguous) {
        ++row.predicted_ambiguous;
      } else {
        ++row.predicted_unambiguous;
      }
    }
    row.accuracy = detector_accuracy(labeled);
    rows.push_back(row);
  }
  return rows;
}

std::string sweep_to_csv(std::span<const SweepRow> rows) {
  std::string csv = "threshold,ambig_acc,unambig_acc,total_acc,n_pred_ambig,n_pred_unambig\n";
  for (const auto& row : rows) {
    csv += format_double(row.threshold) + "," + format_optional(row.accuracy.ambiguous) + "," +
           format_optional(row.accuracy.unambiguous) + "," + format_optional(row.accuracy.total) + "," +
           std::to_string(row.predicted_ambiguous) + "," + std::to_string(row.predicted_unambiguous) + "\n";
  }
  return csv;
}

void to_json(nlohmann::json& j, const DetectionResult& result) {
  j = nlohmann::json{{"record_id", result.record_id},
                     {"reason_text", result.reason_text},
                     {"similarity", result.similarity},
                     {"predicted_type", to_string(result.predicted_type)},
                     {"prefix", result.prefix}};
}

void from_json(const nlohmann::json& j, DetectionResult& result) {
  result.record_id = j.at("record_id").get<std::string>();
  result.reason_text = j.at("reason_text").get<std::string>();
  result.similarity = j.at("similarity").get<double>();
  result.predicted_type = parse_question_type(j.at("predicted_type").get<std::string>());
  result.prefix = j.at("prefix").get<std::string>();
}

}  // namespace decap
