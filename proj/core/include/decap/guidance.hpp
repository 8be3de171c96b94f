#pragma once

// Neutral answer guidance: few-shot prompt over retrieved neutral pairs,
// output clean-up, and the coherence/neutrality judge prompts.

#include "decap/corpus.hpp"
#include "decap/retrieval.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace decap {

struct GuidanceResult {
  std::string record_id;
  std::vector<std::string> demo_ids;  // rank order
  std::string raw_output;
  std::string guidance;  // empty iff generation failed
  std::string error;

  bool failed() const noexcept { return guidance.empty(); }
};

std::string build_guidance_prompt(const QuestionRecord& record, std::span<const NeutralPair> demos);

/// First line, trimmed, without a leading "Response Sentence:" echo, cut
/// after the first '.', '!' or '?'. An unterminated sentence gets a '.'.
/// Throws GuidanceError when nothing is left.
std::string postprocess_guidance(std::string_view raw_output);

std::string build_coherence_prompt(std::string_view context, std::string_view sentence_a,
                                   std::string_view sentence_b);
std::string build_neutrality_prompt(std::string_view sentence);

/// "neutral" -> true, "not neutral" -> false, neither -> nullopt.
std::optional<bool> parse_neutrality_verdict(std::string_view reply);
/// 'A' or 'B' from the first "(A)"/"(B)" token.
std::optional<char> parse_coherence_choice(std::string_view reply);

/// Guidance cache: JSONL {"record_id", "demo_ids", "guidance"}.
void write_guidance_cache(const std::filesystem::path& path, std::span<const GuidanceResult> results);
std::map<std::string, GuidanceResult> read_guidance_cache(const std::filesystem::path& path);

void to_json(nlohmann::json& j, const GuidanceResult& result);
void from_json(const nlohmann::json& j, GuidanceResult& result);

}  // namespace decap
