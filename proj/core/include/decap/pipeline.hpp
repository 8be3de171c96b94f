#pragma once

// Per-record and per-run orchestration:
// detect -> retrieve -> guide -> assemble -> answer -> parse.

#include "decap/corpus.hpp"
#include "decap/detector.hpp"
#include "decap/evaluator.hpp"
#include "decap/guidance.hpp"
#include "decap/llmclient.hpp"
#include "decap/promptkit.hpp"
#include "decap/retrieval.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace decap {

struct RunConfig {
  Mode mode = Mode::Decap;
  Template tmpl = Template::ChoicePlus;
  std::vector<int> seeds{0, 1, 2};
  DetectorConfig detector;
  RetrievalConfig retrieval;
  GenerationParams guidance_params = kLongGeneration;
  GenerationParams explanation_params = kLongGeneration;
  GenerationParams answer_params = kAnswerGeneration;
  std::size_t max_in_flight = 8;
  std::string model_name;  // report label; empty means the answerer's id
  RetryPolicy retry;

  /// Throws ConfigError for empty seeds, max_in_flight == 0 or a bad stage config.
  void validate() const;
};

/// Stage backends. `index` is required by the guidance modes only.
struct Backends {
  Backend* reasoner = nullptr;
  Backend* generator = nullptr;
  Backend* answerer = nullptr;
  const NeutralIndex* index = nullptr;
};

/// Results of earlier runs to reuse instead of calling the backends again.
/// Stored detections are re-thresholded with the current detector config.
struct StageCache {
  std::map<std::string, DetectionResult> detections;
  std::map<std::string, GuidanceResult> guidance;
};

struct SeededPrompt {
  int seed = 0;
  AssembledPrompt prompt;
};

struct RecordOutcome {
  AssembledPrompt prompt;
  ParsedAnswer answer;
  std::optional<DetectionResult> detection;
  std::optional<GuidanceResult> guidance;
};

struct RunResult {
  std::vector<DetectionResult> detections;  // successful detections, record order
  std::vector<GuidanceResult> guidance;     // one per record for guidance modes
  std::vector<SeededPrompt> prompts;        // seed-major, then record order
  std::vector<ScoredAnswer> answers;        // same order as prompts
  EvalReport report;
};

/// Detection stage alone; nullopt where the reasoning call failed.
std::vector<std::optional<DetectionResult>> run_detection(std::span<const QuestionRecord> records,
                                                          const RunConfig& config, Backend& reasoner,
                                                          Transcript* transcript = nullptr,
                                                          const StageCache* cache = nullptr);

/// Guidance stage alone for a guidance mode; failures carry `error`.
std::vector<GuidanceResult> run_guidance(std::span<const QuestionRecord> records, const RunConfig& config,
                                         const Backends& backends, Transcript* transcript = nullptr,
                                         const StageCache* cache = nullptr);

/// One record, one seed. Stage failures are recorded in the outcome.
RecordOutcome run_record(const QuestionRecord& record, const RunConfig& config, const Backends& backends, int seed,
                         Transcript* transcript = nullptr);

/// All records, every seed. Detection and guidance run once per record;
/// only the shuffle and the answer call vary per seed. Throws ConfigError
/// for an empty record list or missing backends; per-record failures never
/// abort the run.
RunResult run_dataset(std::span<const QuestionRecord> records, const RunConfig& config, const Backends& backends,
                      Transcript* transcript = nullptr, const StageCache* cache = nullptr);

/// Stage failure counts and detector confusion, recomputed from artifacts.
RunDiagnostics compute_diagnostics(Mode mode, const std::string& model, std::span<const QuestionRecord> records,
                                   std::span<const DetectionResult> detections,
                                   std::span<const GuidanceResult> guidance, std::span<const SeededPrompt> prompts,
                                   std::span<const ScoredAnswer> answers);

/// aggregate() plus diagnostics; what run_dataset reports.
EvalReport build_report(Mode mode, const std::string& model, std::span<const QuestionRecord> records,
                        std::span<const DetectionResult> detections, std::span<const GuidanceResult> guidance,
                        std::span<const SeededPrompt> prompts, std::span<const ScoredAnswer> answers);

// --- run directory -----------------------------------------------------------

namespace run_files {
inline constexpr const char* kConfig = "config.json";
inline constexpr const char* kDetections = "detections.jsonl";
inline constexpr const char* kGuidance = "guidance.jsonl";
inline constexpr const char* kPrompts = "prompts.jsonl";
inline constexpr const char* kAnswers = "answers.jsonl";
inline constexpr const char* kReportJson = "report.json";
inline constexpr const char* kReportCsv = "report.csv";
inline constexpr const char* kTranscript = "transcript.jsonl";
}  // namespace run_files

/// Writes all eight artifacts. `config` is stored verbatim as config.json.
void write_run_directory(const std::filesystem::path& dir, const nlohmann::json& config, const RunResult& result,
                         const Transcript& transcript);

struct StoredRun {
  std::vector<DetectionResult> detections;
  std::vector<GuidanceResult> guidance;
  std::vector<SeededPrompt> prompts;
  std::vector<ScoredAnswer> answers;
};

/// Reads the stage artifacts back; absent files give empty lists.
StoredRun read_run_directory(const std::filesystem::path& dir);

std::vector<DetectionResult> read_detections(const std::filesystem::path& path);

nlohmann::json run_config_to_json(const RunConfig& config);
/// Missing keys keep their defaults.
RunConfig run_config_from_json(const nlohmann::json& j);

void to_json(nlohmann::json& j, const SeededPrompt& prompt);
void from_json(const nlohmann::json& j, SeededPrompt& prompt);

}  // namespace decap
