#include "decap/errors.hpp"
#include "decap/jsonl.hpp"
#include "decap/pipeline.hpp"

namespace decap {

namespace {

template <typename T>
std::vector<nlohmann::json> to_rows(const std::vector<T>& items) {
  std::vector<nlohmann::json> rows;
  rows.reserve(items.size());
  for (const auto& item : items) rows.emplace_back(item);
  return rows;
}

template <typename T>
std::vector<T> read_rows(const std::filesystem::path& path) {
  std::vector<T> out;
  if (!std::filesystem::exists(path)) return out;
  jsonl::for_each_line(path, [&](const nlohmann::json& row, std::size_t line) {
    try {
      out.push_back(row.get<T>());
    } catch (const nlohmann::json::exception& e) {
      throw IngestionError(path.string(), line, e.what());
    } catch (const ConfigError& e) {
      throw IngestionError(path.string(), line, e.what());
    }
  });
  return out;
}

nlohmann::json params_json(const GenerationParams& params) {
  return nlohmann::json{{"temperature", params.temperature}, {"max_new_tokens", params.max_new_tokens}};
}

void read_params(const nlohmann::json& j, const char* key, GenerationParams& params) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  params.temperature = it->value("temperature", params.temperature);
  params.max_new_tokens = it->value("max_new_tokens", params.max_new_tokens);
}

}  // namespace

void write_run_directory(const std::filesystem::path& dir, const nlohmann::json& config, const RunResult& result,
                         const Transcript& transcript) {
  std::filesystem::create_directories(dir);
  jsonl::write_text(dir / run_files::kConfig, config.dump(2) + "\n");
  jsonl::write(dir / run_files::kDetections, to_rows(result.detections));
  jsonl::write(dir / run_files::kGuidance, to_rows(result.guidance));
  jsonl::write(dir / run_files::kPrompts, to_rows(result.prompts));
  jsonl::write(dir / run_files::kAnswers, to_rows(result.answers));
  jsonl::write_text(dir / run_files::kReportJson, report_to_json_text(result.report));
  jsonl::write_text(dir / run_files::kReportCsv, report_to_csv(result.report));
  transcript.write(dir / run_files::kTranscript);
}

std::vector<DetectionResult> read_detections(const std::filesystem::path& path) {
  return read_rows<DetectionResult>(path);
}

StoredRun read_run_directory(const std::filesystem::path& dir) {
  StoredRun run;
  run.detections = read_rows<DetectionResult>(dir / run_files::kDetections);
  run.guidance = read_rows<GuidanceResult>(dir / run_files::kGuidance);
  run.prompts = read_rows<SeededPrompt>(dir / run_files::kPrompts);
  run.answers = read_rows<ScoredAnswer>(dir / run_files::kAnswers);
  return run;
}

nlohmann::json run_config_to_json(const RunConfig& config) {
  return nlohmann::json{{"mode", to_string(config.mode)},
                        {"template", to_string(config.tmpl)},
                        {"seeds", config.seeds},
                        {"threshold", config.detector.threshold},
                        {"rouge", to_string(config.detector.rouge_variant)},
                        {"k", config.retrieval.k},
                        {"reason_params", params_json(config.detector.reason_params)},
                        {"guidance_params", params_json(config.guidance_params)},
                        {"explanation_params", params_json(config.explanation_params)},
                        {"answer_params", params_json(config.answer_params)},
                        {"max_in_flight", config.max_in_flight},
                        {"model_name", config.model_name},
                        {"max_retries", config.retry.max_retries},
                        {"retry_base_delay_ms", config.retry.base_delay.count()}};
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig config;
  try {
    if (j.contains("mode")) config.mode = parse_mode(j.at("mode").get<std::string>());
    if (j.contains("template")) config.tmpl = parse_template(j.at("template").get<std::string>());
    config.seeds = j.value("seeds", config.seeds);
    config.detector.threshold = j.value("threshold", config.detector.threshold);
    if (j.contains("rouge")) config.detector.rouge_variant = parse_rouge_variant(j.at("rouge").get<std::string>());
    config.retrieval.k = j.value("k", config.retrieval.k);
    read_params(j, "reason_params", config.detector.reason_params);
    read_params(j, "guidance_params", config.guidance_params);
    read_params(j, "explanation_params", config.explanation_params);
    read_params(j, "answer_params", config.answer_params);
    config.max_in_flight = j.value("max_in_flight", config.max_in_flight);
    config.model_name = j.value("model_name", config.model_name);
    config.retry.max_retries = j.value("max_retries", config.retry.max_retries);
    config.retry.base_delay =
        std::chrono::milliseconds(j.value("retry_base_delay_ms", static_cast<std::int64_t>(config.retry.base_delay.count())));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad run config: ") + e.what());
  }
  return config;
}

void to_json(nlohmann::json& j, const SeededPrompt& prompt) {
  j = prompt.prompt;
  j["seed"] = prompt.seed;
}

void from_json(const nlohmann::json& j, SeededPrompt& prompt) {
  prompt.prompt = j.get<AssembledPrompt>();
  prompt.seed = j.at("seed").get<int>();
}

}  // namespace decap
