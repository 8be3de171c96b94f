#include "decap/pipeline.hpp"

#include "decap/errors.hpp"
#include "decap/rng.hpp"

#include <cctype>
#include <set>

namespace decap {

void RunConfig::validate() const {
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (max_in_flight == 0) throw ConfigError("max_in_flight must be >= 1");
  detector.validate();
  retrieval.validate();
  guidance_params.validate();
  explanation_params.validate();
  answer_params.validate();
}

namespace {

std::string collapse_whitespace(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += c;
  }
  return out;
}

void record_calls(Transcript* transcript, std::string_view stage, const std::vector<std::string>& ids,
                  std::optional<int> seed, const Backend& backend, std::span<const CompletionRequest> requests,
                  std::span<const CompletionResult> results) {
  if (!transcript) return;
  for (std::size_t i = 0; i < requests.size(); ++i) {
    transcript->add(stage, ids[i], seed, backend.id(), requests[i], results[i]);
  }
}

struct Stages {
  const RunConfig& config;
  const Backends& backends;
  Transcript* transcript;
  const StageCache* cache;

  std::vector<std::optional<DetectionResult>> detect(std::span<const QuestionRecord> records) const {
    std::vector<std::optional<DetectionResult>> out(records.size());
    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (cache) {
        if (const auto it = cache->detections.find(records[i].id); it != cache->detections.end()) {
          out[i] = decap::detect(records[i], it->second.reason_text, config.detector);
          continue;
        }
      }
      pending.push_back(i);
    }
    std::vector<CompletionRequest> requests;
    std::vector<std::string> ids;
    for (auto i : pending) {
      requests.push_back({build_reasoning_prompt(records[i]), config.detector.reason_params});
      ids.push_back(records[i].id);
    }
    const auto results = run_batch(*backends.reasoner, requests, config.max_in_flight, config.retry);
    record_calls(transcript, "detect", ids, std::nullopt, *backends.reasoner, requests, results);
    for (std::size_t n = 0; n < pending.size(); ++n) {
      if (results[n].ok()) out[pending[n]] = decap::detect(records[pending[n]], results[n].text, config.detector);
    }
    return out;
  }

  std::vector<GuidanceResult> guide(std::span<const QuestionRecord> records) const {
    std::vector<GuidanceResult> out(records.size());
    std::vector<std::size_t> to_generate;
    std::vector<CompletionRequest> requests;
    std::vector<std::string> ids;
    const auto& index = *backends.index;

    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto& record = records[i];
      auto& result = out[i];
      result.record_id = record.id;
      if (cache) {
        if (const auto it = cache->guidance.find(record.id); it != cache->guidance.end()) {
          result = it->second;
          continue;
        }
      }
      try {
        switch (config.mode) {
          case Mode::RandomGuidance: {
            Engine engine(mix_seed(0, record.id));
            const auto& pair = index.pairs()[uniform_index(engine, index.size())];
            result.demo_ids = {pair.pair_id};
            result.guidance = pair.acceptable_response;
            break;
          }
          case Mode::RetrievedGuidance: {
            const auto top = index.top_k(retrieval_query(record), 1);
            result.demo_ids = {top.front().pair_id};
            result.guidance = top.front().acceptable_response;
            break;
          }
          default: {
            const auto demos = index.top_k(retrieval_query(record), config.retrieval.k);
            for (const auto& demo : demos) result.demo_ids.push_back(demo.pair_id);
            requests.push_back({build_guidance_prompt(record, demos), config.guidance_params});
            ids.push_back(record.id);
            to_generate.push_back(i);
            break;
          }
        }
      } catch (const Error& e) {
        result.error = e.what();
      }
    }
    if (to_generate.empty()) return out;

    const auto results = run_batch(*backends.generator, requests, config.max_in_flight, config.retry);
    record_calls(transcript, "guide", ids, std::nullopt, *backends.generator, requests, results);
    for (std::size_t n = 0; n < to_generate.size(); ++n) {
      auto& result = out[to_generate[n]];
      if (!results[n].ok()) {
        result.error = results[n].error;
        continue;
      }
      result.raw_output = results[n].text;
      try {
        result.guidance = postprocess_guidance(results[n].text);
      } catch (const GuidanceError& e) {
        result.error = e.what();
      }
    }
    return out;
  }

  std::vector<std::optional<std::string>> explain(std::span<const QuestionRecord> records) const {
    std::vector<CompletionRequest> requests;
    std::vector<std::string> ids;
    for (const auto& record : records) {
      requests.push_back({build_sd_explanation_prompt(record), config.explanation_params});
      ids.push_back(record.id);
    }
    const auto results = run_batch(*backends.answerer, requests, config.max_in_flight, config.retry);
    record_calls(transcript, "explain", ids, std::nullopt, *backends.answerer, requests, results);
    std::vector<std::optional<std::string>> out(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (!results[i].ok()) continue;
      auto text = collapse_whitespace(results[i].text);
      if (!text.empty()) out[i] = std::move(text);
    }
    return out;
  }
};

void check_backends(const RunConfig& config, const Backends& backends) {
  if (!backends.answerer) throw ConfigError("no answer backend");
  if (mode_uses_detection(config.mode) && !backends.reasoner) {
    throw ConfigError("mode '" + std::string(to_string(config.mode)) + "' needs a reasoning backend");
  }
  if (mode_uses_corpus(config.mode) && !backends.index) {
    throw ConfigError("mode '" + std::string(to_string(config.mode)) + "' needs a neutral corpus");
  }
  if (config.mode == Mode::Decap || config.mode == Mode::DecapNoPrefix) {
    if (!backends.generator) throw ConfigError("guidance generation needs a generator backend");
    if (config.retrieval.k > backends.index->size()) {
      throw ConfigError("retrieval k=" + std::to_string(config.retrieval.k) + " exceeds the corpus size " +
                        std::to_string(backends.index->size()));
    }
  }
}

}  // namespace

std::vector<std::optional<DetectionResult>> run_detection(std::span<const QuestionRecord> records,
                                                          const RunConfig& config, Backend& reasoner,
                                                          Transcript* transcript, const StageCache* cache) {
  config.validate();
  Backends backends;
  backends.reasoner = &reasoner;
  return Stages{config, backends, transcript, cache}.detect(records);
}

std::vector<GuidanceResult> run_guidance(std::span<const QuestionRecord> records, const RunConfig& config,
                                         const Backends& backends, Transcript* transcript,
                                         const StageCache* cache) {
  config.validate();
  if (!mode_uses_guidance(config.mode)) {
    throw ConfigError("mode '" + std::string(to_string(config.mode)) + "' does not use guidance");
  }
  auto checked = backends;
  if (!checked.answerer) checked.answerer = checked.generator;
  if (!checked.reasoner) checked.reasoner = checked.generator;
  check_backends(config, checked);
  return Stages{config, backends, transcript, cache}.guide(records);
}

RunResult run_dataset(std::span<const QuestionRecord> records, const RunConfig& config, const Backends& backends,
                      Transcript* transcript, const StageCache* cache) {
  config.validate();
  if (records.empty()) throw ConfigError("no records to run");
  check_backends(config, backends);
  const auto model = config.model_name.empty() ? backends.answerer->id() : config.model_name;
  const Stages stages{config, backends, transcript, cache};
  RunResult result;

  std::vector<std::optional<DetectionResult>> detections(records.size());
  if (mode_uses_detection(config.mode)) {
    detections = stages.detect(records);
    for (const auto& d : detections) {
      if (d) result.detections.push_back(*d);
    }
  }
  std::vector<GuidanceResult> guidance;
  if (mode_uses_guidance(config.mode)) {
    guidance = stages.guide(records);
    result.guidance = guidance;
  }
  std::vector<std::optional<std::string>> explanations(records.size());
  if (config.mode == Mode::SelfDebias) explanations = stages.explain(records);

  std::vector<CompletionRequest> requests;
  for (int seed : config.seeds) {
    for (std::size_t i = 0; i < records.size(); ++i) {
      PromptInputs inputs;
      if (detections[i]) inputs.detected_prefix = detections[i]->prefix;
      if (!guidance.empty() && !guidance[i].failed()) inputs.guidance = guidance[i].guidance;
      inputs.sd_explanation = explanations[i];
      const auto letter_map = shuffle_options(records[i], static_cast<std::uint64_t>(seed));
      auto prompt = assemble_prompt(records[i], config.mode, config.tmpl, letter_map, inputs);
      auto params = config.answer_params;
      params.seed = seed;
      requests.push_back({prompt.body, params});
      result.prompts.push_back({seed, std::move(prompt)});
    }
  }
  const auto replies = run_batch(*backends.answerer, requests, config.max_in_flight, config.retry);
  for (std::size_t n = 0; n < replies.size(); ++n) {
    const auto& seeded = result.prompts[n];
    const auto& record = records[n % records.size()];
    if (transcript) {
      transcript->add("answer", record.id, seeded.seed, backends.answerer->id(), requests[n], replies[n]);
    }
    ScoredAnswer scored{model, std::string(to_string(config.mode)), seeded.seed, {}, {}};
    if (replies[n].ok()) {
      scored.answer = parse_answer(replies[n].text, seeded.prompt.letter_map, record.options, record.id);
    } else {
      scored.answer.record_id = record.id;
      scored.error = replies[n].error.empty() ? std::string("answer call failed") : replies[n].error;
    }
    result.answers.push_back(std::move(scored));
  }

  result.report = build_report(config.mode, model, records, result.detections, result.guidance, result.prompts,
                               result.answers);
  return result;
}

RecordOutcome run_record(const QuestionRecord& record, const RunConfig& config, const Backends& backends, int seed,
                         Transcript* transcript) {
  auto single = config;
  single.seeds = {seed};
  auto result = run_dataset(std::span(&record, 1), single, backends, transcript);
  RecordOutcome out;
  out.prompt = std::move(result.prompts.front().prompt);
  out.answer = std::move(result.answers.front().answer);
  if (!result.detections.empty()) out.detection = std::move(result.detections.front());
  if (!result.guidance.empty()) out.guidance = std::move(result.guidance.front());
  return out;
}

RunDiagnostics compute_diagnostics(Mode mode, const std::string& model, std::span<const QuestionRecord> records,
                                   std::span<const DetectionResult> detections,
                                   std::span<const GuidanceResult> guidance, std::span<const SeededPrompt> prompts,
                                   std::span<const ScoredAnswer> answers) {
  RunDiagnostics diag;
  diag.model = model;
  diag.mode = std::string(to_string(mode));
  if (mode_uses_detection(mode)) {
    std::map<std::string, QuestionType> gold;
    for (const auto& record : records) gold.emplace(record.id, record.question_type);
    DetectorConfusion confusion;
    std::int64_t detected = 0;
    for (const auto& d : detections) {
      const auto it = gold.find(d.record_id);
      if (it == gold.end()) continue;
      confusion.add(it->second, d.predicted_type);
      ++detected;
    }
    diag.detector = confusion;
    diag.detection_failures = static_cast<std::int64_t>(records.size()) - detected;
  }
  for (const auto& g : guidance) diag.guidance_failures += g.failed() ? 1 : 0;
  std::set<std::string> unexplained;
  for (const auto& p : prompts) {
    if (p.prompt.explanation_failed) unexplained.insert(p.prompt.record_id);
  }
  diag.explanation_failures = static_cast<std::int64_t>(unexplained.size());
  for (const auto& a : answers) diag.answer_failures += a.error.empty() ? 0 : 1;
  return diag;
}

EvalReport build_report(Mode mode, const std::string& model, std::span<const QuestionRecord> records,
                        std::span<const DetectionResult> detections, std::span<const GuidanceResult> guidance,
                        std::span<const SeededPrompt> prompts, std::span<const ScoredAnswer> answers) {
  auto report = aggregate(answers, records);
  report.diagnostics.push_back(compute_diagnostics(mode, model, records, detections, guidance, prompts, answers));
  return report;
}

}  // namespace decap
