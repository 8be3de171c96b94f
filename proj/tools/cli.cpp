#include "cli.hpp"

#include "decap/corpus.hpp"
#include "decap/detector.hpp"
#include "decap/embedder.hpp"
#include "decap/errors.hpp"
#include "decap/evaluator.hpp"
#include "decap/format.hpp"
#include "decap/jsonl.hpp"
#include "decap/llmclient.hpp"
#include "decap/pipeline.hpp"
#include "decap/retrieval.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <map>
#include <memory>
#include <ostream>

namespace decap::cli {

namespace fs = std::filesystem;

namespace {

// Value options shared by every subcommand. JSON config keys use the same
// names with '_' in place of '-'.
constexpr const char* kValueOptions[] = {
    "dataset",        "corpus",      "out",         "run-dir",         "mode",           "template",
    "threshold",      "k",           "seeds",       "backend",         "mock-script",    "max-in-flight",
    "sweep",          "embedder",    "embedding-model", "embedding-cache", "model-name", "llm-model",
    "api-style",      "dataset-seed", "reuse-detections", "reuse-guidance",
};

std::string json_key(std::string flag) {
  for (auto& c : flag) {
    if (c == '-') c = '_';
  }
  return flag;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  for (char c : text + ",") {
    if (c == ',') {
      const auto first = item.find_first_not_of(' ');
      if (first != std::string::npos) out.push_back(item.substr(first, item.find_last_not_of(' ') - first + 1));
      item.clear();
    } else {
      item += c;
    }
  }
  return out;
}

double to_double(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double value = std::stod(text, &used);
    if (used == text.size()) return value;
  } catch (const std::exception&) {
  }
  throw ConfigError("--" + key + ": '" + text + "' is not a number");
}

long long to_integer(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const long long value = std::stoll(text, &used);
    if (used == text.size()) return value;
  } catch (const std::exception&) {
  }
  throw ConfigError("--" + key + ": '" + text + "' is not an integer");
}

std::string json_scalar_text(const nlohmann::json& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_array()) {
    std::string out;
    for (const auto& item : value) {
      if (!out.empty()) out += ',';
      out += json_scalar_text(item);
    }
    return out;
  }
  return value.dump();
}

struct Settings {
  RunConfig run;
  std::vector<Mode> modes{Mode::Decap};
  std::string dataset;
  std::string corpus;
  std::string out;
  std::string run_dir;
  std::string backend = "http";
  std::string mock_script;
  std::string embedder = "hashing";
  std::string embedding_model;
  std::string embedding_cache;
  std::string llm_model;
  std::string api_style = "completions";
  std::uint64_t dataset_seed = 0;
  std::vector<double> sweep;
  std::string reuse_detections;
  std::string reuse_guidance;
  bool matrix = false;
};

void apply_value(Settings& s, const std::string& key, const std::string& value) {
  if (key == "dataset") s.dataset = value;
  else if (key == "corpus") s.corpus = value;
  else if (key == "out") s.out = value;
  else if (key == "run-dir") s.run_dir = value;
  else if (key == "mode") {
    s.modes.clear();
    for (const auto& name : split_list(value)) s.modes.push_back(parse_mode(name));
    if (s.modes.empty()) throw ConfigError("--mode: no mode given");
  } else if (key == "template") s.run.tmpl = parse_template(value);
  else if (key == "threshold") s.run.detector.threshold = to_double(key, value);
  else if (key == "k") {
    const auto k = to_integer(key, value);
    if (k < 1) throw ConfigError("--k must be >= 1");
    s.run.retrieval.k = static_cast<std::size_t>(k);
  } else if (key == "seeds") {
    s.run.seeds.clear();
    for (const auto& item : split_list(value)) s.run.seeds.push_back(static_cast<int>(to_integer(key, item)));
  } else if (key == "backend") {
    if (value != "http" && value != "mock") throw ConfigError("--backend must be http or mock");
    s.backend = value;
  } else if (key == "mock-script") s.mock_script = value;
  else if (key == "max-in-flight") {
    const auto n = to_integer(key, value);
    if (n < 1) throw ConfigError("--max-in-flight must be >= 1");
    s.run.max_in_flight = static_cast<std::size_t>(n);
  } else if (key == "sweep") {
    s.sweep.clear();
    for (const auto& item : split_list(value)) s.sweep.push_back(to_double(key, item));
  } else if (key == "embedder") {
    if (value != "hashing" && value != "remote") throw ConfigError("--embedder must be hashing or remote");
    s.embedder = value;
  } else if (key == "embedding-model") s.embedding_model = value;
  else if (key == "embedding-cache") s.embedding_cache = value;
  else if (key == "model-name") s.run.model_name = value;
  else if (key == "llm-model") s.llm_model = value;
  else if (key == "api-style") {
    if (value != "completions" && value != "chat") throw ConfigError("--api-style must be completions or chat");
    s.api_style = value;
  } else if (key == "dataset-seed") s.dataset_seed = static_cast<std::uint64_t>(to_integer(key, value));
  else if (key == "reuse-detections") s.reuse_detections = value;
  else if (key == "reuse-guidance") s.reuse_guidance = value;
}

void apply_json(Settings& s, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  auto run_part = j;
  run_part.erase("mode");
  s.run = run_config_from_json(run_part);
  for (const auto* flag : kValueOptions) {
    const auto it = j.find(json_key(flag));
    if (it == j.end() || it->is_null()) continue;
    apply_value(s, flag, json_scalar_text(*it));
  }
  if (const auto it = j.find("matrix"); it != j.end() && it->is_boolean()) s.matrix = it->get<bool>();
}

nlohmann::json read_json_file(const fs::path& path) {
  const auto text = jsonl::read_text(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string absolute(const std::string& path) {
  return path.empty() ? path : fs::absolute(path).lexically_normal().string();
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw ConfigError(std::string("--") + flag + " is required");
}

// --- resources ---------------------------------------------------------------

std::vector<QuestionRecord> load_records(const Settings& s) {
  require(s.dataset, "dataset");
  return load_dataset(s.dataset, s.dataset_seed);
}

std::shared_ptr<Backend> make_backend(const Settings& s) {
  if (s.backend == "mock") {
    require(s.mock_script, "mock-script");
    return std::make_shared<MockBackend>(MockBackend::from_file(s.mock_script));
  }
  auto config = HttpBackendConfig::from_env();
  if (!s.llm_model.empty()) config.model = s.llm_model;
  config.style = s.api_style == "chat" ? ApiStyle::Chat : ApiStyle::Completions;
  if (config.base_url.empty()) throw ConfigError("http backend needs LLM_BASE_URL");
  if (config.model.empty()) throw ConfigError("http backend needs LLM_MODEL or --llm-model");
  return std::make_shared<HttpBackend>(config);
}

std::shared_ptr<const Embedder> make_embedder(const Settings& s) {
  std::shared_ptr<const Embedder> embedder;
  if (s.embedder == "remote") {
    auto config = RemoteEmbedderConfig::from_env();
    config.model = s.embedding_model;
    if (config.base_url.empty()) throw ConfigError("remote embedder needs EMBED_BASE_URL");
    if (config.model.empty()) throw ConfigError("remote embedder needs --embedding-model");
    embedder = std::make_shared<RemoteEmbedder>(config);
  } else {
    embedder = std::make_shared<HashingEmbedder>();
  }
  if (!s.embedding_cache.empty()) embedder = std::make_shared<CachingEmbedder>(embedder, s.embedding_cache);
  return embedder;
}

std::optional<NeutralIndex> make_index(const Settings& s) {
  require(s.corpus, "corpus");
  return NeutralIndex::build(load_neutral_corpus(s.corpus), make_embedder(s));
}

StageCache load_cache(const Settings& s) {
  StageCache cache;
  if (!s.reuse_detections.empty()) {
    for (auto& d : read_detections(s.reuse_detections)) {
      auto id = d.record_id;
      cache.detections.insert_or_assign(std::move(id), std::move(d));
    }
  }
  if (!s.reuse_guidance.empty()) cache.guidance = read_guidance_cache(s.reuse_guidance);
  return cache;
}

/// What a run directory records about its inputs; `report` reloads it.
nlohmann::json stored_config(const Settings& s, Mode mode, const std::string& model) {
  auto run = s.run;
  run.mode = mode;
  run.model_name = model;
  auto j = run_config_to_json(run);
  j["dataset"] = absolute(s.dataset);
  j["dataset_seed"] = s.dataset_seed;
  j["corpus"] = absolute(s.corpus);
  j["backend"] = s.backend;
  j["mock_script"] = absolute(s.mock_script);
  j["embedder"] = s.embedder;
  j["embedding_model"] = s.embedding_model;
  return j;
}

std::vector<ScoredItem> scored_items(std::span<const DetectionResult> detections,
                                     std::span<const QuestionRecord> records) {
  std::map<std::string, QuestionType> gold;
  for (const auto& record : records) gold.emplace(record.id, record.question_type);
  std::vector<ScoredItem> items;
  for (const auto& d : detections) {
    const auto it = gold.find(d.record_id);
    if (it == gold.end()) throw ValidationError(d.record_id, "detection does not join to any dataset record");
    items.push_back({d.similarity, it->second});
  }
  return items;
}

void write_sweep(const fs::path& dir, std::span<const DetectionResult> detections,
                 std::span<const QuestionRecord> records, const std::vector<double>& thresholds, std::ostream& out) {
  const auto items = scored_items(detections, records);
  const auto rows = sweep_thresholds(items, thresholds);
  jsonl::write_text(dir / "sweep.csv", sweep_to_csv(rows));
  out << "sweep: " << rows.size() << " thresholds over " << items.size() << " detections -> "
      << (dir / "sweep.csv").string() << "\n";
}

std::string summary_line(const EvalReport& report, Mode mode) {
  std::string line = std::string("mode=") + std::string(to_string(mode));
  for (const auto& row : report.rows) {
    if (row.seed || row.category != kAllSlice || row.question_type != kAllSlice) continue;
    line += " model=" + row.model + " dataset=" + row.dataset + " acc=" + format_optional(row.accuracy) +
            " bias=" + format_optional(row.bias_score) + " ooa=" + std::to_string(row.counts.n_ooa);
  }
  return line;
}

// --- commands ----------------------------------------------------------------

int cmd_validate(const Settings& s, std::ostream& out) {
  require(s.dataset, "dataset");
  const auto check = check_dataset(s.dataset);
  out << s.dataset << ": " << check.n_records << " records, " << check.issues.size() << " issues\n";
  for (const auto& issue : check.issues) {
    out << "  line " << issue.line;
    if (!issue.record_id.empty()) out << " [" << issue.record_id << "]";
    out << ": " << issue.message << "\n";
  }
  return check.clean() ? kExitOk : kExitValidation;
}

int cmd_detect(const Settings& s, std::ostream& out, std::ostream& err) {
  require(s.out, "out");
  s.run.detector.validate();
  const auto records = load_records(s);
  auto backend = make_backend(s);
  Transcript transcript;
  const auto cache = load_cache(s);
  err << "decap: detecting " << records.size() << " records\n";
  const auto results = run_detection(records, s.run, *backend, &transcript, &cache);

  std::vector<DetectionResult> detections;
  std::vector<nlohmann::json> rows;
  for (const auto& d : results) {
    if (!d) continue;
    detections.push_back(*d);
    rows.emplace_back(*d);
  }
  const fs::path dir = s.out;
  jsonl::write_text(dir / run_files::kConfig, stored_config(s, Mode::Decap, backend->id()).dump(2) + "\n");
  jsonl::write(dir / run_files::kDetections, rows);
  transcript.write(dir / run_files::kTranscript);

  const auto diag = compute_diagnostics(Mode::Decap, backend->id(), records, detections, {}, {}, {});
  const auto acc = diag.detector->accuracy();
  out << "detected " << detections.size() << "/" << records.size() << " (failures " << diag.detection_failures
      << ") acc_ambig=" << format_optional(acc.ambiguous) << " acc_unambig=" << format_optional(acc.unambiguous)
      << " acc_total=" << format_optional(acc.total) << "\n";
  if (!s.sweep.empty()) write_sweep(dir, detections, records, s.sweep, out);
  return kExitOk;
}

int cmd_guide(const Settings& s, std::ostream& out, std::ostream& err) {
  require(s.out, "out");
  auto config = s.run;
  config.mode = s.modes.size() == 1 && mode_uses_guidance(s.modes.front()) ? s.modes.front() : Mode::Decap;
  const auto records = load_records(s);
  auto backend = make_backend(s);
  auto index = make_index(s);
  Backends backends{nullptr, backend.get(), backend.get(), &*index};
  Transcript transcript;
  const auto cache = load_cache(s);
  err << "decap: generating guidance for " << records.size() << " records\n";
  const auto results = run_guidance(records, config, backends, &transcript, &cache);

  const fs::path dir = s.out;
  jsonl::write_text(dir / run_files::kConfig, stored_config(s, config.mode, backend->id()).dump(2) + "\n");
  write_guidance_cache(dir / run_files::kGuidance, results);
  transcript.write(dir / run_files::kTranscript);
  std::size_t failed = 0;
  for (const auto& g : results) failed += g.failed() ? 1 : 0;
  out << "guidance for " << records.size() << " records, " << failed << " failed\n";
  return kExitOk;
}

int cmd_run(const Settings& s, std::ostream& out, std::ostream& err) {
  require(s.out, "out");
  const auto records = load_records(s);
  auto backend = make_backend(s);
  std::optional<NeutralIndex> index;
  for (Mode mode : s.modes) {
    if (mode_uses_corpus(mode) && !index) index = make_index(s);
  }
  const auto cache = load_cache(s);

  for (Mode mode : s.modes) {
    auto config = s.run;
    config.mode = mode;
    if (config.model_name.empty()) config.model_name = backend->id();
    Backends backends{backend.get(), backend.get(), backend.get(), index ? &*index : nullptr};
    const fs::path dir = s.modes.size() == 1 ? fs::path(s.out) : fs::path(s.out) / std::string(to_string(mode));
    err << "decap: running mode " << to_string(mode) << " on " << records.size() << " records, "
        << config.seeds.size() << " seeds\n";
    Transcript transcript;
    const auto result = run_dataset(records, config, backends, &transcript, &cache);
    write_run_directory(dir, stored_config(s, mode, config.model_name), result, transcript);
    out << summary_line(result.report, mode) << "\n";
    if (!s.sweep.empty() && !result.detections.empty()) write_sweep(dir, result.detections, records, s.sweep, out);
  }
  return kExitOk;
}

int report_one(const fs::path& dir, const Settings& flags, std::ostream& out, std::ostream& err) {
  Settings s;
  apply_json(s, read_json_file(dir / run_files::kConfig));
  if (!flags.dataset.empty()) s.dataset = flags.dataset;
  const auto records = load_records(s);
  const auto stored = read_run_directory(dir);
  const Mode mode = s.modes.front();

  if (!stored.answers.empty()) {
    const auto model = s.run.model_name;
    const auto report =
        build_report(mode, model, records, stored.detections, stored.guidance, stored.prompts, stored.answers);
    jsonl::write_text(dir / run_files::kReportJson, report_to_json_text(report));
    jsonl::write_text(dir / run_files::kReportCsv, report_to_csv(report));
    out << summary_line(report, mode) << "\n";
    if (flags.matrix) {
      jsonl::write_text(dir / "matrix_bias.csv", category_matrix_csv(report, to_string(mode), MatrixMetric::BiasScore));
      jsonl::write_text(dir / "matrix_acc.csv", category_matrix_csv(report, to_string(mode), MatrixMetric::Accuracy));
      out << "matrix: " << (dir / "matrix_bias.csv").string() << "\n";
    }
  } else {
    err << "decap: " << dir.string() << " has no answers; skipping report\n";
  }
  if (!flags.sweep.empty()) {
    if (stored.detections.empty()) throw ConfigError(dir.string() + " has no stored detections to sweep");
    write_sweep(dir, stored.detections, records, flags.sweep, out);
  }
  return kExitOk;
}

int cmd_report(const Settings& s, std::ostream& out, std::ostream& err) {
  const fs::path dir = !s.run_dir.empty() ? s.run_dir : s.out;
  if (dir.empty()) throw ConfigError("--run-dir is required");
  if (fs::exists(dir / run_files::kConfig)) return report_one(dir, s, out, err);
  if (!fs::is_directory(dir)) throw ConfigError(dir.string() + " is not a run directory");
  std::vector<fs::path> runs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory() && fs::exists(entry.path() / run_files::kConfig)) runs.push_back(entry.path());
  }
  if (runs.empty()) throw ConfigError(dir.string() + " holds no run directories");
  std::sort(runs.begin(), runs.end());
  for (const auto& run : runs) report_one(run, s, out, err);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Context-adaptive debiasing prompts for multiple-choice QA", "decap"};
  app.require_subcommand(1);
  std::string config_path;
  std::map<std::string, std::map<std::string, std::string>> raw;
  std::map<std::string, bool> matrix;
  std::map<std::string, std::vector<std::pair<std::string, CLI::Option*>>> options;

  const auto add_common = [&](CLI::App* sub) {
    const auto name = sub->get_name();
    sub->add_option("--config", config_path, "JSON config file; flags override its keys");
    for (const auto* flag : kValueOptions) {
      options[name].emplace_back(flag, sub->add_option(std::string("--") + flag, raw[name][flag]));
    }
    sub->add_flag("--matrix", matrix[name], "also export category x model matrices");
  };
  add_common(app.add_subcommand("validate", "check a dataset file"));
  add_common(app.add_subcommand("detect", "run ambiguity detection"));
  add_common(app.add_subcommand("guide", "generate neutral answer guidance"));
  add_common(app.add_subcommand("run", "run the full pipeline for one or more modes"));
  add_common(app.add_subcommand("report", "recompute reports, sweeps and matrices from a run directory"));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitConfig;
  }

  const auto* sub = app.get_subcommands().front();
  const auto name = sub->get_name();
  try {
    Settings settings;
    if (!config_path.empty()) apply_json(settings, read_json_file(config_path));
    for (const auto& [flag, option] : options[name]) {
      if (option->count() == 0) continue;
      apply_value(settings, flag, raw[name][flag]);
    }
    if (matrix[name]) settings.matrix = true;

    if (name == "validate") return cmd_validate(settings, out);
    if (name == "detect") return cmd_detect(settings, out, err);
    if (name == "guide") return cmd_guide(settings, out, err);
    if (name == "run") return cmd_run(settings, out, err);
    return cmd_report(settings, out, err);
  } catch (const ValidationError& e) {
    err << "decap: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "decap: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace decap::cli
