#pragma once

// Completion backends (OpenAI-compatible HTTP, scripted mock) and the
// bounded-parallel batch runner every pipeline stage goes through.

#include "decap/http_transport.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace decap {

struct GenerationParams {
  double temperature = 0.6;
  int max_new_tokens = 64;
  std::optional<std::int64_t> seed;

  /// Throws ConfigError unless temperature >= 0 and max_new_tokens >= 1.
  void validate() const;

  bool operator==(const GenerationParams&) const = default;
};

/// Reasoning (detector) and guidance calls.
inline constexpr GenerationParams kLongGeneration{0.6, 64, std::nullopt};
/// Multiple-choice answer calls.
inline constexpr GenerationParams kAnswerGeneration{0.6, 16, std::nullopt};

enum class FinishReason { Stop, Length, Error };

std::string_view to_string(FinishReason reason) noexcept;

struct CompletionRequest {
  std::string prompt;
  GenerationParams params;
};

struct CompletionResult {
  std::string text;
  FinishReason finish = FinishReason::Stop;
  std::chrono::milliseconds latency{0};
  int retries = 0;
  std::string error;                     // set iff finish == Error
  std::vector<std::string> attempt_log;  // one entry per failed attempt

  bool ok() const noexcept { return finish != FinishReason::Error; }
};

/// One completion endpoint. `generate` makes a single attempt and throws
/// TransportError (or HttpStatusError) on failure; retries live in the
/// runner. Backends are shared across batch workers.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string id() const = 0;

  struct Reply {
    std::string text;
    FinishReason finish = FinishReason::Stop;
  };
  virtual Reply generate(const std::string& prompt, const GenerationParams& params) = 0;
};

// --- mock --------------------------------------------------------------------

/// Scripted backend. Rule file:
///   {"rules": [{"match": {"substring": "..."} | {"pattern": "<ECMAScript regex>"},
///               "reply": "..."}, ...],
///    "default": "..."}
/// The first matching rule wins; otherwise the default reply. Params are
/// ignored, so replies are a pure function of (script, prompt).
class MockBackend final : public Backend {
 public:
  struct Rule {
    std::string substring;
    std::optional<std::regex> pattern;
    std::string pattern_source;
    std::string reply;
  };

  MockBackend(std::vector<Rule> rules, std::string default_reply, std::string id = "mock");

  static MockBackend from_json(const nlohmann::json& script, std::string id = "mock");
  static MockBackend from_file(const std::filesystem::path& path);

  std::string id() const override { return id_; }
  Reply generate(const std::string& prompt, const GenerationParams& params) override;

  /// Reply without going through the Backend interface.
  const std::string& resolve(const std::string& prompt) const;

  std::size_t rule_count() const noexcept { return rules_.size(); }

 private:
  std::vector<Rule> rules_;
  std::string default_reply_;
  std::string id_;
};

// --- http --------------------------------------------------------------------

enum class ApiStyle { Completions, Chat };

struct HttpBackendConfig {
  std::string base_url;
  std::string api_key;
  std::string model;
  ApiStyle style = ApiStyle::Completions;
  std::chrono::seconds timeout{120};

  /// Reads LLM_BASE_URL, LLM_API_KEY, LLM_MODEL.
  static HttpBackendConfig from_env();
};

/// OpenAI-compatible client: POST {base_url}/completions with
/// {"model", "prompt", "temperature", "max_tokens", "seed"?}, or
/// {base_url}/chat/completions with the prompt wrapped as one user message.
class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(HttpBackendConfig config);
  HttpBackend(HttpBackendConfig config, std::shared_ptr<HttpTransport> transport);

  std::string id() const override { return "http:" + config_.model; }
  Reply generate(const std::string& prompt, const GenerationParams& params) override;

  nlohmann::json request_body(const std::string& prompt, const GenerationParams& params) const;

 private:
  HttpBackendConfig config_;
  std::shared_ptr<HttpTransport> transport_;
};

// --- retries and batching ----------------------------------------------------

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds base_delay{1000};
  double factor = 2.0;
  /// Injected for tests; defaults to std::this_thread::sleep_for.
  std::function<void(std::chrono::milliseconds)> sleep;

  std::chrono::milliseconds delay_before_retry(int retry) const;
};

/// Single request with retries. Returns the result or throws TransportError
/// carrying the attempt log once retries are exhausted (non-retryable HTTP
/// statuses throw HttpStatusError immediately).
CompletionResult complete(Backend& backend, const std::string& prompt, const GenerationParams& params,
                          const RetryPolicy& retry = {});

/// Runs all requests with at most `max_in_flight` outstanding at once.
/// Results are in request order; failures are recorded in their own slot
/// and never abort the batch.
std::vector<CompletionResult> run_batch(Backend& backend, std::span<const CompletionRequest> requests,
                                        std::size_t max_in_flight, const RetryPolicy& retry = {});

// --- transcript --------------------------------------------------------------

/// Audit log of request/response pairs. Entries carry no timing data, so
/// identical runs give byte-identical transcripts.
class Transcript {
 public:
  void add(std::string_view stage, std::string_view record_id, std::optional<int> seed,
           std::string_view backend_id, const CompletionRequest& request, const CompletionResult& result);

  const std::vector<nlohmann::json>& entries() const noexcept { return entries_; }
  void write(const std::filesystem::path& path) const;

 private:
  mutable std::mutex mutex_;
  std::vector<nlohmann::json> entries_;
};

}  // namespace decap
