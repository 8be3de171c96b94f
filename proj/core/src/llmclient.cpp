#include "decap/llmclient.hpp"

#include "decap/errors.hpp"
#include "decap/jsonl.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

namespace decap {

void GenerationParams::validate() const {
  if (!(temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
  if (max_new_tokens < 1) throw ConfigError("max_new_tokens must be >= 1");
}

std::string_view to_string(FinishReason reason) noexcept {
  switch (reason) {
    case FinishReason::Stop: return "stop";
    case FinishReason::Length: return "length";
    case FinishReason::Error: return "error";
  }
  return "error";
}

// --- MockBackend -------------------------------------------------------------

MockBackend::MockBackend(std::vector<Rule> rules, std::string default_reply, std::string id)
    : rules_(std::move(rules)), default_reply_(std::move(default_reply)), id_(std::move(id)) {}

MockBackend MockBackend::from_json(const nlohmann::json& script, std::string id) {
  if (!script.is_object()) throw ConfigError("mock script must be a JSON object");
  const auto fallback = script.find("default");
  if (fallback == script.end() || !fallback->is_string()) {
    throw ConfigError("mock script needs a string \"default\" reply");
  }
  std::vector<Rule> rules;
  const auto listed = script.find("rules");
  if (listed != script.end()) {
    if (!listed->is_array()) throw ConfigError("mock script \"rules\" must be an array");
    for (std::size_t i = 0; i < listed->size(); ++i) {
      const auto& entry = (*listed)[i];
      const std::string where = "mock rule " + std::to_string(i);
      if (!entry.contains("match") || !entry.contains("reply") || !entry["reply"].is_string()) {
        throw ConfigError(where + ": needs \"match\" and string \"reply\"");
      }
      const auto& match = entry["match"];
      Rule rule;
      rule.reply = entry["reply"].get<std::string>();
      if (match.contains("substring")) {
        rule.substring = match["substring"].get<std::string>();
      } else if (match.contains("pattern")) {
        rule.pattern_source = match["pattern"].get<std::string>();
        try {
          rule.pattern.emplace(rule.pattern_source, std::regex::ECMAScript);
        } catch (const std::regex_error& e) {
          throw ConfigError(where + ": bad pattern: " + e.what());
        }
      } else {
        throw ConfigError(where + ": match needs \"substring\" or \"pattern\"");
      }
      rules.push_back(std::move(rule));
    }
  }
  return MockBackend(std::move(rules), fallback->get<std::string>(), std::move(id));
}

MockBackend MockBackend::from_file(const std::filesystem::path& path) {
  nlohmann::json script;
  try {
    script = nlohmann::json::parse(jsonl::read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("mock script " + path.string() + ": " + e.what());
  }
  return from_json(script, "mock:" + path.filename().string());
}

const std::string& MockBackend::resolve(const std::string& prompt) const {
  for (const auto& rule : rules_) {
    const bool hit = rule.pattern ? std::regex_search(prompt, *rule.pattern)
                                  : prompt.find(rule.substring) != std::string::npos;
    if (hit) return rule.reply;
  }
  return default_reply_;
}

Backend::Reply MockBackend::generate(const std::string& prompt, const GenerationParams&) {
  return {resolve(prompt), FinishReason::Stop};
}

// --- HttpBackend -------------------------------------------------------------

HttpBackendConfig HttpBackendConfig::from_env() {
  HttpBackendConfig config;
  if (const char* v = std::getenv("LLM_BASE_URL")) config.base_url = v;
  if (const char* v = std::getenv("LLM_API_KEY")) config.api_key = v;
  if (const char* v = std::getenv("LLM_MODEL")) config.model = v;
  return config;
}

HttpBackend::HttpBackend(HttpBackendConfig config)
    : HttpBackend(config, make_http_transport(config.base_url, config.timeout)) {}

HttpBackend::HttpBackend(HttpBackendConfig config, std::shared_ptr<HttpTransport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
  if (config_.model.empty()) throw ConfigError("HTTP backend needs a model name (LLM_MODEL)");
}

nlohmann::json HttpBackend::request_body(const std::string& prompt, const GenerationParams& params) const {
  nlohmann::json body{{"model", config_.model},
                      {"temperature", params.temperature},
                      {"max_tokens", params.max_new_tokens}};
  if (config_.style == ApiStyle::Chat) {
    body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", prompt}}});
  } else {
    body["prompt"] = prompt;
  }
  if (params.seed) body["seed"] = *params.seed;
  return body;
}

Backend::Reply HttpBackend::generate(const std::string& prompt, const GenerationParams& params) {
  HttpHeaders headers;
  if (!config_.api_key.empty()) headers.emplace_back("Authorization", "Bearer " + config_.api_key);
  const std::string path = config_.style == ApiStyle::Chat ? "/chat/completions" : "/completions";
  const auto response = transport_->post_json(path, request_body(prompt, params).dump(), headers);
  if (response.status < 200 || response.status >= 300) {
    throw HttpStatusError(response.status, response.body.substr(0, 512));
  }
  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(response.body);
    const auto& choice = parsed.at("choices").at(0);
    Reply reply;
    reply.text = config_.style == ApiStyle::Chat ? choice.at("message").at("content").get<std::string>()
                                                 : choice.at("text").get<std::string>();
    const auto finish = choice.value("finish_reason", nlohmann::json());
    reply.finish = finish.is_string() && finish.get<std::string>() == "length" ? FinishReason::Length
                                                                               : FinishReason::Stop;
    return reply;
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("malformed completion reply: ") + e.what());
  }
}

// --- retries -----------------------------------------------------------------

std::chrono::milliseconds RetryPolicy::delay_before_retry(int retry) const {
  const double scaled = static_cast<double>(base_delay.count()) * std::pow(factor, retry - 1);
  return std::chrono::milliseconds(static_cast<std::chrono::milliseconds::rep>(scaled));
}

namespace {

/// Attempts until success or the retry budget is spent. Never throws for
/// backend failures; the outcome is encoded in the result.
CompletionResult attempt_with_retries(Backend& backend, const std::string& prompt,
                                      const GenerationParams& params, const RetryPolicy& retry,
                                      std::optional<HttpStatusError>& last_status) {
  CompletionResult result;
  last_status.reset();
  const auto started = std::chrono::steady_clock::now();
  for (int attempt = 0;; ++attempt) {
    if (attempt > 0) {
      const auto delay = retry.delay_before_retry(attempt);
      if (retry.sleep) {
        retry.sleep(delay);
      } else {
        std::this_thread::sleep_for(delay);
      }
    }
    try {
      auto reply = backend.generate(prompt, params);
      result.text = std::move(reply.text);
      result.finish = reply.finish;
      result.retries = attempt;
      result.error.clear();
      break;
    } catch (const HttpStatusError& e) {
      result.attempt_log.push_back(e.what());
      result.error = e.what();
      result.finish = FinishReason::Error;
      result.retries = attempt;
      last_status.emplace(e.status(), e.body());
      if (!e.retryable()) break;
    } catch (const std::exception& e) {
      last_status.reset();
      result.attempt_log.push_back(e.what());
      result.error = e.what();
      result.finish = FinishReason::Error;
      result.retries = attempt;
    }
    if (attempt >= retry.max_retries) break;
  }
  result.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - started);
  return result;
}

}  // namespace

CompletionResult complete(Backend& backend, const std::string& prompt, const GenerationParams& params,
                          const RetryPolicy& retry) {
  params.validate();
  std::optional<HttpStatusError> last_status;
  auto result = attempt_with_retries(backend, prompt, params, retry, last_status);
  if (!result.ok()) {
    if (last_status) {
      throw HttpStatusError(last_status->status(), last_status->body(), std::move(result.attempt_log));
    }
    const auto attempts = result.attempt_log.size();
    throw TransportError(backend.id() + ": request failed after " + std::to_string(attempts) +
                             " attempt(s): " + result.error,
                         std::move(result.attempt_log));
  }
  return result;
}

std::vector<CompletionResult> run_batch(Backend& backend, std::span<const CompletionRequest> requests,
                                        std::size_t max_in_flight, const RetryPolicy& retry) {
  if (max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
  for (const auto& request : requests) request.params.validate();
  std::vector<CompletionResult> results(requests.size());
  if (requests.empty()) return results;

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < requests.size(); i = next.fetch_add(1)) {
      std::optional<HttpStatusError> last_status;
      results[i] = attempt_with_retries(backend, requests[i].prompt, requests[i].params, retry, last_status);
    }
  };
  const std::size_t workers = std::min(max_in_flight, requests.size());
  if (workers == 1) {
    worker();
    return results;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  pool.clear();  // joins
  return results;
}

// --- Transcript --------------------------------------------------------------

void Transcript::add(std::string_view stage, std::string_view record_id, std::optional<int> seed,
                     std::string_view backend_id, const CompletionRequest& request,
                     const CompletionResult& result) {
  nlohmann::json entry{{"stage", stage},
                       {"record_id", record_id},
                       {"seed", seed ? nlohmann::json(*seed) : nlohmann::json()},
                       {"backend", backend_id},
                       {"request",
                        {{"prompt", request.prompt},
                         {"temperature", request.params.temperature},
                         {"max_new_tokens", request.params.max_new_tokens}}},
                       {"response",
                        {{"text", result.text},
                         {"finish_reason", to_string(result.finish)},
                         {"retries", result.retries}}}};
  if (request.params.seed) entry["request"]["seed"] = *request.params.seed;
  if (!result.ok()) entry["response"]["error"] = result.error;
  std::lock_guard lock(mutex_);
  entries_.push_back(std::move(entry));
}

void Transcript::write(const std::filesystem::path& path) const {
  std::lock_guard lock(mutex_);
  jsonl::write(path, entries_);
}

}  // namespace decap
