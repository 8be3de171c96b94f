#pragma once

// Reference implementations and fixtures shared by the unit and acceptance
// tests. Nothing here calls into the code under test.

#include "decap/errors.hpp"
#include "decap/llmclient.hpp"

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace decap::testing {

inline std::filesystem::path fixture(const std::string& relative) {
  return std::filesystem::path(DECAP_FIXTURE_DIR) / relative;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("decap-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// LCS by plain memoized recursion over suffixes.
class BruteLcs {
 public:
  BruteLcs(const std::vector<std::string>& a, const std::vector<std::string>& b)
      : a_(a), b_(b), memo_((a.size() + 1) * (b.size() + 1), -1) {}

  int length() { return solve(0, 0); }

 private:
  int solve(std::size_t i, std::size_t j) {
    if (i == a_.size() || j == b_.size()) return 0;
    int& slot = memo_[i * (b_.size() + 1) + j];
    if (slot >= 0) return slot;
    if (a_[i] == b_[j]) {
      slot = 1 + solve(i + 1, j + 1);
    } else {
      slot = std::max(solve(i + 1, j), solve(i, j + 1));
    }
    return slot;
  }

  const std::vector<std::string>& a_;
  const std::vector<std::string>& b_;
  std::vector<int> memo_;
};

/// ROUGE-L F1 straight from precision and recall.
inline double oracle_rouge_l(const std::vector<std::string>& reference, const std::vector<std::string>& candidate) {
  if (reference.empty() || candidate.empty()) return 0.0;
  const double l = BruteLcs(reference, candidate).length();
  if (l == 0.0) return 0.0;
  const double p = l / static_cast<double>(candidate.size());
  const double r = l / static_cast<double>(reference.size());
  return 2.0 * p * r / (p + r);
}

/// Every sequence of length 0..max_len over the given symbols.
inline std::vector<std::vector<std::string>> all_sequences(const std::vector<std::string>& alphabet,
                                                           std::size_t max_len) {
  std::vector<std::vector<std::string>> out{{}};
  std::size_t begin = 0;
  for (std::size_t len = 1; len <= max_len; ++len) {
    const std::size_t end = out.size();
    for (std::size_t i = begin; i < end; ++i) {
      for (const auto& symbol : alphabet) {
        auto next = out[i];
        next.push_back(symbol);
        out.push_back(std::move(next));
      }
    }
    begin = end;
  }
  return out;
}

inline std::vector<std::string> random_sequence(std::mt19937& rng, const std::vector<std::string>& alphabet,
                                                std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> length(0, max_len);
  std::uniform_int_distribution<std::size_t> symbol(0, alphabet.size() - 1);
  std::vector<std::string> out(length(rng));
  for (auto& token : out) token = alphabet[symbol(rng)];
  return out;
}

/// Upper 1% point of chi-square with 5 degrees of freedom.
inline constexpr double kChiSquare5At01 = 15.086;

/// Backend that records peak concurrency and fails the first
/// `failures_per_prompt` attempts of each prompt.
class InstrumentedBackend final : public Backend {
 public:
  explicit InstrumentedBackend(int failures_per_prompt = 0, std::chrono::milliseconds work = std::chrono::milliseconds(2))
      : failures_per_prompt_(failures_per_prompt), work_(work) {}

  std::string id() const override { return "instrumented"; }

  Reply generate(const std::string& prompt, const GenerationParams&) override {
    const int now = ++in_flight_;
    int peak = peak_.load();
    while (now > peak && !peak_.compare_exchange_weak(peak, now)) {
    }
    std::this_thread::sleep_for(work_);
    bool fail = false;
    {
      std::lock_guard lock(mutex_);
      auto& seen = attempts_[prompt];
      ++seen;
      fail = seen <= failures_per_prompt_;
    }
    --in_flight_;
    if (fail) throw TransportError("injected failure for '" + prompt + "'");
    return {"echo:" + prompt, FinishReason::Stop};
  }

  int peak() const { return peak_.load(); }
  int attempts(const std::string& prompt) const {
    std::lock_guard lock(mutex_);
    const auto it = attempts_.find(prompt);
    return it == attempts_.end() ? 0 : it->second;
  }

 private:
  int failures_per_prompt_;
  std::chrono::milliseconds work_;
  std::atomic<int> in_flight_{0};
  std::atomic<int> peak_{0};
  mutable std::mutex mutex_;
  std::map<std::string, int> attempts_;
};

inline RetryPolicy instant_retry() {
  RetryPolicy policy;
  policy.sleep = [](std::chrono::milliseconds) {};
  return policy;
}

}  // namespace decap::testing
