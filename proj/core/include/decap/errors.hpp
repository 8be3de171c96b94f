#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace decap {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A dataset or corpus line could not be parsed.
class IngestionError : public Error {
 public:
  IngestionError(std::string path, std::size_t line, const std::string& what)
      : Error(path + ":" + std::to_string(line) + ": " + what),
        path_(std::move(path)),
        line_(line) {}

  const std::string& path() const noexcept { return path_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string path_;
  std::size_t line_;
};

/// A record parsed fine but violates a domain invariant.
class ValidationError : public Error {
 public:
  ValidationError(std::string record_id, const std::string& what)
      : Error("record '" + record_id + "': " + what), record_id_(std::move(record_id)) {}

  const std::string& record_id() const noexcept { return record_id_; }

 private:
  std::string record_id_;
};

/// Caller violated a documented precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Bad run or CLI configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Network or backend failure. Carries the log of every attempt made.
class TransportError : public Error {
 public:
  explicit TransportError(const std::string& what, std::vector<std::string> attempts = {})
      : Error(what), attempts_(std::move(attempts)) {}

  const std::vector<std::string>& attempts() const noexcept { return attempts_; }

 private:
  std::vector<std::string> attempts_;
};

/// Backend answered with a non-2xx status.
class HttpStatusError : public TransportError {
 public:
  HttpStatusError(int status, const std::string& body, std::vector<std::string> attempts = {})
      : TransportError("HTTP " + std::to_string(status) + ": " + body, std::move(attempts)),
        status_(status),
        body_(body) {}

  int status() const noexcept { return status_; }
  const std::string& body() const noexcept { return body_; }
  bool retryable() const noexcept { return status_ == 429 || status_ >= 500; }

 private:
  int status_;
  std::string body_;
};

/// Generator output was empty after post-processing.
class GuidanceError : public Error {
 public:
  using Error::Error;
};

}  // namespace decap
