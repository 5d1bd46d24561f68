#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace coremix {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A value or configuration violates a documented invariant or precondition.
class ValidationError : public Error {
public:
  using Error::Error;
};

/// Structured-text input could not be parsed. `line()` is 1-based, 0 when not line-oriented.
class ParseError : public Error {
public:
  ParseError(const std::string &what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

class IoError : public Error {
public:
  using Error::Error;
};

// Backend errors. Retryable ones (timeouts, 5xx) may succeed if the call is repeated.
class BackendError : public Error {
public:
  BackendError(const std::string &what, bool retryable) : Error(what), retryable_(retryable) {}
  bool retryable() const noexcept { return retryable_; }

private:
  bool retryable_;
};

class TimeoutError : public BackendError {
public:
  explicit TimeoutError(const std::string &what) : BackendError(what, true) {}
};

class ConnectionError : public BackendError {
public:
  explicit ConnectionError(const std::string &what) : BackendError(what, false) {}
};

/// Non-success HTTP status. `message()` is the backend's response body.
class StatusError : public BackendError {
public:
  StatusError(int status, std::string message)
      : BackendError("backend returned status " + std::to_string(status) + ": " + message,
                     status >= 500),
        status_(status), message_(std::move(message)) {}
  int status() const noexcept { return status_; }
  const std::string &message() const noexcept { return message_; }

private:
  int status_;
  std::string message_;
};

/// The backend answered, but the answer breaks the wire contract.
class ProtocolError : public BackendError {
public:
  explicit ProtocolError(const std::string &what) : BackendError(what, false) {}
};

} // namespace coremix
