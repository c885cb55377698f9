#pragma once

#include <stdexcept>
#include <string>

namespace silico {

// Bad battery/run configuration (malformed file, duplicate ids, mismatched
// manifest). CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Transport-level failure that survived the retry budget. Retryable by the
// caller; carries the number of attempts made. CLI maps this to exit code 3.
class TransportError : public std::runtime_error {
 public:
  TransportError(const std::string& what, int attempts)
      : std::runtime_error(what), attempts_(attempts) {}
  int attempts() const { return attempts_; }

 private:
  int attempts_ = 0;
};

// Permanent backend refusal (4xx). Not retried.
class BackendError : public std::runtime_error {
 public:
  BackendError(const std::string& what, int status)
      : std::runtime_error(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_ = 0;
};

// A contract the run depends on was violated (e.g. embedding dimension drift
// within one run). Fatal: continuing would corrupt downstream stages.
class IntegrityError : public std::runtime_error {
 public:
  explicit IntegrityError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace silico
