// Copyright 2026 The avtse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef AVTSE_ERROR_H_
#define AVTSE_ERROR_H_

#include <stdexcept>
#include <string>

namespace avtse {

// Bad arguments or configuration. Maps to CLI exit code 2.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed, missing or inconsistent data files. Maps to exit code 3.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A knowledge backend was requested but no model path or plugin is
// available. Maps to exit code 4.
class BackendMissing : public std::runtime_error {
 public:
  explicit BackendMissing(const std::string &backend_id)
      : std::runtime_error("backend missing: '" + backend_id +
                           "' is not configured; use kind=synthetic for the "
                           "built-in stand-in source"),
        backend_id_(backend_id) {}
  const std::string &backend_id() const { return backend_id_; }

 private:
  std::string backend_id_;
};

#define AVTSE_REQUIRE(cond, msg)                      \
  do {                                                \
    if (!(cond)) throw ::avtse::InvalidArgument(msg); \
  } while (0)

}  // namespace avtse

#endif  // AVTSE_ERROR_H_
