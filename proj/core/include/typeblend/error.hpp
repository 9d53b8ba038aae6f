#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace typeblend {

enum class ErrorCode {
  invalid_input,
  invalid_argument,
  invalid_prompt,
  empty_text,
  empty_selection,
  unknown_font,
  parse_error,
  backend_unreachable,
  backend_timeout,
  no_op,
  inconsistent_feedback,
  not_found,
  conflict,
  io_error,
};

std::string_view to_string(ErrorCode code);

// Every module reports failures with this type. Backend failures carry the
// backend name and whether the call may be retried.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Error(ErrorCode code, const std::string& message, std::string backend, bool retryable)
      : std::runtime_error(message), code_(code), backend_(std::move(backend)), retryable_(retryable) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& backend() const noexcept { return backend_; }
  bool retryable() const noexcept { return retryable_; }

 private:
  ErrorCode code_;
  std::string backend_;
  bool retryable_ = false;
};

}  // namespace typeblend
