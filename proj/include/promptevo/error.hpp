#pragma once

#include <stdexcept>
#include <string>

namespace promptevo {

enum class ErrorCode {
  invalid_argument,
  io_error,
  parse_error,
  config_error,
  empty_mesh,
  zero_projection,
  degenerate_baseline,
  cycle_detected,
  missing_root,
  unknown_word,
  bad_config,
  covariance_degenerate,
  wrong_population_size,
  generation_failed,
  evaluation_failed,
};

const char* to_string(ErrorCode code) noexcept;

// Every failure raised by the library carries one of the codes above so the
// C API can translate it without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace promptevo
