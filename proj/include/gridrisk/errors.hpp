#pragma once

#include <stdexcept>
#include <string>

namespace gridrisk {

enum class Errc {
  bad_argument,
  disconnected,
  duplicate_line,
  non_positive_parameter,
  bad_slack_index,
  dimension_mismatch,
  not_symmetric,
  not_psd,
  multiple_zero_eigenvalues,
  estimator_required,
  base_point_outside,
  schema_violation,
  missing_block,
  malformed_row,
  zero_reactance,
  zero_mean_flow,
  missing_rate_a,
  io_error,
};

const char* errc_name(Errc c);

// All library failures surface as this one exception type; `code()` is stable
// and is what tests and the CLI dispatch on, the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace gridrisk
