#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace repsim {

enum class Errc {
  file_not_found,
  malformed_line,
  dimension_mismatch,
  non_finite,
  duplicate_word,
  unknown_label,
  empty_table,
  missing_key,
  invalid_argument,
  empty_subset,
  degenerate_input,
  degenerate_target,
  out_of_range,
  zero_norm_row,
  vocab_too_small,
  missing_cells,
  unmapped_norm,
  mismatched_norms,
  convergence_failure,
  config_error,
};

constexpr std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::file_not_found: return "file-not-found";
    case Errc::malformed_line: return "malformed-line";
    case Errc::dimension_mismatch: return "dimension-mismatch";
    case Errc::non_finite: return "non-finite";
    case Errc::duplicate_word: return "duplicate-word";
    case Errc::unknown_label: return "unknown-label";
    case Errc::empty_table: return "empty-table";
    case Errc::missing_key: return "missing-key";
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::empty_subset: return "empty-subset";
    case Errc::degenerate_input: return "degenerate-input";
    case Errc::degenerate_target: return "degenerate-target";
    case Errc::out_of_range: return "out-of-range";
    case Errc::zero_norm_row: return "zero-norm-row";
    case Errc::vocab_too_small: return "vocab-too-small";
    case Errc::missing_cells: return "missing-cells";
    case Errc::unmapped_norm: return "unmapped-norm";
    case Errc::mismatched_norms: return "mismatched-norms";
    case Errc::convergence_failure: return "convergence-failure";
    case Errc::config_error: return "config-error";
  }
  return "unknown";
}

/// Every failure raised by the library carries a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace repsim
