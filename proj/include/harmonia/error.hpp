#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace harmonia {

enum class Errc {
  invalid_geometry,
  empty_input,
  domain,
  empty_variogram,
  insufficient_data,
  fit_failure,
  singular_system,
  numerical_failure,
  selection_failure,
  unmapped_unit,
  unmapped_class,
  coverage_overflow,
  schedule_gap,
  margin_mismatch,
  infeasible_support,
  rake_divergence,
  unweighted_observation,
  gvf_unavailable,
  collision,
  parse,
  io,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace harmonia
