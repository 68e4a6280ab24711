#include "harmonia/error.hpp"

namespace harmonia {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_geometry: return "invalid-geometry";
    case Errc::empty_input: return "empty-input";
    case Errc::domain: return "domain";
    case Errc::empty_variogram: return "empty-variogram";
    case Errc::insufficient_data: return "insufficient-data";
    case Errc::fit_failure: return "fit-failure";
    case Errc::singular_system: return "singular-system";
    case Errc::numerical_failure: return "numerical-failure";
    case Errc::selection_failure: return "selection-failure";
    case Errc::unmapped_unit: return "unmapped-unit";
    case Errc::unmapped_class: return "unmapped-class";
    case Errc::coverage_overflow: return "coverage-overflow";
    case Errc::schedule_gap: return "schedule-gap";
    case Errc::margin_mismatch: return "margin-mismatch";
    case Errc::infeasible_support: return "infeasible-support";
    case Errc::rake_divergence: return "rake-divergence";
    case Errc::unweighted_observation: return "unweighted-observation";
    case Errc::gvf_unavailable: return "gvf-unavailable";
    case Errc::collision: return "collision";
    case Errc::parse: return "parse";
    case Errc::io: return "io";
  }
  return "unknown";
}

}  // namespace harmonia
