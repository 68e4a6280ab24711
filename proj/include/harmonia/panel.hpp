#pragma once

// Area x year panel: full outer join of long-format fragments, missing-value
// report and the plausibility checks run on the released table.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace harmonia {

inline constexpr int kPanelFirstYear = 2011;
inline constexpr int kPanelLastYear = 2024;

struct PanelCell {
  std::string area;
  int year = 0;
  std::string variable;
  std::optional<double> value;
  std::string source;
};

struct Fragment {
  std::string source;
  std::vector<PanelCell> cells;  // cell.source is ignored; the fragment's wins
};

struct PanelColumn {
  std::string source;
  std::string variable;
  friend bool operator==(const PanelColumn&, const PanelColumn&) = default;
};

using PanelKey = std::pair<std::string, int>;  // (area, year)

struct Panel {
  std::vector<PanelKey> rows;        // sorted
  std::vector<PanelColumn> columns;  // sorted by (source, variable)
  std::vector<std::vector<std::optional<double>>> values;  // [row][column]

  std::optional<std::size_t> column_index(const std::string& variable) const;
  std::optional<double> at(const PanelKey& key, const std::string& variable) const;
  std::size_t row_index(const PanelKey& key) const;  // rows.size() when absent
  friend bool operator==(const Panel&, const Panel&) = default;
};

/// Optional row universe; every (area, year) pair in it becomes a row even
/// when no fragment covers it.
struct PanelUniverse {
  std::vector<std::string> areas;
  std::vector<int> years;
};

/// Full outer join on (area, year). Throws collision when a variable comes
/// from two sources or a cell is given twice.
Panel assemble(const std::vector<Fragment>& fragments, const std::optional<PanelUniverse>& universe = std::nullopt);

/// One fragment per source holding every cell, missing ones included.
std::vector<Fragment> to_fragments(const Panel& panel);

struct MissingRow {
  std::string source;
  std::string variable;
  int year = 0;
  std::size_t covered = 0;
  std::size_t missing = 0;
};

/// Per (source, variable, year): areas with and without a value among the
/// panel rows of that year.
std::vector<MissingRow> missing_report(const Panel& panel);

struct BoundRule {
  std::string prefix;
  double lo = 0.0;
  double hi = 0.0;
  bool lo_open = false;
  bool hi_open = false;
};

struct SeasonPair {
  std::string summer;
  std::string winter;
};

struct FidelityInput {
  std::string variable;
  std::vector<double> predicted;
  std::vector<double> observed;
};

struct ValidationRules {
  std::vector<BoundRule> bounds{{"rh", 0.0, 100.0, true, false}};
  std::vector<std::string> nonnegative{"tp", "sf", "ro", "sro", "ssro"};
  std::vector<std::string> share_groups{"lc_", "elev_"};  // column prefix per group
  double share_total = 100.0;
  double share_tol = 1e-6;
  std::vector<SeasonPair> seasons{{"t2m_summer", "t2m_winter"}};
  std::vector<FidelityInput> fidelity;
  double fidelity_threshold = 0.9;
};

struct Violation {
  std::string rule;
  std::string variable;
  std::string area;  // empty for column-level rules
  int year = 0;
  double value = 0.0;
  std::string message;
};

/// True when `variable` is `prefix` or starts with `prefix_`.
bool matches_prefix(const std::string& variable, const std::string& prefix);

double pearson(const std::vector<double>& a, const std::vector<double>& b);

/// Read-only evaluation of every rule. Violations come grouped by rule in
/// the order bounded, non-negative, share-sum, seasonal-order, fidelity.
std::vector<Violation> validate(const Panel& panel, const ValidationRules& rules = {});

}  // namespace harmonia
