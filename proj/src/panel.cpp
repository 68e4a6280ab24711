#include "harmonia/panel.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "harmonia/error.hpp"

namespace harmonia {

std::optional<std::size_t> Panel::column_index(const std::string& variable) const {
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j].variable == variable) return j;
  }
  return std::nullopt;
}

std::size_t Panel::row_index(const PanelKey& key) const {
  auto it = std::lower_bound(rows.begin(), rows.end(), key);
  if (it == rows.end() || *it != key) return rows.size();
  return static_cast<std::size_t>(it - rows.begin());
}

std::optional<double> Panel::at(const PanelKey& key, const std::string& variable) const {
  const auto j = column_index(variable);
  const auto i = row_index(key);
  if (!j || i == rows.size()) return std::nullopt;
  return values[i][*j];
}

Panel assemble(const std::vector<Fragment>& fragments, const std::optional<PanelUniverse>& universe) {
  std::map<std::string, std::string> variable_source;
  std::set<PanelKey> keys;
  std::set<PanelColumn, bool (*)(const PanelColumn&, const PanelColumn&)> columns(
      [](const PanelColumn& a, const PanelColumn& b) {
        return std::tie(a.source, a.variable) < std::tie(b.source, b.variable);
      });

  for (const auto& f : fragments) {
    for (const auto& c : f.cells) {
      if (c.year < kPanelFirstYear || c.year > kPanelLastYear) {
        throw Error(Errc::domain, fmt::format("{} in source {}: year {} outside {}-{}", c.variable, f.source, c.year,
                                              kPanelFirstYear, kPanelLastYear));
      }
      auto [it, inserted] = variable_source.emplace(c.variable, f.source);
      if (!inserted && it->second != f.source) {
        throw Error(Errc::collision,
                    fmt::format("variable '{}' provided by both '{}' and '{}'", c.variable, it->second, f.source));
      }
      keys.insert({c.area, c.year});
      columns.insert({f.source, c.variable});
    }
  }
  if (universe) {
    for (const auto& a : universe->areas)
      for (int y : universe->years) keys.insert({a, y});
  }

  Panel p;
  p.rows.assign(keys.begin(), keys.end());
  p.columns.assign(columns.begin(), columns.end());
  p.values.assign(p.rows.size(), std::vector<std::optional<double>>(p.columns.size()));
  std::map<std::string, std::size_t> col_of;
  for (std::size_t j = 0; j < p.columns.size(); ++j) col_of[p.columns[j].variable] = j;

  std::vector<std::vector<bool>> seen(p.rows.size(), std::vector<bool>(p.columns.size(), false));
  for (const auto& f : fragments) {
    for (const auto& c : f.cells) {
      const auto i = p.row_index({c.area, c.year});
      const auto j = col_of.at(c.variable);
      if (seen[i][j]) {
        throw Error(Errc::collision, fmt::format("duplicate cell ({}, {}, {}) in source '{}'", c.area, c.year,
                                                 c.variable, f.source));
      }
      seen[i][j] = true;
      if (c.value && !std::isfinite(*c.value)) {
        throw Error(Errc::domain, fmt::format("non-finite value at ({}, {}, {})", c.area, c.year, c.variable));
      }
      p.values[i][j] = c.value;
    }
  }
  return p;
}

std::vector<Fragment> to_fragments(const Panel& panel) {
  std::map<std::string, Fragment> by_source;
  for (std::size_t j = 0; j < panel.columns.size(); ++j) {
    auto& f = by_source[panel.columns[j].source];
    f.source = panel.columns[j].source;
    for (std::size_t i = 0; i < panel.rows.size(); ++i) {
      f.cells.push_back({panel.rows[i].first, panel.rows[i].second, panel.columns[j].variable, panel.values[i][j],
                         f.source});
    }
  }
  std::vector<Fragment> out;
  for (auto& [_, f] : by_source) out.push_back(std::move(f));
  return out;
}

std::vector<MissingRow> missing_report(const Panel& panel) {
  std::map<int, std::vector<std::size_t>> rows_by_year;
  for (std::size_t i = 0; i < panel.rows.size(); ++i) rows_by_year[panel.rows[i].second].push_back(i);
  std::vector<MissingRow> out;
  for (std::size_t j = 0; j < panel.columns.size(); ++j) {
    for (const auto& [year, idx] : rows_by_year) {
      MissingRow r{panel.columns[j].source, panel.columns[j].variable, year, 0, 0};
      for (auto i : idx) (panel.values[i][j] ? r.covered : r.missing) += 1;
      out.push_back(std::move(r));
    }
  }
  return out;
}

bool matches_prefix(const std::string& variable, const std::string& prefix) {
  if (variable == prefix) return true;
  return variable.size() > prefix.size() && variable.compare(0, prefix.size(), prefix) == 0 &&
         variable[prefix.size()] == '_';
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw Error(Errc::domain, "correlation needs two aligned series");
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return saa == sbb && a == b ? 1.0 : std::nan("");
  return sab / std::sqrt(saa * sbb);
}

std::vector<Violation> validate(const Panel& panel, const ValidationRules& rules) {
  std::vector<Violation> out;
  auto for_each_value = [&](std::size_t j, auto&& fn) {
    for (std::size_t i = 0; i < panel.rows.size(); ++i) {
      if (panel.values[i][j]) fn(i, *panel.values[i][j]);
    }
  };

  for (std::size_t j = 0; j < panel.columns.size(); ++j) {
    const auto& var = panel.columns[j].variable;
    for (const auto& b : rules.bounds) {
      if (!matches_prefix(var, b.prefix)) continue;
      for_each_value(j, [&](std::size_t i, double v) {
        const bool lo_ok = b.lo_open ? v > b.lo : v >= b.lo;
        const bool hi_ok = b.hi_open ? v < b.hi : v <= b.hi;
        if (!lo_ok || !hi_ok) {
          out.push_back({"bounded", var, panel.rows[i].first, panel.rows[i].second, v,
                         fmt::format("{} outside {}{}, {}{}", v, b.lo_open ? "(" : "[", b.lo, b.hi,
                                     b.hi_open ? ")" : "]")});
        }
      });
    }
    for (const auto& prefix : rules.nonnegative) {
      if (!matches_prefix(var, prefix)) continue;
      for_each_value(j, [&](std::size_t i, double v) {
        if (v < 0.0) {
          out.push_back({"non-negative", var, panel.rows[i].first, panel.rows[i].second, v, "negative value"});
        }
      });
    }
  }

  for (const auto& prefix : rules.share_groups) {
    std::vector<std::size_t> cols;
    for (std::size_t j = 0; j < panel.columns.size(); ++j) {
      if (panel.columns[j].variable.rfind(prefix, 0) == 0) cols.push_back(j);
    }
    if (cols.empty()) continue;
    for (std::size_t i = 0; i < panel.rows.size(); ++i) {
      double total = 0.0;
      std::size_t present = 0;
      for (auto j : cols) {
        if (panel.values[i][j]) {
          total += *panel.values[i][j];
          ++present;
        }
      }
      if (present == 0) continue;
      if (present < cols.size() || std::abs(total - rules.share_total) > rules.share_tol) {
        out.push_back({"share-sum", prefix + "*", panel.rows[i].first, panel.rows[i].second, total,
                       fmt::format("shares sum to {} over {} of {} columns", total, present, cols.size())});
      }
    }
  }

  for (const auto& pair : rules.seasons) {
    const auto js = panel.column_index(pair.summer);
    const auto jw = panel.column_index(pair.winter);
    if (!js || !jw) continue;
    for (std::size_t i = 0; i < panel.rows.size(); ++i) {
      const auto& s = panel.values[i][*js];
      const auto& w = panel.values[i][*jw];
      if (s && w && *s < *w) {
        out.push_back({"seasonal-order", pair.summer, panel.rows[i].first, panel.rows[i].second, *s - *w,
                       fmt::format("summer {} below winter {}", *s, *w)});
      }
    }
  }

  for (const auto& f : rules.fidelity) {
    const double r = pearson(f.predicted, f.observed);
    if (!(r >= rules.fidelity_threshold)) {
      out.push_back({"fidelity", f.variable, "", 0, r,
                     fmt::format("Pearson r {} below {}", r, rules.fidelity_threshold)});
    }
  }
  return out;
}

}  // namespace harmonia
