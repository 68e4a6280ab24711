#include "harmonia/temporal.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "harmonia/error.hpp"

namespace harmonia {

UnitRule parse_unit_rule(std::string_view name) {
  if (name == "identity") return UnitRule::identity;
  if (name == "K_to_C") return UnitRule::kelvin_to_celsius;
  if (name == "m_to_mm") return UnitRule::metres_to_millimetres;
  throw Error(Errc::parse, fmt::format("unknown unit rule '{}'", name));
}

std::string_view to_string(UnitRule rule) noexcept {
  switch (rule) {
    case UnitRule::identity: return "identity";
    case UnitRule::kelvin_to_celsius: return "K_to_C";
    case UnitRule::metres_to_millimetres: return "m_to_mm";
  }
  return "identity";
}

double convert_unit(double value, UnitRule rule) noexcept {
  switch (rule) {
    case UnitRule::kelvin_to_celsius: return value - 273.15;
    case UnitRule::metres_to_millimetres: return value * 1000.0;
    case UnitRule::identity: break;
  }
  return value;
}

double wind_speed(double u, double v) noexcept { return std::hypot(u, v); }

WindConvention parse_wind_convention(std::string_view name) {
  if (name == "printed") return WindConvention::printed;
  if (name == "meteorological") return WindConvention::meteorological;
  throw Error(Errc::parse, fmt::format("unknown wind-direction convention '{}'", name));
}

std::optional<double> wind_direction(double u, double v, WindConvention convention) {
  const double ws = wind_speed(u, v);
  if (ws == 0.0) return std::nullopt;
  constexpr double deg = 180.0 / std::numbers::pi;
  double wd = convention == WindConvention::printed ? 180.0 - std::atan2(u / ws, v / ws) * deg
                                                    : 180.0 + std::atan2(u, v) * deg;
  wd = std::fmod(wd, 360.0);
  if (wd < 0.0) wd += 360.0;
  if (wd >= 360.0) wd -= 360.0;
  return wd;
}

double relative_humidity(double t2m, double d2m, const MagnusConstants& magnus) {
  if (t2m <= -magnus.b || d2m <= -magnus.b) {
    throw Error(Errc::domain, fmt::format("temperature below the Magnus pole ({}, {})", t2m, d2m));
  }
  if (d2m > t2m + 0.5) {
    throw Error(Errc::domain, fmt::format("dew point {} exceeds air temperature {}", d2m, t2m));
  }
  const double rh =
      100.0 * std::exp(magnus.a * d2m / (magnus.b + d2m)) / std::exp(magnus.a * t2m / (magnus.b + t2m));
  return std::min(rh, 100.0);
}

Timestamp parse_timestamp(std::string_view text) {
  Timestamp ts;
  const std::string s(text);
  char sep = 0;
  int consumed = 0;
  const int fields = std::sscanf(s.c_str(), "%4d-%2d-%2d%c%2d:%2d%n", &ts.year, &ts.month, &ts.day, &sep, &ts.hour,
                                 &ts.minute, &consumed);
  std::size_t pos = 0;
  if (fields == 6 && (sep == 'T' || sep == ' ')) {
    pos = static_cast<std::size_t>(consumed);
    if (pos < s.size() && s[pos] == ':') {
      int extra = 0;
      if (std::sscanf(s.c_str() + pos, ":%2d%n", &ts.second, &extra) != 1) {
        throw Error(Errc::parse, "bad timestamp '" + s + "'");
      }
      pos += static_cast<std::size_t>(extra);
    }
    if (pos < s.size() && s[pos] == 'Z') ++pos;
  } else if (fields >= 3) {
    ts.hour = ts.minute = ts.second = 0;
    pos = 10;
  } else {
    throw Error(Errc::parse, "bad timestamp '" + s + "'");
  }
  const std::chrono::year_month_day ymd{std::chrono::year{ts.year}, std::chrono::month{static_cast<unsigned>(ts.month)},
                                        std::chrono::day{static_cast<unsigned>(ts.day)}};
  if (pos != s.size() || !ymd.ok() || ts.hour < 0 || ts.hour > 23 || ts.minute < 0 || ts.minute > 59 ||
      ts.second < 0 || ts.second > 60) {
    throw Error(Errc::parse, "bad timestamp '" + s + "'");
  }
  return ts;
}

std::string to_string(const Timestamp& ts) {
  return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}", ts.year, ts.month, ts.day, ts.hour, ts.minute,
                     ts.second);
}

std::string_view to_string(Season season) noexcept {
  switch (season) {
    case Season::winter: return "Winter";
    case Season::spring: return "Spring";
    case Season::summer: return "Summer";
    case Season::fall: return "Fall";
  }
  return "Winter";
}

SeasonYear assign_season(const Timestamp& ts) noexcept {
  Season s = Season::winter;
  if (ts.month >= 3 && ts.month <= 5) s = Season::spring;
  else if (ts.month >= 6 && ts.month <= 8) s = Season::summer;
  else if (ts.month >= 9 && ts.month <= 11) s = Season::fall;
  return {s, ts.year};
}

SummaryStats summarize_values(std::span<const double> values) {
  if (values.empty()) throw Error(Errc::empty_input, "summary of no observations");
  SummaryStats st;
  st.min = values[0];
  st.max = values[0];
  double m2 = 0.0;
  for (double v : values) {
    ++st.count;
    const double delta = v - st.mean;
    st.mean += delta / static_cast<double>(st.count);
    m2 += delta * (v - st.mean);
    st.sum += v;
    st.min = std::min(st.min, v);
    st.max = std::max(st.max, v);
  }
  st.single_observation = st.count == 1;
  st.sd = st.count > 1 ? std::sqrt(std::max(m2, 0.0) / static_cast<double>(st.count - 1)) : 0.0;
  // Welford's running mean can stray one ulp outside [min, max].
  st.mean = std::clamp(st.mean, st.min, st.max);
  return st;
}

std::map<WindowKey, std::optional<SummaryStats>> summarize(const TimedSeries& series, Window window) {
  std::map<WindowKey, std::vector<double>> grouped;
  for (std::size_t i = 0; i < series.observations.size(); ++i) {
    const auto& obs = series.observations[i];
    if (i > 0 && !(series.observations[i - 1].time < obs.time)) {
      throw Error(Errc::domain, fmt::format("series {}/{} times not strictly increasing at {}", series.cell_id,
                                            series.variable, to_string(obs.time)));
    }
    WindowKey key{obs.time.year, std::nullopt};
    if (window == Window::seasonal) key.season = assign_season(obs.time).season;
    auto& bucket = grouped[key];
    if (obs.value && std::isfinite(*obs.value)) bucket.push_back(*obs.value);
  }
  std::map<WindowKey, std::optional<SummaryStats>> out;
  for (const auto& [key, values] : grouped) {
    if (values.empty()) {
      out.emplace(key, std::nullopt);
    } else {
      out.emplace(key, summarize_values(values));
    }
  }
  return out;
}

std::optional<std::string> physical_violation(std::string_view variable, double value) {
  static const std::set<std::string, std::less<>> non_negative{"tp", "sf", "ro", "sro", "ssro"};
  if (non_negative.contains(variable) && value < 0.0) {
    return fmt::format("{} = {} is negative", variable, value);
  }
  if (variable == "rh" && !(value > 0.0 && value <= 100.0)) {
    return fmt::format("rh = {} outside (0, 100]", value);
  }
  return std::nullopt;
}

std::map<std::string, UnitRule> TemporalConfig::default_unit_rules() {
  std::map<std::string, UnitRule> rules;
  for (const char* v : {"t2m", "d2m", "skt", "stl1", "stl2", "stl3", "stl4"}) rules[v] = UnitRule::kelvin_to_celsius;
  for (const char* v : {"tp", "sf", "ro", "sro", "ssro", "e", "pev"}) rules[v] = UnitRule::metres_to_millimetres;
  return rules;
}

namespace {

double stat_value(const SummaryStats& st, std::string_view stat) {
  if (stat == "mean") return st.mean;
  if (stat == "min") return st.min;
  if (stat == "max") return st.max;
  if (stat == "sd") return st.sd;
  if (stat == "sum") return st.sum;
  if (stat == "count") return static_cast<double>(st.count);
  throw Error(Errc::parse, fmt::format("unknown statistic '{}'", stat));
}

}  // namespace

std::vector<SummaryRow> aggregate_temporal(const std::vector<LongRecord>& records, const TemporalConfig& cfg) {
  struct CellInfo {
    double x = 0.0, y = 0.0;
    // time -> variable -> value
    std::map<Timestamp, std::map<std::string, std::optional<double>>> at;
  };
  std::map<std::string, CellInfo> cells;
  for (const auto& r : records) {
    auto& cell = cells[r.cell_id];
    cell.x = r.x;
    cell.y = r.y;
    std::optional<double> v = r.value;
    if (v) {
      auto rule = cfg.units.find(r.variable);
      if (rule != cfg.units.end()) v = convert_unit(*v, rule->second);
    }
    auto [it, fresh] = cell.at[r.time].emplace(r.variable, v);
    if (!fresh) {
      throw Error(Errc::domain, fmt::format("duplicate observation {}/{} at {}", r.cell_id, r.variable,
                                            to_string(r.time)));
    }
  }

  std::vector<SummaryRow> rows;
  for (auto& [cell_id, cell] : cells) {
    std::map<std::string, TimedSeries> series;
    auto push = [&](const std::string& variable, const Timestamp& t, std::optional<double> v) {
      auto& s = series[variable];
      s.variable = variable;
      s.cell_id = cell_id;
      s.observations.push_back({t, v});
    };
    for (auto& [time, vars] : cell.at) {
      std::map<std::string, std::optional<double>> derived;
      for (const auto& [name, value] : vars) {
        if (name.size() < 2 || name[0] != 'u') continue;
        const std::string suffix = name.substr(1);
        auto partner = vars.find("v" + suffix);
        if (partner == vars.end()) continue;
        if (value && partner->second) {
          derived["ws" + suffix] = wind_speed(*value, *partner->second);
          derived["wd" + suffix] = wind_direction(*value, *partner->second, cfg.wind);
        } else {
          derived["ws" + suffix] = std::nullopt;
          derived["wd" + suffix] = std::nullopt;
        }
      }
      auto t = vars.find("t2m");
      auto d = vars.find("d2m");
      if (t != vars.end() && d != vars.end()) {
        derived["rh"] = (t->second && d->second) ? std::optional(relative_humidity(*t->second, *d->second, cfg.magnus))
                                                 : std::nullopt;
      }
      for (const auto& [name, value] : vars) push(name, time, value);
      for (const auto& [name, value] : derived) {
        if (!vars.contains(name)) push(name, time, value);
      }
    }

    // year -> period order -> variable -> stats
    std::map<std::tuple<int, int, std::string>, std::optional<SummaryStats>> summaries;
    for (const auto& [variable, s] : series) {
      for (const auto& [key, st] : summarize(s, Window::annual)) summaries[{key.year, -1, variable}] = st;
      if (cfg.seasonal) {
        for (const auto& [key, st] : summarize(s, Window::seasonal)) {
          summaries[{key.year, static_cast<int>(*key.season), variable}] = st;
        }
      }
    }
    for (const auto& [key, st] : summaries) {
      const auto& [year, period, variable] = key;
      for (const auto& stat : cfg.stats) {
        SummaryRow row{cell_id, cell.x, cell.y, year,
                       period < 0 ? std::string("ANNUAL") : std::string(to_string(static_cast<Season>(period))),
                       variable, stat, std::nullopt};
        if (st) row.value = stat_value(*st, stat);
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

}  // namespace harmonia
