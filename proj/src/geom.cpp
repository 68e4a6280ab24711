#include "harmonia/geom.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "harmonia/error.hpp"

namespace harmonia {

namespace {

void check_ring(const Ring& ring) {
  if (ring.size() < 4 || !(ring.front() == ring.back())) {
    throw Error(Errc::invalid_geometry, "ring is not closed or has fewer than 3 vertices");
  }
  for (const auto& p : ring) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw Error(Errc::invalid_geometry, "non-finite vertex");
    }
  }
  std::set<std::pair<double, double>> distinct;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) distinct.emplace(ring[i].x, ring[i].y);
  if (distinct.size() < 3) {
    throw Error(Errc::invalid_geometry, "ring has fewer than 3 distinct points");
  }
}

bool on_segment(const Point& p, const Point& a, const Point& b) noexcept {
  const double cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
  const double scale = std::max({std::abs(b.x - a.x), std::abs(b.y - a.y), 1.0});
  if (std::abs(cross) > 1e-12 * scale * scale) return false;
  return p.x >= std::min(a.x, b.x) - 1e-12 && p.x <= std::max(a.x, b.x) + 1e-12 &&
         p.y >= std::min(a.y, b.y) - 1e-12 && p.y <= std::max(a.y, b.y) + 1e-12;
}

// 0 = outside, 1 = inside, 2 = on boundary
int ring_side(const Ring& ring, const Point& p) noexcept {
  bool inside = false;
  for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
    const Point& a = ring[i];
    const Point& b = ring[j];
    if (on_segment(p, a, b)) return 2;
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside ? 1 : 0;
}

std::vector<Point> lattice_inside(const AreaUnit& unit, double spacing) {
  const auto [lo, hi] = unit.bounds();
  std::vector<Point> out;
  for (std::size_t i = 0; lo.x + spacing * (i + 0.5) <= hi.x; ++i) {
    for (std::size_t j = 0; lo.y + spacing * (j + 0.5) <= hi.y; ++j) {
      const Point p{lo.x + spacing * (i + 0.5), lo.y + spacing * (j + 0.5)};
      if (unit.contains(p)) out.push_back(p);
    }
  }
  return out;
}

}  // namespace

double distance(const Point& a, const Point& b) noexcept { return std::hypot(a.x - b.x, a.y - b.y); }

double ring_area(const Ring& ring) {
  check_ring(ring);
  double twice = 0.0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    twice += ring[i].x * ring[i + 1].y - ring[i + 1].x * ring[i].y;
  }
  return std::abs(twice) / 2.0;
}

double polygon_area(const std::vector<Polygon>& parts) {
  if (parts.empty()) throw Error(Errc::invalid_geometry, "polygon has no parts");
  double total = 0.0;
  for (const auto& part : parts) {
    total += ring_area(part.outer);
    for (const auto& hole : part.holes) total -= ring_area(hole);
  }
  if (!(total > 0.0)) throw Error(Errc::invalid_geometry, "polygon area is not positive");
  return total;
}

double polygon_area(const AreaUnit& unit) { return polygon_area(unit.parts()); }

AreaUnit::AreaUnit(std::string id, std::vector<Polygon> parts)
    : id_(std::move(id)), parts_(std::move(parts)), area_(polygon_area(parts_)) {}

std::pair<Point, Point> AreaUnit::bounds() const noexcept {
  Point lo{INFINITY, INFINITY};
  Point hi{-INFINITY, -INFINITY};
  for (const auto& part : parts_) {
    for (const auto& p : part.outer) {
      lo.x = std::min(lo.x, p.x);
      lo.y = std::min(lo.y, p.y);
      hi.x = std::max(hi.x, p.x);
      hi.y = std::max(hi.y, p.y);
    }
  }
  return {lo, hi};
}

bool AreaUnit::contains(const Point& p) const noexcept {
  bool inside = false;
  for (const auto& part : parts_) {
    const int outer = ring_side(part.outer, p);
    if (outer == 2) return true;
    if (outer == 1) inside = !inside;
    for (const auto& hole : part.holes) {
      const int side = ring_side(hole, p);
      if (side == 2) return true;
      if (side == 1) inside = !inside;
    }
  }
  return inside;
}

AreaUnit make_rectangle(std::string id, double x0, double y0, double x1, double y1) {
  Polygon poly;
  poly.outer = {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}};
  return AreaUnit(std::move(id), {std::move(poly)});
}

std::vector<Point> discretize_block(const AreaUnit& unit, double spacing) {
  if (!(spacing > 0.0) || !std::isfinite(spacing)) {
    throw Error(Errc::domain, "discretization spacing must be positive");
  }
  if (!(unit.area() > 0.0)) throw Error(Errc::invalid_geometry, "zero-area block");
  auto points = lattice_inside(unit, spacing);
  for (int halvings = 0; points.size() < 4 && halvings < 10; ++halvings) {
    spacing /= 2.0;
    points = lattice_inside(unit, spacing);
  }
  if (points.empty()) throw Error(Errc::invalid_geometry, "block '" + unit.id() + "' has no interior lattice points");
  return points;
}

Point centroid(std::span<const Point> points) {
  if (points.empty()) throw Error(Errc::empty_input, "centroid of no points");
  Point c;
  for (const auto& p : points) {
    c.x += p.x;
    c.y += p.y;
  }
  c.x /= static_cast<double>(points.size());
  c.y /= static_cast<double>(points.size());
  return c;
}

std::vector<std::size_t> knn(std::span<const Point> samples, const Point& target, std::size_t k) {
  if (samples.empty()) throw Error(Errc::empty_input, "knn over no samples");
  if (k == 0) throw Error(Errc::domain, "knn requires k >= 1");
  std::vector<std::pair<double, std::size_t>> keyed(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double dx = samples[i].x - target.x;
    const double dy = samples[i].y - target.y;
    keyed[i] = {dx * dx + dy * dy, i};
  }
  const std::size_t m = std::min(k, samples.size());
  std::partial_sort(keyed.begin(), keyed.begin() + static_cast<std::ptrdiff_t>(m), keyed.end());
  std::vector<std::size_t> out(m);
  for (std::size_t i = 0; i < m; ++i) out[i] = keyed[i].second;
  return out;
}

GridFieldSnapshot GridFieldSnapshot::make(std::string variable, int year, std::optional<std::string> sector,
                                          std::vector<Sample> samples) {
  if (samples.empty()) throw Error(Errc::empty_input, "field '" + variable + "' has no samples");
  // Coincident locations are merged into their mean, keeping first-seen order.
  std::map<std::pair<double, double>, std::size_t> slot;
  std::vector<Sample> merged;
  std::vector<std::size_t> counts;
  for (const auto& s : samples) {
    if (!std::isfinite(s.value) || !std::isfinite(s.location.x) || !std::isfinite(s.location.y)) {
      throw Error(Errc::domain, "field '" + variable + "' contains a non-finite sample");
    }
    auto [it, fresh] = slot.try_emplace({s.location.x, s.location.y}, merged.size());
    if (fresh) {
      merged.push_back(s);
      counts.push_back(1);
    } else {
      merged[it->second].value += s.value;
      ++counts[it->second];
    }
  }
  for (std::size_t i = 0; i < merged.size(); ++i) merged[i].value /= static_cast<double>(counts[i]);
  GridFieldSnapshot field;
  field.variable = std::move(variable);
  field.year = year;
  field.sector = std::move(sector);
  field.samples = std::move(merged);
  return field;
}

std::vector<Point> GridFieldSnapshot::locations() const {
  std::vector<Point> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.location);
  return out;
}

std::vector<double> GridFieldSnapshot::values() const {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.value);
  return out;
}

Crosswalk::Crosswalk(const std::vector<std::pair<std::string, std::string>>& entries) {
  for (const auto& [municipality, area] : entries) {
    auto [it, fresh] = entries_.try_emplace(municipality, area);
    if (!fresh && it->second != area) {
      throw Error(Errc::unmapped_unit, "municipality '" + municipality + "' listed under areas '" + it->second +
                                           "' and '" + area + "'");
    }
  }
}

std::optional<std::string> Crosswalk::area_of(const std::string& municipality) const {
  auto it = entries_.find(municipality);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> Crosswalk::areas() const {
  std::set<std::string> ids;
  for (const auto& [_, area] : entries_) ids.insert(area);
  return {ids.begin(), ids.end()};
}

}  // namespace harmonia
