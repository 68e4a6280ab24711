#pragma once

// Planar geometry shared by the kriging, areal and survey modules. Coordinates
// are used as given (projected metres or geographic degrees alike); no CRS
// handling happens here.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace harmonia {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

double distance(const Point& a, const Point& b) noexcept;

using Ring = std::vector<Point>;

/// One polygon part: an outer ring followed by zero or more holes.
struct Polygon {
  Ring outer;
  std::vector<Ring> holes;
};

/// A reporting area (one ASR). Rings are closed (first point repeated last).
class AreaUnit {
 public:
  /// Validates ring closure and computes the area; throws invalid-geometry.
  AreaUnit(std::string id, std::vector<Polygon> parts);

  const std::string& id() const noexcept { return id_; }
  const std::vector<Polygon>& parts() const noexcept { return parts_; }
  double area() const noexcept { return area_; }

  /// Axis-aligned bounding box as (min corner, max corner).
  std::pair<Point, Point> bounds() const noexcept;

  /// Even-odd ray casting over every ring; points on an edge count as inside.
  bool contains(const Point& p) const noexcept;

 private:
  std::string id_;
  std::vector<Polygon> parts_;
  double area_ = 0.0;
};

/// Convenience for tests and the demo: an axis-aligned rectangle.
AreaUnit make_rectangle(std::string id, double x0, double y0, double x1, double y1);

/// Shoelace area, outer rings minus holes. Throws invalid-geometry on rings
/// with fewer than three distinct points or a non-positive total.
double polygon_area(const std::vector<Polygon>& parts);
double polygon_area(const AreaUnit& unit);

/// Absolute shoelace area of one closed ring.
double ring_area(const Ring& ring);

/// Cell-centre lattice clipped to the polygon. Spacing is halved (at most ten
/// times) until at least four points fall inside.
std::vector<Point> discretize_block(const AreaUnit& unit, double spacing);

Point centroid(std::span<const Point> points);

/// Indices of the min(k, n) nearest samples, sorted by distance, ties by index.
std::vector<std::size_t> knn(std::span<const Point> samples, const Point& target, std::size_t k);

struct Sample {
  Point location;
  double value = 0.0;
};

/// One (variable, year, sector) field observed at distinct locations.
struct GridFieldSnapshot {
  std::string variable;
  int year = 0;
  std::optional<std::string> sector;
  std::vector<Sample> samples;

  /// Builds a snapshot, averaging the values of coincident locations. Throws
  /// empty-input when no samples are given and domain on non-finite values.
  static GridFieldSnapshot make(std::string variable, int year, std::optional<std::string> sector,
                                std::vector<Sample> samples);

  std::vector<Point> locations() const;
  std::vector<double> values() const;
};

/// Municipality to area mapping; each municipality belongs to one area.
class Crosswalk {
 public:
  Crosswalk() = default;
  /// Throws unmapped-unit when a municipality is listed under two areas.
  explicit Crosswalk(const std::vector<std::pair<std::string, std::string>>& entries);

  std::optional<std::string> area_of(const std::string& municipality) const;
  const std::map<std::string, std::string>& entries() const noexcept { return entries_; }
  /// Sorted, unique area ids.
  std::vector<std::string> areas() const;

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace harmonia
