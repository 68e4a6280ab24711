#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "harmonia/geom.hpp"

namespace harmonia {

/// Reads a FeatureCollection of Polygon / MultiPolygon features. The area id
/// comes from `properties[id_property]` (string or integer).
std::vector<AreaUnit> parse_areas_geojson(std::string_view text, const std::string& id_property = "id");
std::vector<AreaUnit> read_areas_geojson(const std::filesystem::path& path, const std::string& id_property = "id");

std::string to_geojson(const std::vector<AreaUnit>& areas, const std::string& id_property = "id");

}  // namespace harmonia
