#include "harmonia/geojson.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "harmonia/error.hpp"

namespace harmonia {

namespace {

using nlohmann::json;

Ring parse_ring(const json& coords) {
  Ring ring;
  for (const auto& xy : coords) {
    if (!xy.is_array() || xy.size() < 2) throw Error(Errc::parse, "malformed GeoJSON position");
    ring.push_back({xy[0].get<double>(), xy[1].get<double>()});
  }
  return ring;
}

Polygon parse_polygon(const json& rings) {
  if (!rings.is_array() || rings.empty()) throw Error(Errc::parse, "polygon without rings");
  Polygon poly;
  poly.outer = parse_ring(rings[0]);
  for (std::size_t i = 1; i < rings.size(); ++i) poly.holes.push_back(parse_ring(rings[i]));
  return poly;
}

json ring_json(const Ring& ring) {
  json out = json::array();
  for (const auto& p : ring) out.push_back({p.x, p.y});
  return out;
}

}  // namespace

std::vector<AreaUnit> parse_areas_geojson(std::string_view text, const std::string& id_property) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::parse, std::string("GeoJSON: ") + e.what());
  }
  const json* features = nullptr;
  json single = json::array();
  if (doc.value("type", "") == "FeatureCollection") {
    features = &doc.at("features");
  } else if (doc.value("type", "") == "Feature") {
    single.push_back(doc);
    features = &single;
  } else {
    throw Error(Errc::parse, "GeoJSON root must be a Feature or FeatureCollection");
  }

  std::vector<AreaUnit> out;
  try {
    for (const auto& feature : *features) {
      const auto& props = feature.at("properties");
      if (!props.contains(id_property)) throw Error(Errc::parse, "feature lacks property '" + id_property + "'");
      const auto& raw_id = props.at(id_property);
      std::string id = raw_id.is_string() ? raw_id.get<std::string>() : raw_id.dump();

      const auto& geom = feature.at("geometry");
      const std::string type = geom.at("type").get<std::string>();
      std::vector<Polygon> parts;
      if (type == "Polygon") {
        parts.push_back(parse_polygon(geom.at("coordinates")));
      } else if (type == "MultiPolygon") {
        for (const auto& rings : geom.at("coordinates")) parts.push_back(parse_polygon(rings));
      } else {
        throw Error(Errc::parse, "unsupported geometry type '" + type + "'");
      }
      out.emplace_back(std::move(id), std::move(parts));
    }
  } catch (const json::exception& e) {
    throw Error(Errc::parse, std::string("GeoJSON: ") + e.what());
  }
  return out;
}

std::vector<AreaUnit> read_areas_geojson(const std::filesystem::path& path, const std::string& id_property) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_areas_geojson(buf.str(), id_property);
}

std::string to_geojson(const std::vector<AreaUnit>& areas, const std::string& id_property) {
  json features = json::array();
  for (const auto& area : areas) {
    json polys = json::array();
    for (const auto& part : area.parts()) {
      json rings = json::array();
      rings.push_back(ring_json(part.outer));
      for (const auto& hole : part.holes) rings.push_back(ring_json(hole));
      polys.push_back(std::move(rings));
    }
    json geometry = polys.size() == 1 ? json{{"type", "Polygon"}, {"coordinates", polys[0]}}
                                      : json{{"type", "MultiPolygon"}, {"coordinates", polys}};
    features.push_back({{"type", "Feature"}, {"properties", {{id_property, area.id()}}}, {"geometry", geometry}});
  }
  return json{{"type", "FeatureCollection"}, {"features", features}}.dump(1);
}

}  // namespace harmonia
