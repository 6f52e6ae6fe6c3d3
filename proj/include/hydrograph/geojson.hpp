#pragma once

// GeoJSON writers for node geometries and exported subgraphs.

#include "hydrograph/geo.hpp"
#include "hydrograph/graph.hpp"
#include "hydrograph/ingest.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <set>

namespace hydrograph {

namespace detail {

inline nlohmann::json position(const geo::Point& p) { return nlohmann::json::array({p.x, p.y}); }

inline nlohmann::json ring_json(const geo::Ring& r) {
    auto a = nlohmann::json::array();
    for (const auto& p : r) a.push_back(position(p));
    return a;
}

inline nlohmann::json polygon_coords(const geo::Polygon& poly) {
    auto a = nlohmann::json::array({ring_json(poly.exterior)});
    for (const auto& h : poly.holes) a.push_back(ring_json(h));
    return a;
}

} // namespace detail

inline nlohmann::json geometry_to_json(const geo::Geometry& g) {
    using nlohmann::json;
    return std::visit(
        [](const auto& v) -> json {
            using G = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<G, geo::Point>) {
                return {{"type", "Point"}, {"coordinates", detail::position(v)}};
            } else if constexpr (std::is_same_v<G, geo::PolyLine>) {
                return {{"type", "LineString"}, {"coordinates", detail::ring_json(v.vertices)}};
            } else if constexpr (std::is_same_v<G, geo::Polygon>) {
                return {{"type", "Polygon"}, {"coordinates", detail::polygon_coords(v)}};
            } else {
                auto parts = json::array();
                for (const auto& p : v.parts) parts.push_back(detail::polygon_coords(p));
                return {{"type", "MultiPolygon"}, {"coordinates", parts}};
            }
        },
        g);
}

inline nlohmann::json feature_json(Comid comid, std::string_view kind, const geo::Geometry& g,
                                   const std::optional<HucCode>& huc12 = std::nullopt,
                                   const std::optional<std::string>& ftype = std::nullopt) {
    nlohmann::json props = {{"COMID", comid.value}, {"KIND", std::string(kind)}};
    if (huc12) props["HUC12"] = huc12->str();
    if (ftype) props["FTYPE"] = *ftype;
    return {{"type", "Feature"}, {"properties", props}, {"geometry", geometry_to_json(g)}};
}

/// Node geometry file: one feature per record, readable by parse_node_features.
inline nlohmann::json features_to_geojson(const std::vector<FeatureRecord>& records) {
    auto feats = nlohmann::json::array();
    for (const auto& r : records) feats.push_back(feature_json(r.comid, to_string(r.kind), r.geometry, r.huc12, r.ftype));
    return {{"type", "FeatureCollection"}, {"features", feats}};
}

/// Member geometries of a subgraph, ascending COMID; members without a stored
/// geometry are omitted. Edges ride along as a foreign member.
inline nlohmann::json subgraph_geojson(const HydroGraph& sub, const std::map<Comid, geo::Geometry>& geoms) {
    auto feats = nlohmann::json::array();
    for (const auto& [c, info] : sub.nodes()) {
        auto it = geoms.find(c);
        if (it == geoms.end()) continue;
        feats.push_back(feature_json(c, to_string(info.kind), it->second, info.huc12));
    }
    auto edges = nlohmann::json::array();
    for (const auto& e : sub.edges()) edges.push_back({e.from.value, e.to.value});
    return {{"type", "FeatureCollection"}, {"features", feats}, {"edges", edges}};
}

} // namespace hydrograph
