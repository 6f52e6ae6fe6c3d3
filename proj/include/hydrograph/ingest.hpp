#pragma once

// Parsing and validation of the flow table, GeoJSON feature collections and
// the run configuration, plus the waterbody exclusion filters.

#include "hydrograph/csv.hpp"
#include "hydrograph/error.hpp"
#include "hydrograph/geo.hpp"
#include "hydrograph/types.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace hydrograph {

enum class FeatureKind { RiverSegment, Waterbody, Watershed, LandCover, PointSource };

struct FeatureRecord {
    Comid comid;
    FeatureKind kind = FeatureKind::RiverSegment;
    geo::Geometry geometry;
    std::optional<std::string> ftype;
    std::optional<HucCode> huc12;
    std::vector<Comid> intersecting;
};

enum class LengthUnits { Meters, Degrees };

struct Config {
    std::vector<Comid> exclude_comids;
    std::optional<double> grid_step;
    std::string crs_note;
    LengthUnits units = LengthUnits::Meters;
};

// ---------------------------------------------------------------------------
// Flow table

/// FROMCOMID/TOCOMID pairs, cleaned: 0-sentinel rows, self-loops and exact
/// duplicates are dropped; first-occurrence order is kept.
inline std::vector<FlowEdge> parse_flow_table(std::string_view text) {
    const csv::Table t = csv::parse(text);
    const std::size_t from_col = t.require("FROMCOMID");
    const std::size_t to_col = t.require("TOCOMID");

    std::vector<FlowEdge> edges;
    std::set<FlowEdge> seen;
    for (const auto& row : t.rows) {
        const auto from = csv::int_cell(row, from_col, "FROMCOMID");
        const auto to = csv::int_cell(row, to_col, "TOCOMID");
        if (from == 0 || to == 0) continue;
        if (from < 0 || to < 0)
            throw ValidationError("negative COMID at line " + std::to_string(row.line));
        if (from == to) continue;
        const FlowEdge e{Comid{static_cast<std::uint64_t>(from)}, Comid{static_cast<std::uint64_t>(to)}};
        if (seen.insert(e).second) edges.push_back(e);
    }
    return edges;
}

inline std::string serialize_flow_table(const std::vector<FlowEdge>& edges) {
    std::string out = "FROMCOMID,TOCOMID\n";
    for (const auto& e : edges) {
        out += std::to_string(e.from.value);
        out += ',';
        out += std::to_string(e.to.value);
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// GeoJSON

namespace detail {

using nlohmann::json;

inline std::string at_index(std::size_t i) { return " at feature index " + std::to_string(i); }

inline geo::Point parse_position(const json& j, std::size_t idx) {
    if (!j.is_array() || j.size() < 2 || !j[0].is_number() || !j[1].is_number())
        throw ValidationError("malformed geometry" + at_index(idx));
    geo::Point p{j[0].get<double>(), j[1].get<double>()};
    if (!std::isfinite(p.x) || !std::isfinite(p.y))
        throw ValidationError("non-finite coordinate" + at_index(idx));
    return p;
}

inline std::vector<geo::Point> parse_positions(const json& j, std::size_t idx) {
    if (!j.is_array()) throw ValidationError("malformed geometry" + at_index(idx));
    std::vector<geo::Point> pts;
    pts.reserve(j.size());
    for (const auto& p : j) pts.push_back(parse_position(p, idx));
    return pts;
}

inline geo::Ring parse_ring(const json& j, std::size_t idx) {
    geo::Ring ring = parse_positions(j, idx);
    if (ring.size() < 4) throw ValidationError("ring with fewer than 4 positions" + at_index(idx));
    if (!(ring.front() == ring.back())) throw ValidationError("unclosed ring" + at_index(idx));
    return ring;
}

inline geo::Polygon parse_polygon(const json& j, std::size_t idx) {
    if (!j.is_array() || j.empty()) throw ValidationError("malformed geometry" + at_index(idx));
    geo::Polygon poly;
    poly.exterior = parse_ring(j[0], idx);
    for (std::size_t r = 1; r < j.size(); ++r) poly.holes.push_back(parse_ring(j[r], idx));
    return poly;
}

// Consecutive duplicate vertices are collapsed; NHD flowlines carry them.
inline geo::PolyLine make_polyline(std::vector<geo::Point> pts, std::size_t idx) {
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 2) throw ValidationError("degenerate polyline" + at_index(idx));
    return geo::PolyLine{std::move(pts)};
}

inline bool empty_coordinates(const json& c) {
    if (!c.is_array()) return false;
    if (c.empty()) return true;
    if (c[0].is_number()) return false;
    return std::all_of(c.begin(), c.end(), [](const json& x) { return empty_coordinates(x); });
}

inline geo::Geometry parse_geometry(const json& g, std::size_t idx) {
    if (g.is_null()) throw ValidationError("empty geometry" + at_index(idx));
    if (!g.is_object() || !g.contains("type") || !g["type"].is_string())
        throw ValidationError("malformed geometry" + at_index(idx));
    const auto type = g["type"].get<std::string>();
    if (!g.contains("coordinates")) throw ValidationError("malformed geometry" + at_index(idx));
    const json& c = g["coordinates"];
    if (empty_coordinates(c)) throw ValidationError("empty geometry" + at_index(idx));

    if (type == "Point") return parse_position(c, idx);
    if (type == "LineString") return make_polyline(parse_positions(c, idx), idx);
    if (type == "MultiLineString") {
        if (!c.is_array()) throw ValidationError("malformed geometry" + at_index(idx));
        std::vector<geo::Point> joined;
        for (const auto& part : c) {
            auto pts = parse_positions(part, idx);
            if (pts.empty()) continue;
            if (!joined.empty() && !(joined.back() == pts.front()))
                throw ValidationError("disconnected MultiLineString" + at_index(idx));
            joined.insert(joined.end(), pts.begin(), pts.end());
        }
        return make_polyline(std::move(joined), idx);
    }
    if (type == "Polygon") return parse_polygon(c, idx);
    if (type == "MultiPolygon") {
        if (!c.is_array()) throw ValidationError("malformed geometry" + at_index(idx));
        geo::MultiPolygon mp;
        for (const auto& part : c) mp.parts.push_back(parse_polygon(part, idx));
        return mp;
    }
    throw ValidationError("unsupported geometry type '" + type + "'" + at_index(idx));
}

inline std::optional<std::int64_t> integer_property(const json& v) {
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (std::isfinite(d) && std::floor(d) == d) return static_cast<std::int64_t>(d);
        return std::nullopt;
    }
    if (v.is_string()) return csv::to_int(v.get<std::string>());
    return std::nullopt;
}

inline std::string huc_property(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (auto i = integer_property(v)) {
        std::string s = std::to_string(*i);
        if (s.size() < 12) s.insert(0, 12 - s.size(), '0');
        return s;
    }
    return {};
}

inline nlohmann::json parse_collection(std::string_view text) {
    using nlohmann::json;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("invalid GeoJSON: ") + e.what());
    }
    if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features") ||
        !doc["features"].is_array())
        throw ValidationError("GeoJSON must be a FeatureCollection");
    return doc;
}

inline FeatureRecord parse_feature(const nlohmann::json& f, std::size_t i, FeatureKind kind,
                                   std::string_view id_property) {
    using nlohmann::json;
    if (!f.is_object()) throw ValidationError("malformed feature" + at_index(i));
    static const json kEmpty = json::object();
    const json& props = f.contains("properties") && f["properties"].is_object() ? f["properties"] : kEmpty;
    const bool id_optional = kind == FeatureKind::Watershed || kind == FeatureKind::LandCover;
    const std::string id_key = id_property.empty() ? (kind == FeatureKind::LandCover ? "" : "COMID")
                                                   : std::string(id_property);

    FeatureRecord rec;
    rec.kind = kind;
    if (!id_key.empty() && props.contains(id_key) && !props[id_key].is_null()) {
        const auto v = integer_property(props[id_key]);
        if (!v || *v <= 0) throw ValidationError("invalid " + id_key + at_index(i));
        rec.comid = Comid{static_cast<std::uint64_t>(*v)};
    } else if (id_optional) {
        rec.comid = Comid{static_cast<std::uint64_t>(i + 1)};
    } else {
        throw ValidationError("missing " + id_key + at_index(i));
    }

    if (kind == FeatureKind::Watershed && (!props.contains("HUC12") || props["HUC12"].is_null()))
        throw ValidationError("missing HUC12" + at_index(i));
    if (props.contains("HUC12") && !props["HUC12"].is_null()) {
        try {
            rec.huc12 = HucCode(huc_property(props["HUC12"]));
        } catch (const ValidationError& e) {
            throw ValidationError(std::string(e.what()) + at_index(i));
        }
    }
    if (props.contains("FTYPE") && props["FTYPE"].is_string()) rec.ftype = props["FTYPE"].get<std::string>();

    rec.geometry = parse_geometry(f.contains("geometry") ? f["geometry"] : json(nullptr), i);

    const bool ok = std::visit(
        [&](const auto& g) {
            using G = std::decay_t<decltype(g)>;
            switch (kind) {
            case FeatureKind::RiverSegment: return std::is_same_v<G, geo::PolyLine>;
            case FeatureKind::PointSource: return std::is_same_v<G, geo::Point>;
            default: return geo::Areal<G>;
            }
        },
        rec.geometry);
    if (!ok) throw ValidationError("geometry type does not match feature kind" + at_index(i));
    try {
        geo::validate(rec.geometry);
    } catch (const ValidationError& e) {
        throw ValidationError(std::string(e.what()) + at_index(i));
    }
    return rec;
}

} // namespace detail

/// Parses a GeoJSON FeatureCollection into records of one kind.
///
/// The record id comes from `id_property` (default COMID; pass "WBIC" for
/// external lake polygons). Watershed features are keyed by their HUC12
/// property and, like land-cover features, may omit an id, in which case the
/// 1-based feature index is used.
inline std::vector<FeatureRecord> parse_features(std::string_view text, FeatureKind kind,
                                                 std::string_view id_property = {}) {
    const auto doc = detail::parse_collection(text);
    std::vector<FeatureRecord> out;
    const auto& features = doc["features"];
    out.reserve(features.size());
    for (std::size_t i = 0; i < features.size(); ++i)
        out.push_back(detail::parse_feature(features[i], i, kind, id_property));
    return out;
}

inline std::string_view to_string(FeatureKind k) {
    switch (k) {
    case FeatureKind::RiverSegment: return "River";
    case FeatureKind::Waterbody: return "Waterbody";
    case FeatureKind::Watershed: return "Watershed";
    case FeatureKind::LandCover: return "LandCover";
    case FeatureKind::PointSource: return "PointSource";
    }
    return "River";
}

/// Mixed collection of graph-node geometries; each feature's KIND property
/// (River | Waterbody | PointSource) selects its record kind.
inline std::vector<FeatureRecord> parse_node_features(std::string_view text) {
    const auto doc = detail::parse_collection(text);
    std::vector<FeatureRecord> out;
    const auto& features = doc["features"];
    for (std::size_t i = 0; i < features.size(); ++i) {
        const auto& f = features[i];
        std::string kind_name = "River";
        if (f.is_object() && f.contains("properties") && f["properties"].is_object())
            kind_name = f["properties"].value("KIND", std::string("River"));
        FeatureKind kind;
        if (kind_name == "River") kind = FeatureKind::RiverSegment;
        else if (kind_name == "Waterbody") kind = FeatureKind::Waterbody;
        else if (kind_name == "PointSource") kind = FeatureKind::PointSource;
        else throw ValidationError("unknown KIND '" + kind_name + "'" + detail::at_index(i));
        out.push_back(detail::parse_feature(f, i, kind, {}));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Filters

struct FilterStats {
    std::size_t marshes_dropped = 0;
    std::size_t exclusions_applied = 0;
};

/// Drops SwampMarsh waterbodies and any COMID on the exclusion list.
inline std::vector<FeatureRecord> filter_waterbodies(const std::vector<FeatureRecord>& records,
                                                     const std::vector<Comid>& exclude,
                                                     FilterStats* stats = nullptr) {
    const std::unordered_set<Comid> excluded(exclude.begin(), exclude.end());
    std::vector<FeatureRecord> out;
    FilterStats s;
    for (const auto& r : records) {
        if (r.ftype && *r.ftype == "SwampMarsh") {
            ++s.marshes_dropped;
            continue;
        }
        if (excluded.contains(r.comid)) {
            ++s.exclusions_applied;
            continue;
        }
        out.push_back(r);
    }
    if (stats) *stats = s;
    return out;
}

// ---------------------------------------------------------------------------
// Config

/// JSON object: exclude_comids (array), grid_step (number), crs_note (string),
/// units ("meters" | "degrees"). Unknown keys are rejected.
inline Config parse_config(std::string_view text) {
    using nlohmann::json;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("invalid config: ") + e.what());
    }
    if (!j.is_object()) throw ValidationError("config must be a JSON object");
    Config cfg;
    for (const auto& [key, v] : j.items()) {
        if (key == "exclude_comids") {
            if (!v.is_array()) throw ValidationError("exclude_comids must be an array");
            for (const auto& c : v) {
                const auto id = detail::integer_property(c);
                if (!id || *id <= 0) throw ValidationError("invalid COMID in exclude_comids");
                cfg.exclude_comids.emplace_back(static_cast<std::uint64_t>(*id));
            }
        } else if (key == "grid_step") {
            if (v.is_null()) continue;
            if (!v.is_number() || !(v.get<double>() > 0.0)) throw ValidationError("grid_step must be positive");
            cfg.grid_step = v.get<double>();
        } else if (key == "crs_note") {
            if (!v.is_string()) throw ValidationError("crs_note must be a string");
            cfg.crs_note = v.get<std::string>();
        } else if (key == "units") {
            const auto u = v.is_string() ? v.get<std::string>() : std::string();
            if (u == "meters") cfg.units = LengthUnits::Meters;
            else if (u == "degrees") cfg.units = LengthUnits::Degrees;
            else throw ValidationError("units must be \"meters\" or \"degrees\"");
        } else {
            throw ValidationError("unknown config key '" + key + "'");
        }
    }
    return cfg;
}

} // namespace hydrograph
