#pragma once

// Read-only query facade over a loaded workspace snapshot. Handlers are plain
// functions returning (status, JSON body) so the CLI and the HTTP server share
// one serialisation path.
//
// Workspace directory layout (only edges.csv is required):
//   edges.csv          FROMCOMID,TOCOMID of the built graph
//   kinds.csv          COMID,KIND
//   hucs.csv           COMID,HUC12
//   nodes.geojson      node geometries (COMID, KIND properties)
//   watersheds.geojson HUC12 polygons
//   ag.geojson, urban.geojson   land cover polygons
//   edges_agg.csv, merges.csv   aggregated graph and MERGED_COMID,SURVIVOR_COMID
//   config.json        see parse_config

#include "hydrograph/aggregate.hpp"
#include "hydrograph/analysis.hpp"
#include "hydrograph/builder.hpp"
#include "hydrograph/geojson.hpp"
#include "hydrograph/graph.hpp"
#include "hydrograph/ingest.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

namespace hydrograph::service {

inline constexpr std::size_t kBboxNodeCap = 20000;

struct Snapshot {
    std::uint64_t id = 0;
    HydroGraph graph;
    std::optional<HydroGraph> aggregated;
    std::map<Comid, Comid> merge_map;
    std::map<Comid, geo::Geometry> geoms;
    std::map<Comid, geo::Point> centroids;
    std::vector<FeatureRecord> watersheds;
    std::vector<geo::Geometry> ag_cover;
    std::vector<geo::Geometry> urban_cover;
    Config config;

    mutable std::mutex cache_mutex;
    mutable std::map<Comid, nlohmann::json> summary_cache;

    /// Graph that queries run against: the aggregated one when present.
    const HydroGraph& active() const { return aggregated ? *aggregated : graph; }

    /// Original COMID to the active node standing for it, if any.
    std::optional<Comid> resolve(Comid c) const {
        const Comid s = aggregated ? survivor(merge_map, c) : c;
        if (active().contains(s)) return s;
        return std::nullopt;
    }

    LandContext land() const {
        return {&watersheds, &ag_cover, &urban_cover, config.grid_step, config.units};
    }
};

namespace detail {

inline std::optional<std::string> read_optional(const std::filesystem::path& p) {
    if (!std::filesystem::exists(p)) return std::nullopt;
    return read_file(p.string());
}

inline std::vector<geo::Geometry> geometries(const std::vector<FeatureRecord>& recs) {
    std::vector<geo::Geometry> out;
    out.reserve(recs.size());
    for (const auto& r : recs) out.push_back(r.geometry);
    return out;
}

} // namespace detail

inline std::shared_ptr<const Snapshot> load_workspace(const std::string& dir, std::uint64_t id = 1) {
    namespace fs = std::filesystem;
    const fs::path root(dir);
    if (!fs::is_directory(root)) throw IoError("workspace is not a directory: " + dir);
    auto s = std::make_shared<Snapshot>();
    s->id = id;

    KindMap kinds;
    HucMap hucs;
    if (auto t = detail::read_optional(root / "kinds.csv")) kinds = parse_kinds(*t);
    if (auto t = detail::read_optional(root / "hucs.csv")) hucs = parse_hucs(*t);
    if (auto t = detail::read_optional(root / "config.json")) s->config = parse_config(*t);

    const auto edges = parse_flow_table(read_file((root / "edges.csv").string()));
    std::vector<Comid> wbs;
    for (const auto& [c, k] : kinds)
        if (k == NodeKind::Waterbody) wbs.push_back(c);
    s->graph = build_graph(edges, kinds, hucs);

    if (auto t = detail::read_optional(root / "edges_agg.csv")) {
        const auto agg = parse_flow_table(*t);
        if (auto m = detail::read_optional(root / "merges.csv")) s->merge_map = parse_merges(*m);
        // Waterbodies left isolated by aggregation still exist as nodes.
        std::vector<Comid> keep;
        for (Comid c : wbs)
            if (s->graph.contains(c)) keep.push_back(c);
        s->aggregated = build_graph(agg, kinds, hucs, keep);
    }

    if (auto t = detail::read_optional(root / "nodes.geojson"))
        for (auto& r : parse_node_features(*t)) {
            s->centroids.emplace(r.comid, geo::centroid(r.geometry));
            s->geoms.emplace(r.comid, std::move(r.geometry));
        }
    if (auto t = detail::read_optional(root / "watersheds.geojson"))
        s->watersheds = parse_features(*t, FeatureKind::Watershed);
    if (auto t = detail::read_optional(root / "ag.geojson"))
        s->ag_cover = detail::geometries(parse_features(*t, FeatureKind::LandCover));
    if (auto t = detail::read_optional(root / "urban.geojson"))
        s->urban_cover = detail::geometries(parse_features(*t, FeatureKind::LandCover));
    return s;
}

// ---------------------------------------------------------------------------
// Handlers

struct Response {
    int status = 200;
    nlohmann::json body;

    std::string text() const { return body.dump(2) + "\n"; }
};

inline Response error(int status, const std::string& message) { return {status, {{"error", message}}}; }

/// Upstream/downstream query payload; shared verbatim by CLI and HTTP.
inline nlohmann::json query_json(const HydroGraph& g, Comid node, Direction dir) {
    const auto sub = directed_subgraph(g, node, dir);
    auto nodes = nlohmann::json::array();
    auto wbs = nlohmann::json::array();
    for (Comid c : sub.members) {
        nodes.push_back(c.value);
        if (g.kind(c) == NodeKind::Waterbody) wbs.push_back(c.value);
    }
    auto edges = nlohmann::json::array();
    for (const auto& e : sub.graph.edges()) edges.push_back({{"from", e.from.value}, {"to", e.to.value}});
    return {{"node", node.value},
            {"direction", dir == Direction::Upstream ? "upstream" : "downstream"},
            {"nodes", nodes},
            {"waterbodies", wbs},
            {"edges", edges}};
}

inline Response get_reach(const Snapshot& s, Comid c, Direction dir) {
    const auto r = s.resolve(c);
    if (!r) return error(404, "unknown comid " + std::to_string(c.value));
    return {200, query_json(s.active(), *r, dir)};
}

inline Response get_node(const Snapshot& s, Comid c) {
    const auto r = s.resolve(c);
    if (!r) return error(404, "unknown comid " + std::to_string(c.value));
    const auto& g = s.active();
    const auto& info = g.node(*r);
    nlohmann::json j = {{"comid", c.value},
                        {"resolved", r->value},
                        {"kind", std::string(to_string(info.kind))},
                        {"huc12", info.huc12 ? nlohmann::json(info.huc12->str()) : nlohmann::json(nullptr)},
                        {"upstream_count", reachable_from(g, *r, Direction::Upstream).size()},
                        {"downstream_count", reachable_from(g, *r, Direction::Downstream).size()}};
    if (auto it = s.geoms.find(*r); it != s.geoms.end()) j["geometry"] = geometry_to_json(it->second);
    return {200, j};
}

inline Response get_summary(const Snapshot& s, Comid c) {
    const auto r = s.resolve(c);
    if (!r) return error(404, "unknown comid " + std::to_string(c.value));
    {
        std::lock_guard lock(s.cache_mutex);
        if (auto it = s.summary_cache.find(*r); it != s.summary_cache.end()) return {200, it->second};
    }
    try {
        auto j = upstream_summary(s.active(), *r, s.geoms, s.land()).to_json();
        std::lock_guard lock(s.cache_mutex);
        s.summary_cache.emplace(*r, j);
        return {200, j};
    } catch (const ValidationError& e) {
        return error(422, e.what());
    }
}

/// Nodes of the active graph whose geometry box meets the query box.
inline Response get_nodes_in_bbox(const Snapshot& s, const geo::BBox& box, std::size_t cap = kBboxNodeCap) {
    auto feats = nlohmann::json::array();
    bool truncated = false;
    const auto& g = s.active();
    for (const auto& [c, info] : g.nodes()) {
        auto it = s.geoms.find(c);
        if (it == s.geoms.end() || !geo::bbox(it->second).intersects(box)) continue;
        if (feats.size() >= cap) {
            truncated = true;
            break;
        }
        feats.push_back(feature_json(c, to_string(info.kind), it->second, info.huc12));
    }
    return {200, {{"type", "FeatureCollection"}, {"features", feats}, {"truncated", truncated}}};
}

inline std::optional<geo::BBox> parse_bbox(std::string_view text) {
    const auto parts = csv::split(text);
    if (parts.size() != 4) return std::nullopt;
    double v[4];
    for (int i = 0; i < 4; ++i) {
        const auto& p = parts[static_cast<std::size_t>(i)];
        auto [ptr, ec] = std::from_chars(p.data(), p.data() + p.size(), v[i]);
        if (ec != std::errc{} || ptr != p.data() + p.size() || !std::isfinite(v[i])) return std::nullopt;
    }
    if (v[0] > v[2] || v[1] > v[3]) return std::nullopt;
    return geo::BBox{v[0], v[1], v[2], v[3]};
}

/// Ephemeral point-source overlay: attach, then report everything downstream.
/// Nothing is written back into the snapshot.
inline Response post_whatif(const Snapshot& s, double x, double y, const std::string& label) {
    const geo::Point p{x, y};
    if (!std::isfinite(x) || !std::isfinite(y)) return error(400, "x and y must be finite numbers");
    const auto huc = locate_huc(p, s.watersheds);
    if (!huc) return error(422, "no HUC12 contains this point");

    const auto& g = s.active();
    std::uint64_t next = kPointSourceIdBase;
    if (!g.nodes().empty()) next = std::max(next, g.nodes().rbegin()->first.value + 1);
    const PointSourceRecord src{Comid{next}, label, p, *huc};
    const auto attached = attach_point_sources(g, {src}, s.centroids);
    if (attached.attached.empty()) return error(422, "no graph node in HUC12 " + huc->str());

    const auto sub = downstream_graph(attached.graph, src.source_id);
    auto nodes = nlohmann::json::array();
    auto wbs = nlohmann::json::array();
    for (Comid c : sub.members) {
        nodes.push_back(c.value);
        if (attached.graph.kind(c) == NodeKind::Waterbody) wbs.push_back(c.value);
    }
    auto geoms = s.geoms;
    geoms.emplace(src.source_id, p);
    return {200,
            {{"source_id", src.source_id.value},
             {"label", label},
             {"source_huc12", huc->str()},
             {"attached_node", attached.attached.front().to.value},
             {"downstream_nodes", nodes},
             {"downstream_waterbodies", wbs},
             {"subgraph", subgraph_geojson(sub.graph, geoms)}}};
}

// ---------------------------------------------------------------------------

/// Holds the current snapshot; readers take a reference-counted copy, reload
/// swaps the pointer atomically.
class Service {
public:
    explicit Service(std::string workspace) : dir_(std::move(workspace)) { reload(); }

    std::shared_ptr<const Snapshot> snapshot() const { return std::atomic_load(&current_); }

    void reload() {
        const std::uint64_t id = next_id_.fetch_add(1);
        std::atomic_store(&current_, load_workspace(dir_, id));
    }

    const std::string& workspace() const { return dir_; }

private:
    std::string dir_;
    std::atomic<std::uint64_t> next_id_{1};
    std::shared_ptr<const Snapshot> current_;
};

} // namespace hydrograph::service
