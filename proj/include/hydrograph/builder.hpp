#pragma once

// Turns parsed features and a flow table into the waterbody-aware graph:
// river/waterbody intersection lists, two-pass waterbody insertion, HUC12
// tagging, point-source attachment and external lake matching.

#include "hydrograph/csv.hpp"
#include "hydrograph/geo.hpp"
#include "hydrograph/graph.hpp"
#include "hydrograph/ingest.hpp"
#include "hydrograph/parallel.hpp"
#include "hydrograph/types.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace hydrograph {

struct IntersectionIndex {
    std::map<Comid, std::vector<Comid>> river_to_lakes;
    std::map<Comid, std::vector<Comid>> lake_to_rivers;
};

/// Every river tested against every lake (bounding-box prefiltered).
/// Every input COMID gets an entry, possibly empty; lists are ascending.
inline IntersectionIndex compute_intersections(const std::vector<FeatureRecord>& rivers,
                                               const std::vector<FeatureRecord>& lakes) {
    std::vector<geo::BBox> lake_boxes;
    lake_boxes.reserve(lakes.size());
    for (const auto& l : lakes) lake_boxes.push_back(geo::bbox(l.geometry));

    std::vector<std::vector<Comid>> hits(rivers.size());
    parallel_for(rivers.size(), [&](std::size_t i) {
        const auto* line = std::get_if<geo::PolyLine>(&rivers[i].geometry);
        if (!line) throw ValidationError("river " + std::to_string(rivers[i].comid.value) + " is not a polyline");
        const geo::BBox rb = geo::bbox(*line);
        for (std::size_t j = 0; j < lakes.size(); ++j) {
            if (!rb.intersects(lake_boxes[j])) continue;
            const bool hit = std::visit(
                [&](const auto& g) {
                    if constexpr (geo::Areal<std::decay_t<decltype(g)>>)
                        return geo::intersects(*line, g);
                    else
                        return false;
                },
                lakes[j].geometry);
            if (hit) hits[i].push_back(lakes[j].comid);
        }
    });

    IntersectionIndex idx;
    for (const auto& l : lakes) idx.lake_to_rivers[l.comid];
    for (std::size_t i = 0; i < rivers.size(); ++i) {
        auto& list = idx.river_to_lakes[rivers[i].comid];
        for (Comid lake : hits[i]) {
            list.push_back(lake);
            idx.lake_to_rivers[lake].push_back(rivers[i].comid);
        }
    }
    for (auto* m : {&idx.river_to_lakes, &idx.lake_to_rivers})
        for (auto& [c, v] : *m) {
            std::sort(v.begin(), v.end());
            v.erase(std::unique(v.begin(), v.end()), v.end());
        }
    return idx;
}

/// Copies the index lists into the records' `intersecting` fields.
inline void annotate_intersections(std::vector<FeatureRecord>& records, const IntersectionIndex& idx) {
    for (auto& r : records) {
        const auto& m = r.kind == FeatureKind::RiverSegment ? idx.river_to_lakes : idx.lake_to_rivers;
        if (auto it = m.find(r.comid); it != m.end()) r.intersecting = it->second;
    }
}

struct InsertionStats {
    std::size_t single_lake_rivers = 0;  // rivers replaced by exactly one waterbody
    std::size_t multi_lake_rivers = 0;   // rivers replaced by two or more
};

/// Pass 1 substitutes every single-lake river by its lake. Pass 2 expands every
/// multi-lake river into all of its lakes, with no edges among those lakes.
/// The result has no self-loops or duplicates and is sorted by (from, to).
inline std::vector<FlowEdge> insert_waterbodies(const std::vector<FlowEdge>& edges, const IntersectionIndex& index,
                                                InsertionStats* stats = nullptr) {
    InsertionStats s;
    std::map<Comid, Comid> single;
    std::map<Comid, const std::vector<Comid>*> multi;
    for (const auto& [river, lakes] : index.river_to_lakes) {
        if (lakes.size() == 1) {
            single.emplace(river, lakes.front());
            ++s.single_lake_rivers;
        } else if (lakes.size() > 1) {
            multi.emplace(river, &lakes);
            ++s.multi_lake_rivers;
        }
    }

    std::vector<FlowEdge> pass1;
    pass1.reserve(edges.size());
    auto subst = [&](Comid c) {
        auto it = single.find(c);
        return it == single.end() ? c : it->second;
    };
    for (const auto& e : edges) pass1.push_back({subst(e.from), subst(e.to)});

    std::set<FlowEdge> out;
    auto expand = [&](Comid c) -> std::vector<Comid> {
        auto it = multi.find(c);
        return it == multi.end() ? std::vector<Comid>{c} : *it->second;
    };
    for (const auto& e : pass1)
        for (Comid from : expand(e.from))
            for (Comid to : expand(e.to))
                if (from != to) out.insert({from, to});

    if (stats) *stats = s;
    return {out.begin(), out.end()};
}

// ---------------------------------------------------------------------------
// HUC12 assignment

/// First watershed (input order) whose polygon contains `p`, boundary inclusive.
inline std::optional<HucCode> locate_huc(const geo::Point& p, const std::vector<FeatureRecord>& watersheds,
                                         const std::vector<geo::BBox>* boxes = nullptr) {
    for (std::size_t i = 0; i < watersheds.size(); ++i) {
        const auto& w = watersheds[i];
        if (boxes ? !(*boxes)[i].contains(p) : !geo::bbox(w.geometry).contains(p)) continue;
        if (geo::point_in_polygon(p, w.geometry)) return w.huc12;
    }
    return std::nullopt;
}

struct HucAssignment {
    HucMap hucs;
    std::size_t misses = 0;
    std::vector<Comid> missed;
};

inline HucAssignment assign_hucs(const std::vector<FeatureRecord>& features,
                                 const std::vector<FeatureRecord>& watersheds) {
    for (const auto& w : watersheds)
        if (!w.huc12) throw ValidationError("watershed without HUC12");
    std::vector<geo::BBox> boxes;
    boxes.reserve(watersheds.size());
    for (const auto& w : watersheds) boxes.push_back(geo::bbox(w.geometry));

    std::vector<std::optional<HucCode>> found(features.size());
    parallel_for(features.size(), [&](std::size_t i) {
        found[i] = locate_huc(geo::centroid(features[i].geometry), watersheds, &boxes);
    });

    HucAssignment out;
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (found[i]) {
            out.hucs.emplace(features[i].comid, *found[i]);
        } else {
            ++out.misses;
            out.missed.push_back(features[i].comid);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Point sources

struct PointSourceRecord {
    Comid source_id;
    std::string label;
    geo::Point location;
    HucCode huc12;
};

struct PointSourceInput {
    std::vector<PointSourceRecord> located;
    std::vector<Comid> unlocated;  // no watershed contains the point
};

/// CSV with columns SOURCE_ID (optional), LABEL, X, Y. Missing ids are
/// assigned from the reserved synthetic range in row order.
inline PointSourceInput parse_point_sources(std::string_view text, const std::vector<FeatureRecord>& watersheds) {
    const csv::Table t = csv::parse(text);
    const auto id_col = t.find("SOURCE_ID");
    const auto label_col = t.require("LABEL");
    const auto x_col = t.require("X");
    const auto y_col = t.require("Y");

    PointSourceInput in;
    std::set<Comid> used;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        Comid id{kPointSourceIdBase + r};
        if (id_col && *id_col < row.cells.size() && !row.cells[*id_col].empty()) {
            id = csv::comid_cell(row, *id_col, "SOURCE_ID");
            if (id.value < kPointSourceIdBase)
                throw ValidationError("SOURCE_ID below reserved range at line " + std::to_string(row.line));
        }
        if (!used.insert(id).second)
            throw ValidationError("duplicate SOURCE_ID at line " + std::to_string(row.line));
        const geo::Point p{csv::real_cell(row, x_col, "X"), csv::real_cell(row, y_col, "Y")};
        geo::validate(p);
        if (auto huc = locate_huc(p, watersheds)) {
            in.located.push_back({id, csv::cell(row, label_col, "LABEL"), p, *huc});
        } else {
            in.unlocated.push_back(id);
        }
    }
    return in;
}

struct AttachResult {
    HydroGraph graph;
    std::vector<FlowEdge> attached;  // source -> nearest node
    std::vector<Comid> skipped;
};

/// Adds each source as a PointSource node with one edge to the nearest
/// same-HUC12 node (centroid distance, ties to the lower COMID).
inline AttachResult attach_point_sources(const HydroGraph& g, const std::vector<PointSourceRecord>& sources,
                                         const std::map<Comid, geo::Point>& node_centroids) {
    std::map<HucCode, std::vector<std::pair<Comid, geo::Point>>> by_huc;
    for (const auto& [c, info] : g.nodes()) {
        if (!info.huc12 || info.kind == NodeKind::PointSource) continue;
        if (auto it = node_centroids.find(c); it != node_centroids.end())
            by_huc[*info.huc12].emplace_back(c, it->second);
    }

    AttachResult res;
    KindMap kinds = g.kinds();
    HucMap hucs = g.hucs();
    std::vector<FlowEdge> edges = g.edges();
    std::vector<Comid> nodes;
    for (const auto& [c, info] : g.nodes()) nodes.push_back(c);

    for (const auto& s : sources) {
        if (kinds.contains(s.source_id))
            throw ValidationError("point source id " + std::to_string(s.source_id.value) + " already in graph");
        auto it = by_huc.find(s.huc12);
        if (it == by_huc.end()) {
            res.skipped.push_back(s.source_id);
            continue;
        }
        // Candidates are in ascending COMID order, so strict < keeps the lowest on ties.
        Comid best;
        double best_d = std::numeric_limits<double>::infinity();
        for (const auto& [c, p] : it->second) {
            const double d = geo::squared_distance(p, s.location);
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        kinds[s.source_id] = NodeKind::PointSource;
        hucs[s.source_id] = s.huc12;
        edges.push_back({s.source_id, best});
        res.attached.push_back({s.source_id, best});
    }
    res.graph = build_graph(edges, kinds, hucs, nodes);
    return res;
}

// ---------------------------------------------------------------------------
// External lake matching

/// Maps external lake ids (carried in the records' comid field, e.g. WBIC) to
/// NHD waterbody COMIDs: first by centroid containment, then by a unique
/// polygon overlap. Lakes overlapping zero or several NHD waterbodies stay unmatched.
inline std::map<std::uint64_t, Comid> match_external_lakes(const std::vector<FeatureRecord>& external,
                                                           const std::vector<FeatureRecord>& lakes) {
    std::vector<geo::BBox> boxes;
    boxes.reserve(lakes.size());
    for (const auto& l : lakes) boxes.push_back(geo::bbox(l.geometry));

    auto overlaps = [](const geo::Geometry& a, const geo::Geometry& b) {
        return std::visit(
            [](const auto& x, const auto& y) {
                if constexpr (geo::Areal<std::decay_t<decltype(x)>> && geo::Areal<std::decay_t<decltype(y)>>)
                    return geo::intersects(x, y);
                else
                    return false;
            },
            a, b);
    };

    std::map<std::uint64_t, Comid> out;
    for (const auto& ext : external) {
        const geo::Point c = geo::centroid(ext.geometry);
        std::optional<Comid> match;
        for (std::size_t j = 0; j < lakes.size() && !match; ++j)
            if (boxes[j].contains(c) && geo::point_in_polygon(c, lakes[j].geometry)) match = lakes[j].comid;
        if (!match) {
            const geo::BBox eb = geo::bbox(ext.geometry);
            std::vector<Comid> hits;
            for (std::size_t j = 0; j < lakes.size() && hits.size() < 2; ++j)
                if (eb.intersects(boxes[j]) && overlaps(ext.geometry, lakes[j].geometry))
                    hits.push_back(lakes[j].comid);
            if (hits.size() == 1) match = hits.front();
        }
        if (match) out.emplace(ext.comid.value, *match);
    }
    return out;
}

inline std::string serialize_lake_matches(const std::map<std::uint64_t, Comid>& matches) {
    std::string out = "WBIC,COMID\n";
    for (const auto& [w, c] : matches) out += std::to_string(w) + "," + std::to_string(c.value) + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Full build pipeline

struct BuildReport {
    std::size_t rivers_parsed = 0;
    std::size_t waterbodies_parsed = 0;
    std::size_t watersheds_parsed = 0;
    std::size_t flow_edges = 0;
    std::size_t marshes_dropped = 0;
    std::size_t exclusions_applied = 0;
    std::size_t huc_misses = 0;
    std::size_t single_lake_substitutions = 0;
    std::size_t multi_lake_substitutions = 0;
    std::size_t point_sources_attached = 0;
    std::size_t point_sources_skipped = 0;
    std::size_t nodes = 0;
    std::size_t edges = 0;
    std::size_t waterbody_nodes = 0;

    nlohmann::json to_json() const {
        return {{"rivers_parsed", rivers_parsed},
                {"waterbodies_parsed", waterbodies_parsed},
                {"watersheds_parsed", watersheds_parsed},
                {"flow_edges", flow_edges},
                {"marshes_dropped", marshes_dropped},
                {"exclusions_applied", exclusions_applied},
                {"huc_misses", huc_misses},
                {"single_lake_substitutions", single_lake_substitutions},
                {"multi_lake_substitutions", multi_lake_substitutions},
                {"point_sources_attached", point_sources_attached},
                {"point_sources_skipped", point_sources_skipped},
                {"nodes", nodes},
                {"edges", edges},
                {"waterbody_nodes", waterbody_nodes}};
    }

    std::string to_text() const {
        std::ostringstream os;
        os << "features parsed:        " << rivers_parsed << " rivers, " << waterbodies_parsed << " waterbodies, "
           << watersheds_parsed << " watersheds\n"
           << "flow edges (cleaned):   " << flow_edges << "\n"
           << "marshes dropped:        " << marshes_dropped << "\n"
           << "exclusions applied:     " << exclusions_applied << "\n"
           << "HUC12 misses:           " << huc_misses << "\n"
           << "single-lake rivers:     " << single_lake_substitutions << "\n"
           << "multi-lake rivers:      " << multi_lake_substitutions << "\n"
           << "point sources:          " << point_sources_attached << " attached, " << point_sources_skipped
           << " skipped\n"
           << "graph:                  " << nodes << " nodes (" << waterbody_nodes << " waterbodies), " << edges
           << " edges\n";
        return os.str();
    }
};

struct BuildInputs {
    std::vector<FeatureRecord> rivers;
    std::vector<FeatureRecord> waterbodies;
    std::vector<FeatureRecord> watersheds;
    std::vector<FlowEdge> flow;
    std::vector<PointSourceRecord> sources;
    std::size_t unlocated_sources = 0;
};

struct BuildResult {
    std::vector<FlowEdge> edges;
    KindMap kinds;
    HucMap hucs;
    HydroGraph graph;
    std::vector<FeatureRecord> node_features;  // geometry for every river/waterbody node
    BuildReport report;
};

inline BuildResult build_network(BuildInputs in, const Config& cfg) {
    BuildResult out;
    auto& rep = out.report;
    rep.rivers_parsed = in.rivers.size();
    rep.waterbodies_parsed = in.waterbodies.size();
    rep.watersheds_parsed = in.watersheds.size();
    rep.flow_edges = in.flow.size();

    FilterStats fs;
    auto lakes = filter_waterbodies(in.waterbodies, cfg.exclude_comids, &fs);
    rep.marshes_dropped = fs.marshes_dropped;
    rep.exclusions_applied = fs.exclusions_applied;

    const IntersectionIndex idx = compute_intersections(in.rivers, lakes);
    annotate_intersections(in.rivers, idx);
    annotate_intersections(lakes, idx);
    InsertionStats is;
    out.edges = insert_waterbodies(in.flow, idx, &is);
    rep.single_lake_substitutions = is.single_lake_rivers;
    rep.multi_lake_substitutions = is.multi_lake_rivers;

    std::vector<FeatureRecord> all = in.rivers;
    all.insert(all.end(), lakes.begin(), lakes.end());
    HucAssignment ha = assign_hucs(all, in.watersheds);
    rep.huc_misses = ha.misses;

    std::set<Comid> endpoints;
    for (const auto& e : out.edges) {
        endpoints.insert(e.from);
        endpoints.insert(e.to);
    }
    for (const auto& l : lakes)
        if (endpoints.contains(l.comid)) out.kinds[l.comid] = NodeKind::Waterbody;
    for (Comid c : endpoints)
        if (!out.kinds.contains(c)) out.kinds[c] = NodeKind::River;
    for (const auto& [c, h] : ha.hucs)
        if (endpoints.contains(c)) out.hucs.emplace(c, h);
    for (auto& f : all)
        if (endpoints.contains(f.comid)) {
            if (auto it = out.hucs.find(f.comid); it != out.hucs.end()) f.huc12 = it->second;
            out.node_features.push_back(std::move(f));
        }
    std::sort(out.node_features.begin(), out.node_features.end(),
              [](const FeatureRecord& a, const FeatureRecord& b) { return a.comid < b.comid; });

    out.graph = build_graph(out.edges, out.kinds, out.hucs);
    rep.point_sources_skipped = in.unlocated_sources;
    if (!in.sources.empty()) {
        std::map<Comid, geo::Point> centroids;
        for (const auto& f : out.node_features) centroids.emplace(f.comid, geo::centroid(f.geometry));
        AttachResult ar = attach_point_sources(out.graph, in.sources, centroids);
        rep.point_sources_attached = ar.attached.size();
        rep.point_sources_skipped += ar.skipped.size();
        out.graph = std::move(ar.graph);
        out.edges = out.graph.edges();
        out.kinds = out.graph.kinds();
        out.hucs = out.graph.hucs();
        for (const auto& s : in.sources)
            if (out.graph.contains(s.source_id))
                out.node_features.push_back(
                    {s.source_id, FeatureKind::PointSource, s.location, s.label, s.huc12, {}});
    }
    rep.nodes = out.graph.node_count();
    rep.edges = out.graph.edge_count();
    for (const auto& [c, info] : out.graph.nodes())
        if (info.kind == NodeKind::Waterbody) ++rep.waterbody_nodes;
    return out;
}

} // namespace hydrograph
