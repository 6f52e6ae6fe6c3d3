#pragma once

// HUC12-respecting node aggregation by fixpoint sweeps over the edge list, and
// the pairwise waterbody connectivity check between two graphs.

#include "hydrograph/csv.hpp"
#include "hydrograph/graph.hpp"
#include "hydrograph/parallel.hpp"
#include "hydrograph/types.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace hydrograph {

struct MergeContext {
    std::vector<FlowEdge> edges;
    KindMap kind;   // absent entries are River
    HucMap huc12;   // absent entries are never merged
    std::map<Comid, Comid> merged_into;
    std::set<Comid> nodes;  // current node set, including isolated survivors
    std::size_t sweeps = 0;
};

inline MergeContext make_merge_context(std::vector<FlowEdge> edges, KindMap kind, HucMap huc12) {
    MergeContext ctx{std::move(edges), std::move(kind), std::move(huc12), {}, {}, 0};
    for (const auto& e : ctx.edges) {
        ctx.nodes.insert(e.from);
        ctx.nodes.insert(e.to);
    }
    return ctx;
}

/// Follows merge records to the node that currently stands for `c`.
inline Comid survivor(const std::map<Comid, Comid>& merged_into, Comid c) {
    for (auto it = merged_into.find(c); it != merged_into.end(); it = merged_into.find(c)) c = it->second;
    return c;
}

inline HydroGraph to_graph(const MergeContext& ctx) {
    const std::vector<Comid> nodes(ctx.nodes.begin(), ctx.nodes.end());
    return build_graph(ctx.edges, ctx.kind, ctx.huc12, nodes);
}

inline std::size_t waterbody_count(const MergeContext& ctx) {
    std::size_t n = 0;
    for (Comid c : ctx.nodes)
        if (auto it = ctx.kind.find(c); it != ctx.kind.end() && it->second == NodeKind::Waterbody) ++n;
    return n;
}

namespace detail {

class MergeState {
public:
    explicit MergeState(MergeContext& ctx) : ctx_(ctx) {
        for (Comid c : ctx_.nodes) {
            out_[c];
            in_[c];
        }
        for (const auto& e : ctx_.edges) {
            ctx_.nodes.insert(e.from);
            ctx_.nodes.insert(e.to);
            if (e.from == e.to) continue;
            out_[e.from].insert(e.to);
            in_[e.to].insert(e.from);
        }
    }

    std::vector<FlowEdge> edges() const {
        std::vector<FlowEdge> v;
        for (const auto& [from, tos] : out_)
            for (Comid to : tos) v.push_back({from, to});
        return v;
    }

    NodeKind kind(Comid c) const {
        auto it = ctx_.kind.find(c);
        return it == ctx_.kind.end() ? NodeKind::River : it->second;
    }

    bool same_huc(Comid a, Comid b) const {
        auto ia = ctx_.huc12.find(a), ib = ctx_.huc12.find(b);
        return ia != ctx_.huc12.end() && ib != ctx_.huc12.end() && ia->second == ib->second;
    }

    const std::set<Comid>& up(Comid c) const { return in_.at(c); }
    const std::set<Comid>& down(Comid c) const { return out_.at(c); }

    static bool only(const std::set<Comid>& s, Comid c) { return s.size() == 1 && *s.begin() == c; }

    /// Decision tree for one edge; returns true when a merge happened.
    bool apply(Comid f, Comid t) {
        const NodeKind kf = kind(f), kt = kind(t);
        if (kf == NodeKind::PointSource || kt == NodeKind::PointSource) return false;
        if (kf == NodeKind::Waterbody && kt == NodeKind::Waterbody) return false;

        if (kf == NodeKind::Waterbody) {  // waterbody -> river
            if (only(up(t), f) && same_huc(f, t)) return merge(t, f);
            return false;
        }
        if (kt == NodeKind::Waterbody) {  // river -> waterbody
            if (only(down(f), t) && same_huc(f, t)) return merge(f, t);
            return false;
        }

        // river -> river
        const auto& ups = up(t);
        if (ups.size() > 1) {
            // Every upstream node of t, f included, must drain only into t.
            for (Comid u : ups) {
                if (!only(down(u), t)) return false;
                if (kind(u) != NodeKind::River) return false;
                if (!same_huc(u, t)) return false;
            }
            return merge(f, t);
        }
        if (same_huc(f, t)) return merge(f, t);
        return false;
    }

private:
    bool merge(Comid gone, Comid keep) {
        for (Comid p : in_[gone]) {
            out_[p].erase(gone);
            if (p != keep) {
                out_[p].insert(keep);
                in_[keep].insert(p);
            }
        }
        for (Comid s : out_[gone]) {
            in_[s].erase(gone);
            if (s != keep) {
                in_[s].insert(keep);
                out_[keep].insert(s);
            }
        }
        in_[keep].erase(gone);
        out_[keep].erase(gone);
        in_.erase(gone);
        out_.erase(gone);
        ctx_.nodes.erase(gone);
        ctx_.merged_into[gone] = keep;
        return true;
    }

    MergeContext& ctx_;
    std::map<Comid, std::set<Comid>> out_;
    std::map<Comid, std::set<Comid>> in_;
};

} // namespace detail

/// Repeats sweeps over the (from, to)-sorted edge list until one changes
/// nothing. Each edge is resolved to the nodes currently standing for its
/// endpoints, and neighbourhoods are read from the partially merged graph.
inline MergeContext aggregate(MergeContext ctx) {
    detail::MergeState state(ctx);
    ctx.sweeps = 0;
    while (true) {
        ++ctx.sweeps;
        bool changed = false;
        for (const auto& e : state.edges()) {
            const Comid f = survivor(ctx.merged_into, e.from);
            const Comid t = survivor(ctx.merged_into, e.to);
            if (f == t) continue;
            changed |= state.apply(f, t);
        }
        if (!changed) break;
    }
    ctx.edges = state.edges();
    for (auto& [gone, keep] : ctx.merged_into) keep = survivor(ctx.merged_into, keep);
    return ctx;
}

inline std::string serialize_merges(const std::map<Comid, Comid>& merged_into) {
    std::string out = "MERGED_COMID,SURVIVOR_COMID\n";
    for (const auto& [gone, keep] : merged_into)
        out += std::to_string(gone.value) + "," + std::to_string(keep.value) + "\n";
    return out;
}

inline std::map<Comid, Comid> parse_merges(std::string_view text) {
    const csv::Table t = csv::parse(text);
    const auto a = t.require("MERGED_COMID");
    const auto b = t.require("SURVIVOR_COMID");
    std::map<Comid, Comid> m;
    for (const auto& row : t.rows) m[csv::comid_cell(row, a, "MERGED_COMID")] = csv::comid_cell(row, b, "SURVIVOR_COMID");
    return m;
}

// ---------------------------------------------------------------------------
// Connectivity verification

struct ConnectivityMismatch {
    Comid from;
    Comid to;
    bool original = false;
    bool aggregated = false;

    friend bool operator==(const ConnectivityMismatch&, const ConnectivityMismatch&) = default;
};

struct ConnectivityReport {
    std::size_t checked_pairs = 0;
    std::vector<ConnectivityMismatch> mismatches;

    nlohmann::json to_json() const {
        nlohmann::json m = nlohmann::json::array();
        for (const auto& x : mismatches)
            m.push_back({{"from", x.from.value}, {"to", x.to.value}, {"original", x.original},
                         {"aggregated", x.aggregated}});
        return {{"checked_pairs", checked_pairs}, {"mismatches", m}};
    }
};

/// For every ordered pair of waterbodies (u, v), including u == v, compares
/// path existence in both graphs. One BFS per source waterbody per graph.
inline ConnectivityReport verify_connectivity(const HydroGraph& original, const HydroGraph& aggregated,
                                              const std::map<Comid, Comid>& merged_into = {}) {
    std::vector<Comid> wbs, wbs_agg;
    for (const auto& [c, info] : original.nodes())
        if (info.kind == NodeKind::Waterbody) wbs.push_back(c);
    for (const auto& [c, info] : aggregated.nodes())
        if (info.kind == NodeKind::Waterbody) wbs_agg.push_back(c);
    std::vector<Comid> mapped;
    for (Comid c : wbs) mapped.push_back(survivor(merged_into, c));
    std::sort(mapped.begin(), mapped.end());
    if (mapped != wbs_agg) throw ValidationError("waterbody sets differ between original and aggregated graphs");

    std::vector<std::vector<ConnectivityMismatch>> per_source(wbs.size());
    parallel_for(
        wbs.size(),
        [&](std::size_t i) {
            const Comid u = wbs[i];
            const Comid su = survivor(merged_into, u);
            auto ro = reachable_from(original, u, Direction::Downstream);
            auto ra = reachable_from(aggregated, su, Direction::Downstream);
            ro.insert(u);
            ra.insert(su);
            for (Comid v : wbs) {
                const bool a = ro.contains(v);
                const bool b = ra.contains(survivor(merged_into, v));
                if (a != b) per_source[i].push_back({u, v, a, b});
            }
        },
        8);

    ConnectivityReport rep;
    rep.checked_pairs = wbs.size() * wbs.size();
    for (auto& v : per_source) rep.mismatches.insert(rep.mismatches.end(), v.begin(), v.end());
    return rep;
}

} // namespace hydrograph
