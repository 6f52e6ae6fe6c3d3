#pragma once

// Immutable directed graph snapshot over COMIDs with reachability queries.
// Iteration order is ascending COMID everywhere.

#include "hydrograph/csv.hpp"
#include "hydrograph/error.hpp"
#include "hydrograph/types.hpp"

#include <algorithm>
#include <cstddef>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

namespace hydrograph {

enum class Direction { Downstream, Upstream };

struct NodeInfo {
    NodeKind kind = NodeKind::River;
    std::optional<HucCode> huc12;

    friend bool operator==(const NodeInfo&, const NodeInfo&) = default;
};

using KindMap = std::map<Comid, NodeKind>;
using HucMap = std::map<Comid, HucCode>;

class HydroGraph {
public:
    HydroGraph() = default;

    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const { return edge_count_; }

    bool contains(Comid c) const { return nodes_.contains(c); }

    const std::map<Comid, NodeInfo>& nodes() const { return nodes_; }

    const NodeInfo& node(Comid c) const {
        auto it = nodes_.find(c);
        if (it == nodes_.end()) throw ValidationError("unknown node " + std::to_string(c.value));
        return it->second;
    }

    NodeKind kind(Comid c) const { return node(c).kind; }

    /// Sorted immediate neighbours.
    std::span<const Comid> successors(Comid c) const { return neighbours(out_adj_, c); }
    std::span<const Comid> predecessors(Comid c) const { return neighbours(in_adj_, c); }

    std::span<const Comid> neighbours(Comid c, Direction d) const {
        return d == Direction::Downstream ? successors(c) : predecessors(c);
    }

    /// Edges in ascending (from, to) order.
    std::vector<FlowEdge> edges() const {
        std::vector<FlowEdge> out;
        out.reserve(edge_count_);
        for (const auto& [from, tos] : out_adj_)
            for (Comid to : tos) out.push_back({from, to});
        return out;
    }

    KindMap kinds() const {
        KindMap m;
        for (const auto& [c, info] : nodes_) m.emplace(c, info.kind);
        return m;
    }

    HucMap hucs() const {
        HucMap m;
        for (const auto& [c, info] : nodes_)
            if (info.huc12) m.emplace(c, *info.huc12);
        return m;
    }

    /// Same nodes, every edge reversed.
    HydroGraph transposed() const {
        HydroGraph t = *this;
        std::swap(t.out_adj_, t.in_adj_);
        return t;
    }

    friend bool operator==(const HydroGraph&, const HydroGraph&) = default;

private:
    friend HydroGraph build_graph(std::span<const FlowEdge>, const KindMap&, const HucMap&,
                                  std::span<const Comid>);

    static std::span<const Comid> neighbours(const std::map<Comid, std::vector<Comid>>& adj, Comid c) {
        auto it = adj.find(c);
        if (it == adj.end()) return {};
        return it->second;
    }

    std::map<Comid, NodeInfo> nodes_;
    std::map<Comid, std::vector<Comid>> out_adj_;
    std::map<Comid, std::vector<Comid>> in_adj_;
    std::size_t edge_count_ = 0;
};

/// Builds a snapshot from an edge list. Nodes are the edge endpoints plus any
/// `extra_nodes`; kinds default to River. Self-loops and duplicates are dropped.
inline HydroGraph build_graph(std::span<const FlowEdge> edges, const KindMap& kinds = {},
                              const HucMap& hucs = {}, std::span<const Comid> extra_nodes = {}) {
    HydroGraph g;
    auto add_node = [&](Comid c) {
        auto [it, inserted] = g.nodes_.try_emplace(c);
        if (!inserted) return;
        if (auto k = kinds.find(c); k != kinds.end()) it->second.kind = k->second;
        if (auto h = hucs.find(c); h != hucs.end()) it->second.huc12 = h->second;
    };
    for (Comid c : extra_nodes) add_node(c);

    std::set<FlowEdge> unique;
    for (const auto& e : edges) {
        add_node(e.from);
        add_node(e.to);
        if (e.from != e.to) unique.insert(e);
    }
    for (const auto& e : unique) {
        g.out_adj_[e.from].push_back(e.to);
        g.in_adj_[e.to].push_back(e.from);
    }
    for (auto& [c, v] : g.in_adj_) std::sort(v.begin(), v.end());
    g.edge_count_ = unique.size();
    return g;
}

inline HydroGraph build_graph(const std::vector<FlowEdge>& edges, const KindMap& kinds = {},
                              const HucMap& hucs = {}, const std::vector<Comid>& extra_nodes = {}) {
    return build_graph(std::span<const FlowEdge>(edges), kinds, hucs, std::span<const Comid>(extra_nodes));
}

/// Nodes reachable from `src` following `dir`. `src` itself is included only
/// when it lies on a cycle through itself.
inline std::set<Comid> reachable_from(const HydroGraph& g, Comid src, Direction dir) {
    if (!g.contains(src)) throw ValidationError("unknown node " + std::to_string(src.value));
    std::set<Comid> seen;
    std::deque<Comid> queue{src};
    while (!queue.empty()) {
        const Comid c = queue.front();
        queue.pop_front();
        for (Comid n : g.neighbours(c, dir))
            if (seen.insert(n).second) queue.push_back(n);
    }
    return seen;
}

inline bool has_path(const HydroGraph& g, Comid src, Comid dst) {
    if (!g.contains(src)) throw ValidationError("unknown node " + std::to_string(src.value));
    if (!g.contains(dst)) throw ValidationError("unknown node " + std::to_string(dst.value));
    if (src == dst) return true;
    std::unordered_set<Comid> seen{src};
    std::deque<Comid> queue{src};
    while (!queue.empty()) {
        const Comid c = queue.front();
        queue.pop_front();
        for (Comid n : g.successors(c)) {
            if (n == dst) return true;
            if (seen.insert(n).second) queue.push_back(n);
        }
    }
    return false;
}

inline HydroGraph induced_subgraph(const HydroGraph& g, const std::set<Comid>& keep) {
    for (Comid c : keep)
        if (!g.contains(c)) throw ValidationError("unknown node " + std::to_string(c.value));
    std::vector<FlowEdge> edges;
    for (Comid from : keep)
        for (Comid to : g.successors(from))
            if (keep.contains(to)) edges.push_back({from, to});
    const std::vector<Comid> nodes(keep.begin(), keep.end());
    return build_graph(edges, g.kinds(), g.hucs(), nodes);
}

struct DirectedSubgraph {
    Comid root;
    std::set<Comid> members;  // reachable set, root excluded unless on a cycle
    HydroGraph graph;         // induced on members plus root
};

inline DirectedSubgraph directed_subgraph(const HydroGraph& g, Comid root, Direction dir) {
    DirectedSubgraph s{root, reachable_from(g, root, dir), {}};
    std::set<Comid> keep = s.members;
    keep.insert(root);
    s.graph = induced_subgraph(g, keep);
    return s;
}

inline DirectedSubgraph upstream_graph(const HydroGraph& g, Comid root) {
    return directed_subgraph(g, root, Direction::Upstream);
}

inline DirectedSubgraph downstream_graph(const HydroGraph& g, Comid root) {
    return directed_subgraph(g, root, Direction::Downstream);
}

// ---------------------------------------------------------------------------
// Node attribute tables: COMID,KIND and COMID,HUC12.

inline KindMap parse_kinds(std::string_view text) {
    const csv::Table t = csv::parse(text);
    const auto id = t.require("COMID");
    const auto kind = t.require("KIND");
    KindMap m;
    for (const auto& row : t.rows) {
        try {
            m[csv::comid_cell(row, id, "COMID")] = parse_node_kind(csv::cell(row, kind, "KIND"));
        } catch (const ValidationError& e) {
            if (std::string_view(e.what()).find(" at line ") != std::string_view::npos) throw;
            throw ValidationError(std::string(e.what()) + " at line " + std::to_string(row.line));
        }
    }
    return m;
}

inline std::string serialize_kinds(const KindMap& kinds) {
    std::string out = "COMID,KIND\n";
    for (const auto& [c, k] : kinds) out += std::to_string(c.value) + "," + std::string(to_string(k)) + "\n";
    return out;
}

inline HucMap parse_hucs(std::string_view text) {
    const csv::Table t = csv::parse(text);
    const auto id = t.require("COMID");
    const auto huc = t.require("HUC12");
    HucMap m;
    for (const auto& row : t.rows) {
        const Comid c = csv::comid_cell(row, id, "COMID");
        try {
            m[c] = HucCode(csv::cell(row, huc, "HUC12"));
        } catch (const ValidationError& e) {
            throw ValidationError(std::string(e.what()) + " at line " + std::to_string(row.line));
        }
    }
    return m;
}

inline std::string serialize_hucs(const HucMap& hucs) {
    std::string out = "COMID,HUC12\n";
    for (const auto& [c, h] : hucs) out += std::to_string(c.value) + "," + h.str() + "\n";
    return out;
}

} // namespace hydrograph
