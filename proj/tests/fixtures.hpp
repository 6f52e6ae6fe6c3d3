#pragma once

// Shared fixtures and independent oracles for the unit and acceptance suites.
// The oracles deliberately avoid the library's own algorithms.

#include "hydrograph/aggregate.hpp"
#include "hydrograph/builder.hpp"
#include "hydrograph/geo.hpp"
#include "hydrograph/graph.hpp"
#include "hydrograph/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <vector>

namespace fixtures {

using namespace hydrograph;

inline geo::Ring rect_ring(double x0, double y0, double x1, double y1) {
    return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}};
}

inline geo::Polygon rect(double x0, double y0, double x1, double y1) { return {rect_ring(x0, y0, x1, y1), {}}; }

inline geo::Polygon unit_square() { return rect(0, 0, 1, 1); }

inline geo::PolyLine line(std::initializer_list<geo::Point> pts) { return {std::vector<geo::Point>(pts)}; }

inline FeatureRecord river(std::uint64_t id, geo::PolyLine l) {
    return {Comid{id}, FeatureKind::RiverSegment, std::move(l), std::nullopt, std::nullopt, {}};
}

inline FeatureRecord lake(std::uint64_t id, geo::Polygon p, std::optional<std::string> ftype = "LakePond") {
    return {Comid{id}, FeatureKind::Waterbody, std::move(p), std::move(ftype), std::nullopt, {}};
}

inline FeatureRecord watershed(std::uint64_t id, geo::Polygon p, const std::string& huc) {
    return {Comid{id}, FeatureKind::Watershed, std::move(p), std::nullopt, HucCode(huc), {}};
}

inline std::vector<FlowEdge> edges(std::initializer_list<std::pair<std::uint64_t, std::uint64_t>> list) {
    std::vector<FlowEdge> out;
    for (auto [a, b] : list) out.push_back({Comid{a}, Comid{b}});
    return out;
}

inline std::set<Comid> ids(std::initializer_list<std::uint64_t> list) {
    std::set<Comid> out;
    for (auto v : list) out.insert(Comid{v});
    return out;
}

// ---------------------------------------------------------------------------
// The three-waterbody figure: rivers 1..5 in a chain-like layout, lake A over
// river 1, lakes B and C both over river 4.

inline constexpr std::uint64_t A = 101, B = 102, C = 103;

struct Figure3 {
    std::vector<FeatureRecord> rivers;
    std::vector<FeatureRecord> lakes;
    std::vector<FlowEdge> flow;
};

inline Figure3 figure3() {
    Figure3 f;
    // Rivers flow left to right along y = 0; river 3 is a tributary that is not in the flow table.
    f.rivers = {river(1, line({{0, 0}, {10, 0}})), river(2, line({{10, 0}, {20, 0}})),
                river(4, line({{20, 0}, {40, 0}})), river(5, line({{40, 0}, {50, 0}}))};
    f.lakes = {lake(A, rect(2, -2, 8, 2)), lake(B, rect(22, -2, 28, 2)), lake(C, rect(32, -2, 38, 2))};
    f.flow = edges({{1, 2}, {2, 4}, {4, 5}});
    return f;
}

inline std::vector<FlowEdge> figure3_expected() {
    return edges({{2, B}, {2, C}, {A, 2}, {B, 5}, {C, 5}});
}

// ---------------------------------------------------------------------------
// Reachability oracle: Floyd–Warshall style transitive closure on a matrix.

struct Closure {
    std::vector<std::uint64_t> ids;
    std::vector<std::vector<bool>> reach;  // reach[i][j]: path of length >= 1 from i to j

    std::size_t index(Comid c) const {
        return static_cast<std::size_t>(std::lower_bound(ids.begin(), ids.end(), c.value) - ids.begin());
    }
    bool path(Comid u, Comid v) const { return reach[index(u)][index(v)]; }

    std::set<Comid> downstream(Comid u) const {
        std::set<Comid> out;
        const auto i = index(u);
        for (std::size_t j = 0; j < ids.size(); ++j)
            if (reach[i][j]) out.insert(Comid{ids[j]});
        return out;
    }
    std::set<Comid> upstream(Comid v) const {
        std::set<Comid> out;
        const auto j = index(v);
        for (std::size_t i = 0; i < ids.size(); ++i)
            if (reach[i][j]) out.insert(Comid{ids[i]});
        return out;
    }
};

inline Closure closure(const std::vector<FlowEdge>& es, const std::vector<Comid>& extra = {}) {
    Closure c;
    for (const auto& e : es) {
        c.ids.push_back(e.from.value);
        c.ids.push_back(e.to.value);
    }
    for (Comid x : extra) c.ids.push_back(x.value);
    std::sort(c.ids.begin(), c.ids.end());
    c.ids.erase(std::unique(c.ids.begin(), c.ids.end()), c.ids.end());
    const std::size_t n = c.ids.size();
    c.reach.assign(n, std::vector<bool>(n, false));
    for (const auto& e : es) c.reach[c.index(e.from)][c.index(e.to)] = true;
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            if (c.reach[i][k])
                for (std::size_t j = 0; j < n; ++j)
                    if (c.reach[k][j]) c.reach[i][j] = true;
    return c;
}

/// Random digraph over ids 1..n; may contain cycles. No self-loops.
inline std::vector<FlowEdge> random_digraph(std::mt19937_64& rng, std::size_t n, double density) {
    std::bernoulli_distribution coin(density);
    std::vector<FlowEdge> out;
    for (std::size_t i = 1; i <= n; ++i)
        for (std::size_t j = 1; j <= n; ++j)
            if (i != j && coin(rng)) out.push_back({Comid{i}, Comid{j}});
    return out;
}

// ---------------------------------------------------------------------------
// Random aggregation fixtures: DAGs shaped like drainage networks (edges point
// from lower to higher index, mostly one outlet per node, occasional braids),
// a random waterbody subset and contiguous HUC12 blocks with some noise.

struct AggFixture {
    std::vector<FlowEdge> edges;
    KindMap kinds;
    HucMap hucs;
    std::size_t nodes = 0;
    std::size_t waterbodies = 0;
    std::size_t huc_labels = 0;
};

inline std::string huc_label(std::size_t i) {
    std::string s = std::to_string(70900020000ULL + i);
    return std::string(12 - s.size(), '0') + s;
}

inline AggFixture random_agg_fixture(std::mt19937_64& rng) {
    AggFixture f;
    f.nodes = std::uniform_int_distribution<std::size_t>(30, 80)(rng);
    f.waterbodies = std::uniform_int_distribution<std::size_t>(3, 10)(rng);
    f.huc_labels = std::uniform_int_distribution<std::size_t>(2, 5)(rng);
    const std::size_t n = f.nodes;

    std::set<FlowEdge> es;
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (std::size_t i = 1; i < n; ++i) {
        const std::size_t span = std::min<std::size_t>(8, n - i);
        std::uniform_int_distribution<std::size_t> ahead(1, span);
        if (u01(rng) < 0.92) es.insert({Comid{i}, Comid{i + ahead(rng)}});
        if (u01(rng) < 0.12) es.insert({Comid{i}, Comid{i + ahead(rng)}});
    }
    f.edges.assign(es.begin(), es.end());
    std::shuffle(f.edges.begin(), f.edges.end(), rng);

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i + 1;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t k = 0; k < f.waterbodies; ++k) f.kinds[Comid{order[k]}] = NodeKind::Waterbody;

    // Contiguous blocks by index, then relabel ~10% at random and untag ~3%.
    for (std::size_t i = 1; i <= n; ++i) {
        std::size_t label = (i - 1) * f.huc_labels / n;
        if (u01(rng) < 0.10) label = std::uniform_int_distribution<std::size_t>(0, f.huc_labels - 1)(rng);
        if (u01(rng) < 0.03) continue;
        f.hucs.emplace(Comid{i}, HucCode(huc_label(label)));
    }
    return f;
}

/// Graph over every fixture node that appears in an edge or is a waterbody.
inline HydroGraph fixture_graph(const AggFixture& f) {
    std::vector<Comid> extra;
    for (const auto& [c, k] : f.kinds) extra.push_back(c);
    return build_graph(f.edges, f.kinds, f.hucs, extra);
}

inline MergeContext fixture_context(const AggFixture& f) {
    auto ctx = make_merge_context(f.edges, f.kinds, f.hucs);
    for (const auto& [c, k] : f.kinds) ctx.nodes.insert(c);
    return ctx;
}

// ---------------------------------------------------------------------------
// Winding-number oracle for simple polygons (boundary handled separately).

inline int winding_number(const geo::Point& p, const geo::Ring& ring) {
    int wn = 0;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        const auto& a = ring[i];
        const auto& b = ring[i + 1];
        const double side = (b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y);
        if (a.y <= p.y) {
            if (b.y > p.y && side > 0) ++wn;
        } else {
            if (b.y <= p.y && side < 0) --wn;
        }
    }
    return wn;
}

/// Random convex polygon: sorted random angles on an ellipse, counter-clockwise.
inline geo::Polygon random_convex(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> ang(0.0, 2.0 * std::numbers::pi);
    std::uniform_real_distribution<double> rad(0.5, 5.0);
    std::uniform_real_distribution<double> ctr(-10.0, 10.0);
    const int k = std::uniform_int_distribution<int>(3, 12)(rng);
    std::vector<double> t(static_cast<std::size_t>(k));
    for (auto& v : t) v = ang(rng);
    std::sort(t.begin(), t.end());
    const double rx = rad(rng), ry = rad(rng), cx = ctr(rng), cy = ctr(rng);
    geo::Ring ring;
    for (double a : t) ring.push_back({cx + rx * std::cos(a), cy + ry * std::sin(a)});
    ring.push_back(ring.front());
    return {ring, {}};
}

/// Random simple (star-shaped) polygon, possibly non-convex.
inline geo::Polygon random_star(std::mt19937_64& rng, int k = 10) {
    std::uniform_real_distribution<double> rad(0.3, 3.0);
    std::uniform_real_distribution<double> jitter(-0.2, 0.2);
    geo::Ring ring;
    for (int i = 0; i < k; ++i) {
        const double a = 2.0 * std::numbers::pi * (i + 0.5 + jitter(rng)) / k;
        const double r = rad(rng);
        ring.push_back({r * std::cos(a), r * std::sin(a)});
    }
    ring.push_back(ring.front());
    return {ring, {}};
}

} // namespace fixtures
