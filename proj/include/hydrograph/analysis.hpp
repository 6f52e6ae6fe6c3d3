#pragma once

// Water-quality analytics over a graph snapshot: trophic state indices, lake
// cohort classification, upstream summaries and cohort metric tables.

#include "hydrograph/csv.hpp"
#include "hydrograph/geo.hpp"
#include "hydrograph/graph.hpp"
#include "hydrograph/ingest.hpp"
#include "hydrograph/types.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace hydrograph {

// ---------------------------------------------------------------------------
// Carlson trophic state index

inline double tsi_tp(double tp_mg_m3) {
    if (!(tp_mg_m3 > 0.0) || !std::isfinite(tp_mg_m3)) throw ValidationError("TP must be positive");
    return 4.15 + 14.42 * std::log(tp_mg_m3);
}

inline double tsi_chla(double chla_mg_m3) {
    if (!(chla_mg_m3 > 0.0) || !std::isfinite(chla_mg_m3)) throw ValidationError("chlorophyll-a must be positive");
    return 30.6 + 9.81 * std::log(chla_mg_m3);
}

// ---------------------------------------------------------------------------
// Lake samples and classification

struct LakeSamples {
    Comid comid;
    std::vector<double> tp;    // mg/m3
    std::vector<double> chla;  // mg/m3
};

enum class LakeClass { Clean, Polluted, Neither, InsufficientData };

inline std::string_view to_string(LakeClass c) {
    switch (c) {
    case LakeClass::Clean: return "Clean";
    case LakeClass::Polluted: return "Polluted";
    case LakeClass::Neither: return "Neither";
    case LakeClass::InsufficientData: return "InsufficientData";
    }
    return "Neither";
}

inline LakeClass parse_lake_class(std::string_view s) {
    if (s == "Clean") return LakeClass::Clean;
    if (s == "Polluted") return LakeClass::Polluted;
    if (s == "Neither") return LakeClass::Neither;
    if (s == "InsufficientData") return LakeClass::InsufficientData;
    throw ValidationError("unknown lake class '" + std::string(s) + "'");
}

struct ClassifyConfig {
    std::size_t min_count = 50;
    double clean_tp_max = 15.0;
    double clean_chla_max = 5.0;
    double polluted_tp_min = 60.0;
    double polluted_chla_min = 15.0;

    void validate() const {
        for (double v : {clean_tp_max, clean_chla_max, polluted_tp_min, polluted_chla_min})
            if (!(v > 0.0)) throw ValidationError("classification thresholds must be positive");
        if (!(clean_tp_max < polluted_tp_min) || !(clean_chla_max < polluted_chla_min))
            throw ValidationError("clean maxima must lie below polluted minima");
    }
};

inline double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Means of all samples against strict thresholds: Clean needs both means
/// below the clean maxima, Polluted both above the polluted minima.
inline std::map<Comid, LakeClass> classify_lakes(const std::vector<LakeSamples>& samples,
                                                 const ClassifyConfig& cfg = {}) {
    cfg.validate();
    std::map<Comid, LakeClass> out;
    for (const auto& s : samples) {
        if (s.tp.size() < cfg.min_count || s.chla.size() < cfg.min_count || s.tp.empty() || s.chla.empty()) {
            out[s.comid] = LakeClass::InsufficientData;
            continue;
        }
        const double tp = mean(s.tp), chl = mean(s.chla);
        if (tp < cfg.clean_tp_max && chl < cfg.clean_chla_max)
            out[s.comid] = LakeClass::Clean;
        else if (tp > cfg.polluted_tp_min && chl > cfg.polluted_chla_min)
            out[s.comid] = LakeClass::Polluted;
        else
            out[s.comid] = LakeClass::Neither;
    }
    return out;
}

namespace detail {

inline void add_sample(std::map<Comid, LakeSamples>& by_lake, Comid c, std::string_view param, double value,
                       std::size_t line) {
    if (!std::isfinite(value) || value < 0.0)
        throw ValidationError("sample value must be finite and non-negative at line " + std::to_string(line));
    std::string p(param);
    std::transform(p.begin(), p.end(), p.begin(), [](unsigned char ch) { return static_cast<char>(std::toupper(ch)); });
    auto& s = by_lake[c];
    s.comid = c;
    if (p == "TP")
        s.tp.push_back(value);
    else if (p == "CHLA")
        s.chla.push_back(value);
    else
        throw ValidationError("PARAM must be TP or CHLA at line " + std::to_string(line));
}

} // namespace detail

/// COMID,PARAM,VALUE rows with PARAM in {TP, CHLA}.
inline std::vector<LakeSamples> parse_samples(std::string_view text) {
    const csv::Table t = csv::parse(text);
    const auto c = t.require("COMID"), p = t.require("PARAM"), v = t.require("VALUE");
    std::map<Comid, LakeSamples> by_lake;
    for (const auto& row : t.rows)
        detail::add_sample(by_lake, csv::comid_cell(row, c, "COMID"), csv::cell(row, p, "PARAM"),
                           csv::real_cell(row, v, "VALUE"), row.line);
    std::vector<LakeSamples> out;
    for (auto& [id, s] : by_lake) out.push_back(std::move(s));
    return out;
}

/// Manifest CSV COMID,FILE; each FILE (relative to the manifest) holds PARAM,VALUE rows.
inline std::vector<LakeSamples> load_samples_manifest(const std::string& manifest_path) {
    const auto base = std::filesystem::path(manifest_path).parent_path();
    const csv::Table t = csv::parse(read_file(manifest_path));
    const auto c = t.require("COMID"), f = t.require("FILE");
    std::map<Comid, LakeSamples> by_lake;
    for (const auto& row : t.rows) {
        const Comid id = csv::comid_cell(row, c, "COMID");
        const csv::Table lake = csv::parse(read_file((base / csv::cell(row, f, "FILE")).string()));
        const auto p = lake.require("PARAM"), v = lake.require("VALUE");
        by_lake[id].comid = id;
        for (const auto& r : lake.rows)
            detail::add_sample(by_lake, id, csv::cell(r, p, "PARAM"), csv::real_cell(r, v, "VALUE"), r.line);
    }
    std::vector<LakeSamples> out;
    for (auto& [id, s] : by_lake) out.push_back(std::move(s));
    return out;
}

inline std::string serialize_classes(const std::map<Comid, LakeClass>& classes) {
    std::string out = "COMID,CLASS\n";
    for (const auto& [c, k] : classes) out += std::to_string(c.value) + "," + std::string(to_string(k)) + "\n";
    return out;
}

inline std::map<Comid, LakeClass> parse_classes(std::string_view text) {
    const csv::Table t = csv::parse(text);
    const auto c = t.require("COMID"), k = t.require("CLASS");
    std::map<Comid, LakeClass> out;
    for (const auto& row : t.rows) out[csv::comid_cell(row, c, "COMID")] = parse_lake_class(csv::cell(row, k, "CLASS"));
    return out;
}

// ---------------------------------------------------------------------------
// Upstream summaries

struct UpstreamSummary {
    Comid target;
    bool in_graph = false;
    std::size_t upstream_nodes = 0;  // rivers and waterbodies, point sources excluded
    std::size_t upstream_waterbodies = 0;
    double upstream_waterbody_area = 0.0;  // km2
    std::size_t waterbodies_without_geometry = 0;
    std::size_t cafos = 0;
    double ag_fraction = 0.0;
    double urban_fraction = 0.0;
    std::vector<std::string> huc12s;  // watersheds the fractions were sampled over

    nlohmann::json to_json() const {
        return {{"target", target.value},
                {"in_graph", in_graph},
                {"upstream_nodes", upstream_nodes},
                {"upstream_waterbodies", upstream_waterbodies},
                {"upstream_waterbody_area_km2", upstream_waterbody_area},
                {"waterbodies_without_geometry", waterbodies_without_geometry},
                {"cafos", cafos},
                {"ag_fraction", ag_fraction},
                {"urban_fraction", urban_fraction},
                {"huc12s", huc12s}};
    }
};

/// Land-cover context for summaries. Covers are areal geometries.
struct LandContext {
    const std::vector<FeatureRecord>* watersheds = nullptr;
    const std::vector<geo::Geometry>* ag_cover = nullptr;
    const std::vector<geo::Geometry>* urban_cover = nullptr;
    std::optional<double> grid_step;
    LengthUnits units = LengthUnits::Meters;
};

namespace detail {

inline std::pair<double, double> land_fractions(const std::set<std::string>& hucs, const LandContext& land) {
    if (hucs.empty() || !land.watersheds) return {0.0, 0.0};
    geo::MultiPolygon region;
    for (const auto& w : *land.watersheds) {
        if (!w.huc12 || !hucs.contains(w.huc12->str())) continue;
        const auto part = std::visit(
            [](const auto& g) -> geo::MultiPolygon {
                if constexpr (geo::Areal<std::decay_t<decltype(g)>>)
                    return geo::to_multi(g);
                else
                    return {};
            },
            w.geometry);
        region.parts.insert(region.parts.end(), part.parts.begin(), part.parts.end());
    }
    if (region.parts.empty()) return {0.0, 0.0};
    const double step = land.grid_step ? *land.grid_step : geo::default_grid_step(region);
    static const std::vector<geo::Geometry> kNone;
    const auto& ag = land.ag_cover ? *land.ag_cover : kNone;
    const auto& urban = land.urban_cover ? *land.urban_cover : kNone;
    return {geo::land_fraction(region, ag, step), geo::land_fraction(region, urban, step)};
}

} // namespace detail

/// Upstream waterbody count and area, attached point sources, and land
/// fractions over the union of HUC12 watersheds holding the target or any
/// upstream node (each HUC12 sampled once).
inline UpstreamSummary upstream_summary(const HydroGraph& g, Comid target,
                                        const std::map<Comid, geo::Geometry>& geoms, const LandContext& land) {
    if (!g.contains(target)) throw ValidationError("unknown node " + std::to_string(target.value));
    UpstreamSummary s;
    s.target = target;
    s.in_graph = true;
    const auto ups = reachable_from(g, target, Direction::Upstream);

    std::set<std::string> hucs;
    if (const auto& h = g.node(target).huc12) hucs.insert(h->str());
    double area = 0.0;
    for (Comid c : ups) {
        if (c == target) continue;
        const auto& info = g.node(c);
        if (info.kind == NodeKind::PointSource) {
            ++s.cafos;
            continue;
        }
        ++s.upstream_nodes;
        if (info.huc12) hucs.insert(info.huc12->str());
        if (info.kind != NodeKind::Waterbody) continue;
        ++s.upstream_waterbodies;
        if (auto it = geoms.find(c); it != geoms.end())
            area += geo::area(it->second);
        else
            ++s.waterbodies_without_geometry;
    }
    if (s.upstream_waterbodies > 0 && land.units == LengthUnits::Degrees)
        throw ValidationError("area reporting needs a metric CRS; config declares degrees");
    s.upstream_waterbody_area = area / 1e6;

    std::tie(s.ag_fraction, s.urban_fraction) = detail::land_fractions(hucs, land);
    s.huc12s.assign(hucs.begin(), hucs.end());
    return s;
}

/// Summary for a lake that is not a graph node: fractions over its own HUC12.
inline UpstreamSummary standalone_summary(Comid lake, const std::optional<HucCode>& huc12, const LandContext& land) {
    UpstreamSummary s;
    s.target = lake;
    std::set<std::string> hucs;
    if (huc12) hucs.insert(huc12->str());
    std::tie(s.ag_fraction, s.urban_fraction) = detail::land_fractions(hucs, land);
    s.huc12s.assign(hucs.begin(), hucs.end());
    return s;
}

// ---------------------------------------------------------------------------
// Cohort metrics

enum class Cohort { Polluted, Clean };

inline std::string_view to_string(Cohort c) { return c == Cohort::Polluted ? "Polluted" : "Clean"; }

struct Indicator {
    std::size_t count = 0;
    std::size_t total = 0;
    double fraction() const { return total == 0 ? 0.0 : static_cast<double>(count) / static_cast<double>(total); }
};

struct MetricsRow {
    Cohort cohort = Cohort::Polluted;
    std::size_t total = 0;
    Indicator cafo_connected, in_graph, headwater, ag_over_20pct, urban_over_2pct, upstream_10plus;

    nlohmann::json to_json() const {
        auto ind = [](const Indicator& i) { return nlohmann::json{{"count", i.count}, {"fraction", i.fraction()}}; };
        return {{"cohort", std::string(to_string(cohort))},
                {"total", total},
                {"cafo_connected", ind(cafo_connected)},
                {"in_graph", ind(in_graph)},
                {"headwater", ind(headwater)},
                {"ag_over_20pct", ind(ag_over_20pct)},
                {"urban_over_2pct", ind(urban_over_2pct)},
                {"upstream_10plus", ind(upstream_10plus)}};
    }
};

/// Six indicator counts per cohort. For lakes outside the graph the CAFO
/// indicator falls back to a CAFO located in the lake's own HUC12.
inline std::vector<MetricsRow> metrics_table(const HydroGraph& g, const std::map<Comid, Cohort>& cohorts,
                                             const std::map<Comid, UpstreamSummary>& summaries,
                                             const std::set<std::string>& cafo_huc12s = {}) {
    if (cohorts.empty()) throw ValidationError("no cohort lakes");
    std::vector<MetricsRow> rows;
    for (Cohort which : {Cohort::Polluted, Cohort::Clean}) {
        MetricsRow r;
        r.cohort = which;
        for (const auto& [lake, c] : cohorts) {
            if (c != which) continue;
            ++r.total;
            const bool in = g.contains(lake);
            const auto it = summaries.find(lake);
            const UpstreamSummary* s = it == summaries.end() ? nullptr : &it->second;
            bool cafo = false;
            if (in && s)
                cafo = s->cafos > 0;
            else if (s)
                for (const auto& h : s->huc12s) cafo |= cafo_huc12s.contains(h);
            r.cafo_connected.count += cafo;
            r.in_graph.count += in;
            if (in && s) {
                r.headwater.count += s->upstream_nodes == 0;
                r.upstream_10plus.count += s->upstream_nodes >= 10;
            }
            if (s) {
                r.ag_over_20pct.count += s->ag_fraction > 0.20;
                r.urban_over_2pct.count += s->urban_fraction > 0.02;
            }
        }
        for (auto* i : {&r.cafo_connected, &r.in_graph, &r.headwater, &r.ag_over_20pct, &r.urban_over_2pct,
                        &r.upstream_10plus})
            i->total = r.total;
        rows.push_back(r);
    }
    return rows;
}

inline std::string serialize_metrics(const std::vector<MetricsRow>& rows) {
    std::string out = "COHORT,TOTAL,CAFO,IN_GRAPH,HEADWATER,AG_OVER_20PCT,URBAN_OVER_2PCT,UPSTREAM_10PLUS\n";
    auto frac = [](const Indicator& i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", i.fraction());
        return std::string(buf);
    };
    for (const auto& r : rows) {
        out += std::string(to_string(r.cohort)) + "," + std::to_string(r.total);
        for (const auto* i : {&r.cafo_connected, &r.in_graph, &r.headwater, &r.ag_over_20pct, &r.urban_over_2pct,
                              &r.upstream_10plus})
            out += "," + std::to_string(i->count);
        out += "\n" + std::string(to_string(r.cohort)) + "_FRACTION,";
        for (const auto* i : {&r.cafo_connected, &r.in_graph, &r.headwater, &r.ag_over_20pct, &r.urban_over_2pct,
                              &r.upstream_10plus})
            out += "," + frac(*i);
        out += "\n";
    }
    return out;
}

} // namespace hydrograph
