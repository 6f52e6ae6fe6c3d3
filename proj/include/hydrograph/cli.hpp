#pragma once

// Command-line front end. Each subcommand wraps one library operation.
// Exit codes: 0 success, 1 validation error or usage error, 2 I/O error.

#include "hydrograph/aggregate.hpp"
#include "hydrograph/analysis.hpp"
#include "hydrograph/builder.hpp"
#include "hydrograph/geojson.hpp"
#include "hydrograph/graph.hpp"
#include "hydrograph/ingest.hpp"
#include "hydrograph/http.hpp"
#include "hydrograph/service.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

namespace hydrograph::cli {

namespace detail {

inline void emit(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty() || path == "-")
        out << text;
    else
        write_file(path, text);
}

inline std::string fixed2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

struct GraphFiles {
    std::string edges, kinds, hucs;

    void add_to(CLI::App* cmd, const char* edges_flag) {
        cmd->add_option(edges_flag, edges, "FROMCOMID,TOCOMID edge list")->required();
        cmd->add_option("--kinds", kinds, "COMID,KIND table");
        cmd->add_option("--hucs", hucs, "COMID,HUC12 table");
    }

    HydroGraph load() const {
        const auto e = parse_flow_table(read_file(edges));
        const KindMap k = kinds.empty() ? KindMap{} : parse_kinds(read_file(kinds));
        const HucMap h = hucs.empty() ? HucMap{} : parse_hucs(read_file(hucs));
        return build_graph(e, k, h);
    }
};

} // namespace detail

/// Runs the CLI; `argv[0]` is the program name.
inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"hydrograph: waterbody-aware river graph construction, aggregation and queries"};
    app.require_subcommand(1);
    std::function<void()> action;

    // build -----------------------------------------------------------------
    struct {
        std::string flowlines, waterbodies, watersheds, flow, config, sources, ag, urban, out;
    } b;
    auto* build = app.add_subcommand("build", "Build the graph and write a workspace directory");
    build->add_option("--flowlines", b.flowlines, "river GeoJSON (COMID)")->required();
    build->add_option("--waterbodies", b.waterbodies, "waterbody GeoJSON (COMID, FTYPE)")->required();
    build->add_option("--watersheds", b.watersheds, "HUC12 watershed GeoJSON")->required();
    build->add_option("--flow", b.flow, "FROMCOMID,TOCOMID flow table")->required();
    build->add_option("--config", b.config, "JSON config");
    build->add_option("--sources", b.sources, "point sources CSV (SOURCE_ID,LABEL,X,Y)");
    build->add_option("--ag", b.ag, "agricultural land GeoJSON, copied into the workspace");
    build->add_option("--urban", b.urban, "urban land GeoJSON, copied into the workspace");
    build->add_option("--out", b.out, "workspace directory")->required();
    build->callback([&] {
        action = [&] {
            namespace fs = std::filesystem;
            const Config cfg = b.config.empty() ? Config{} : parse_config(read_file(b.config));
            BuildInputs in;
            in.rivers = parse_features(read_file(b.flowlines), FeatureKind::RiverSegment);
            in.waterbodies = parse_features(read_file(b.waterbodies), FeatureKind::Waterbody);
            const std::string ws_text = read_file(b.watersheds);
            in.watersheds = parse_features(ws_text, FeatureKind::Watershed);
            in.flow = parse_flow_table(read_file(b.flow));
            if (!b.sources.empty()) {
                auto ps = parse_point_sources(read_file(b.sources), in.watersheds);
                in.sources = std::move(ps.located);
                in.unlocated_sources = ps.unlocated.size();
            }
            const BuildResult r = build_network(std::move(in), cfg);

            std::error_code ec;
            fs::create_directories(b.out, ec);
            if (ec) throw IoError("cannot create " + b.out + ": " + ec.message());
            const fs::path dir(b.out);
            write_file((dir / "edges.csv").string(), serialize_flow_table(r.edges));
            write_file((dir / "kinds.csv").string(), serialize_kinds(r.kinds));
            write_file((dir / "hucs.csv").string(), serialize_hucs(r.hucs));
            write_file((dir / "nodes.geojson").string(), features_to_geojson(r.node_features).dump() + "\n");
            write_file((dir / "watersheds.geojson").string(), ws_text);
            if (!b.config.empty()) write_file((dir / "config.json").string(), read_file(b.config));
            if (!b.ag.empty()) write_file((dir / "ag.geojson").string(), read_file(b.ag));
            if (!b.urban.empty()) write_file((dir / "urban.geojson").string(), read_file(b.urban));
            write_file((dir / "build_report.json").string(), r.report.to_json().dump(2) + "\n");
            write_file((dir / "build_report.txt").string(), r.report.to_text());
            out << r.report.to_text();
        };
    });

    // aggregate -------------------------------------------------------------
    struct {
        std::string in, kinds, hucs, out, map;
    } a;
    auto* agg = app.add_subcommand("aggregate", "Merge river nodes within HUC12 watersheds");
    agg->add_option("--in", a.in, "edge list")->required();
    agg->add_option("--kinds", a.kinds, "COMID,KIND table")->required();
    agg->add_option("--hucs", a.hucs, "COMID,HUC12 table")->required();
    agg->add_option("--out", a.out, "aggregated edge list")->required();
    agg->add_option("--map", a.map, "MERGED_COMID,SURVIVOR_COMID output");
    agg->callback([&] {
        action = [&] {
            auto ctx = make_merge_context(parse_flow_table(read_file(a.in)), parse_kinds(read_file(a.kinds)),
                                          parse_hucs(read_file(a.hucs)));
            const std::size_t before = ctx.nodes.size();
            const std::size_t wb_before = waterbody_count(ctx);
            ctx = aggregate(std::move(ctx));
            if (waterbody_count(ctx) != wb_before) throw ValidationError("aggregation changed the waterbody count");
            write_file(a.out, serialize_flow_table(ctx.edges));
            if (!a.map.empty()) write_file(a.map, serialize_merges(ctx.merged_into));
            out << "nodes: " << before << " -> " << ctx.nodes.size() << " (" << ctx.sweeps << " sweeps, "
                << wb_before << " waterbodies kept)\n";
        };
    });

    // verify ----------------------------------------------------------------
    struct {
        std::string original, aggregated, kinds, map, out;
    } v;
    auto* ver = app.add_subcommand("verify", "Compare waterbody connectivity of two graphs");
    ver->add_option("--original", v.original, "original edge list")->required();
    ver->add_option("--aggregated", v.aggregated, "aggregated edge list")->required();
    ver->add_option("--kinds", v.kinds, "COMID,KIND table")->required();
    ver->add_option("--map", v.map, "MERGED_COMID,SURVIVOR_COMID table");
    ver->add_option("--out", v.out, "JSON report (default stdout)");
    int verify_status = 0;
    ver->callback([&] {
        action = [&] {
            const KindMap kinds = parse_kinds(read_file(v.kinds));
            const auto orig_edges = parse_flow_table(read_file(v.original));
            const HydroGraph original = build_graph(orig_edges, kinds);
            // Waterbodies of the original keep their node in the aggregated graph
            // even when aggregation left them without edges.
            std::vector<Comid> wbs;
            for (const auto& [c, info] : original.nodes())
                if (info.kind == NodeKind::Waterbody) wbs.push_back(c);
            const HydroGraph aggregated = build_graph(parse_flow_table(read_file(v.aggregated)), kinds, {}, wbs);
            const auto merges = v.map.empty() ? std::map<Comid, Comid>{} : parse_merges(read_file(v.map));
            const auto rep = verify_connectivity(original, aggregated, merges);
            detail::emit(v.out, rep.to_json().dump(2) + "\n", out);
            if (!rep.mismatches.empty()) {
                err << rep.mismatches.size() << " connectivity mismatches over " << rep.checked_pairs << " pairs\n";
                verify_status = 1;
            }
        };
    });

    // upstream / downstream -------------------------------------------------
    struct Reach {
        detail::GraphFiles files;
        std::uint64_t node = 0;
        std::string out, nodes, geojson, edges_out;
    };
    Reach up, down;
    auto add_reach = [&](const char* name, const char* help, Reach& r, Direction dir) {
        auto* cmd = app.add_subcommand(name, help);
        r.files.add_to(cmd, "--graph");
        cmd->add_option("--node", r.node, "COMID to query")->required();
        cmd->add_option("--out", r.out, "JSON output (default stdout)");
        cmd->add_option("--nodes", r.nodes, "node geometry GeoJSON for --geojson");
        cmd->add_option("--geojson", r.geojson, "write subgraph member geometries here");
        cmd->add_option("--edges-out", r.edges_out, "write subgraph edge list CSV here");
        cmd->callback([&, dir] {
            action = [&, dir] {
                const HydroGraph g = r.files.load();
                const Comid n{r.node};
                if (!g.contains(n)) throw ValidationError("unknown node " + std::to_string(r.node));
                detail::emit(r.out, service::Response{200, service::query_json(g, n, dir)}.text(), out);
                const auto sub = directed_subgraph(g, n, dir);
                if (!r.edges_out.empty()) write_file(r.edges_out, serialize_flow_table(sub.graph.edges()));
                if (!r.geojson.empty()) {
                    if (r.nodes.empty()) throw ValidationError("--geojson needs --nodes");
                    std::map<Comid, geo::Geometry> geoms;
                    for (auto& f : parse_node_features(read_file(r.nodes))) geoms.emplace(f.comid, std::move(f.geometry));
                    write_file(r.geojson, subgraph_geojson(sub.graph, geoms).dump() + "\n");
                }
            };
        });
    };
    add_reach("upstream", "Upstream graph of a node", up, Direction::Upstream);
    add_reach("downstream", "Downstream graph of a node", down, Direction::Downstream);

    // attach-sources --------------------------------------------------------
    struct {
        detail::GraphFiles files;
        std::string nodes, watersheds, sources, out, out_kinds, out_hucs, report;
    } at;
    auto* att = app.add_subcommand("attach-sources", "Connect point sources to the nearest same-HUC12 node");
    at.files.add_to(att, "--graph");
    att->add_option("--nodes", at.nodes, "node geometry GeoJSON")->required();
    att->add_option("--watersheds", at.watersheds, "HUC12 watershed GeoJSON")->required();
    att->add_option("--sources", at.sources, "SOURCE_ID,LABEL,X,Y CSV")->required();
    att->add_option("--out", at.out, "edge list with source edges")->required();
    att->add_option("--out-kinds", at.out_kinds, "COMID,KIND output");
    att->add_option("--out-hucs", at.out_hucs, "COMID,HUC12 output");
    att->add_option("--report", at.report, "JSON report of attached/skipped sources");
    att->callback([&] {
        action = [&] {
            const HydroGraph g = at.files.load();
            const auto ws = parse_features(read_file(at.watersheds), FeatureKind::Watershed);
            std::map<Comid, geo::Point> centroids;
            for (const auto& f : parse_node_features(read_file(at.nodes)))
                centroids.emplace(f.comid, geo::centroid(f.geometry));
            const auto ps = parse_point_sources(read_file(at.sources), ws);
            const auto res = attach_point_sources(g, ps.located, centroids);
            write_file(at.out, serialize_flow_table(res.graph.edges()));
            if (!at.out_kinds.empty()) write_file(at.out_kinds, serialize_kinds(res.graph.kinds()));
            if (!at.out_hucs.empty()) write_file(at.out_hucs, serialize_hucs(res.graph.hucs()));
            nlohmann::json rep = {{"attached", nlohmann::json::array()}, {"skipped", nlohmann::json::array()}};
            for (const auto& e : res.attached) rep["attached"].push_back({{"source", e.from.value}, {"node", e.to.value}});
            for (Comid c : res.skipped) rep["skipped"].push_back(c.value);
            for (Comid c : ps.unlocated) rep["skipped"].push_back(c.value);
            if (!at.report.empty()) write_file(at.report, rep.dump(2) + "\n");
            out << "point sources: " << res.attached.size() << " attached, "
                << res.skipped.size() + ps.unlocated.size() << " skipped\n";
        };
    });

    // classify --------------------------------------------------------------
    struct {
        std::string samples, manifest, out;
        ClassifyConfig cfg;
    } cl;
    auto* cls = app.add_subcommand("classify", "Classify lakes as Clean/Polluted from TP and chlorophyll-a means");
    auto* samples_opt = cls->add_option("--samples", cl.samples, "COMID,PARAM,VALUE CSV");
    auto* manifest_opt = cls->add_option("--manifest", cl.manifest, "COMID,FILE manifest of per-lake PARAM,VALUE files");
    samples_opt->excludes(manifest_opt);
    cls->add_option("--min-count", cl.cfg.min_count, "minimum samples per series")->capture_default_str();
    cls->add_option("--clean-tp-max", cl.cfg.clean_tp_max)->capture_default_str();
    cls->add_option("--clean-chla-max", cl.cfg.clean_chla_max)->capture_default_str();
    cls->add_option("--polluted-tp-min", cl.cfg.polluted_tp_min)->capture_default_str();
    cls->add_option("--polluted-chla-min", cl.cfg.polluted_chla_min)->capture_default_str();
    cls->add_option("--out", cl.out, "COMID,CLASS output (default stdout)");
    cls->callback([&] {
        action = [&] {
            if (cl.samples.empty() == cl.manifest.empty())
                throw ValidationError("exactly one of --samples or --manifest is required");
            const auto samples = cl.samples.empty() ? load_samples_manifest(cl.manifest)
                                                    : parse_samples(read_file(cl.samples));
            detail::emit(cl.out, serialize_classes(classify_lakes(samples, cl.cfg)), out);
        };
    });

    // metrics ---------------------------------------------------------------
    struct {
        std::string workspace, classes, lakes, cafos, out, json, summaries;
    } me;
    auto* met = app.add_subcommand("metrics", "Cohort metrics table for classified lakes");
    met->add_option("--workspace", me.workspace, "workspace directory")->required();
    met->add_option("--classes", me.classes, "COMID,CLASS table")->required();
    met->add_option("--lakes", me.lakes, "waterbody GeoJSON used to place lakes outside the graph");
    met->add_option("--cafos", me.cafos, "point sources CSV for the same-HUC12 fallback");
    met->add_option("--out", me.out, "CSV output (default stdout)");
    met->add_option("--json", me.json, "JSON output");
    met->add_option("--summaries", me.summaries, "per-lake upstream summaries JSON");
    met->callback([&] {
        action = [&] {
            const auto snap = service::load_workspace(me.workspace);
            const auto& g = snap->active();
            std::map<Comid, Cohort> cohorts;
            for (const auto& [c, k] : parse_classes(read_file(me.classes))) {
                if (k == LakeClass::Clean) cohorts[c] = Cohort::Clean;
                if (k == LakeClass::Polluted) cohorts[c] = Cohort::Polluted;
            }
            HucMap lake_hucs;
            if (!me.lakes.empty())
                lake_hucs = assign_hucs(parse_features(read_file(me.lakes), FeatureKind::Waterbody), snap->watersheds).hucs;
            std::set<std::string> cafo_hucs;
            for (const auto& [c, info] : snap->graph.nodes())
                if (info.kind == NodeKind::PointSource && info.huc12) cafo_hucs.insert(info.huc12->str());
            if (!me.cafos.empty())
                for (const auto& s : parse_point_sources(read_file(me.cafos), snap->watersheds).located)
                    cafo_hucs.insert(s.huc12.str());

            std::map<Comid, UpstreamSummary> summaries;
            for (const auto& [c, cohort] : cohorts) {
                if (g.contains(c)) {
                    summaries.emplace(c, upstream_summary(g, c, snap->geoms, snap->land()));
                } else {
                    std::optional<HucCode> h;
                    if (auto it = lake_hucs.find(c); it != lake_hucs.end()) h = it->second;
                    summaries.emplace(c, standalone_summary(c, h, snap->land()));
                }
            }
            const auto rows = metrics_table(g, cohorts, summaries, cafo_hucs);
            detail::emit(me.out, serialize_metrics(rows), out);
            if (!me.json.empty()) {
                auto j = nlohmann::json::array();
                for (const auto& r : rows) j.push_back(r.to_json());
                write_file(me.json, j.dump(2) + "\n");
            }
            if (!me.summaries.empty()) {
                nlohmann::json j = nlohmann::json::object();
                for (const auto& [c, s] : summaries) j[std::to_string(c.value)] = s.to_json();
                write_file(me.summaries, j.dump(2) + "\n");
            }
        };
    });

    // tsi -------------------------------------------------------------------
    std::optional<double> tp, chla;
    auto* tsi = app.add_subcommand("tsi", "Carlson trophic state index");
    tsi->add_option("--tp", tp, "total phosphorus, mg/m3");
    tsi->add_option("--chla", chla, "chlorophyll-a, mg/m3");
    tsi->callback([&] {
        action = [&] {
            if (!tp && !chla) throw ValidationError("tsi needs --tp and/or --chla");
            if (tp) out << detail::fixed2(tsi_tp(*tp)) << "\n";
            if (chla) out << detail::fixed2(tsi_chla(*chla)) << "\n";
        };
    });

    // serve -----------------------------------------------------------------
    std::string serve_ws, host = "127.0.0.1";
    int port = 8080;
    auto* srv = app.add_subcommand("serve", "Serve read-only JSON queries over HTTP");
    srv->add_option("--workspace", serve_ws, "workspace directory (default $HYDROGRAPH_WORKSPACE)");
    srv->add_option("--port", port)->capture_default_str();
    srv->add_option("--host", host)->capture_default_str();
    srv->callback([&] {
        action = [&] {
            if (serve_ws.empty())
                if (const char* env = std::getenv("HYDROGRAPH_WORKSPACE")) serve_ws = env;
            if (serve_ws.empty()) throw ValidationError("serve needs --workspace or HYDROGRAPH_WORKSPACE");
            service::run_server(serve_ws, host, port, out);
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        err << app.help();
        return 1;
    }

    try {
        action();
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return verify_status;
}

} // namespace hydrograph::cli
