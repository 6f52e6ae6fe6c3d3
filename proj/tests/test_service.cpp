#include "fixtures.hpp"

#include "hydrograph/cli.hpp"
#include "hydrograph/http.hpp"
#include "hydrograph/service.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>
#include <sstream>
#include <thread>
#include <unistd.h>

using namespace hydrograph;
using fixtures::A;
using fixtures::B;
using fixtures::C;
using fixtures::rect;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t D = 104;

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("hydrograph-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

struct CliRun {
    int code;
    std::string out, err;
};

CliRun run(std::vector<std::string> args) {
    args.insert(args.begin(), "hydrograph");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

// Two watersheds: the three-lake figure network in the south, a separate
// river 6 -> 7 draining into lake D in the north.
void write_inputs(const TempDir& d) {
    auto f = fixtures::figure3();
    f.rivers.push_back(fixtures::river(6, fixtures::line({{0, 20}, {10, 20}})));
    f.rivers.push_back(fixtures::river(7, fixtures::line({{10, 20}, {30, 20}})));
    f.lakes.push_back(fixtures::lake(D, rect(15, 18, 25, 22)));
    write_file(d / "flowlines.geojson", features_to_geojson(f.rivers).dump());
    write_file(d / "waterbodies.geojson", features_to_geojson(f.lakes).dump());
    write_file(d / "watersheds.geojson",
               features_to_geojson({fixtures::watershed(1, rect(-5, -5, 60, 5), "070900020501"),
                                    fixtures::watershed(2, rect(-5, 15, 60, 25), "070900020502")})
                   .dump());
    write_file(d / "flow.csv", "FROMCOMID,TOCOMID\n1,2\n2,4\n4,5\n6,7\n");
    write_file(d / "ag.geojson", features_to_geojson({{Comid{1}, FeatureKind::LandCover, rect(-5, -5, 10, 5), {}, {}, {}}}).dump());
    write_file(d / "config.json", R"({"grid_step": 0.5, "units": "meters"})");
}

CliRun build_workspace(const TempDir& d) {
    write_inputs(d);
    return run({"build", "--flowlines", d / "flowlines.geojson", "--waterbodies", d / "waterbodies.geojson",
                "--watersheds", d / "watersheds.geojson", "--flow", d / "flow.csv", "--config", d / "config.json",
                "--ag", d / "ag.geojson", "--out", d / "ws"});
}

std::map<std::string, std::string> dir_contents(const fs::path& p) {
    std::map<std::string, std::string> m;
    for (const auto& e : fs::recursive_directory_iterator(p))
        if (e.is_regular_file()) m[e.path().string()] = read_file(e.path().string());
    return m;
}

std::vector<std::uint64_t> as_ids(const nlohmann::json& j) {
    std::vector<std::uint64_t> v;
    for (const auto& x : j) v.push_back(x.get<std::uint64_t>());
    return v;
}

} // namespace

TEST(Cli, Tsi) {
    auto r = run({"tsi", "--tp", "60"});
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out, "63.19\n");
    r = run({"tsi", "--chla", "30"});
    EXPECT_EQ(r.out, "63.97\n");
    EXPECT_EQ(run({"tsi", "--tp", "0"}).code, 1);
    EXPECT_EQ(run({"tsi"}).code, 1);
}

TEST(Cli, UsageErrorsExitOne) {
    EXPECT_EQ(run({}).code, 1);
    EXPECT_EQ(run({"frobnicate"}).code, 1);
    const auto r = run({"upstream", "--bogus"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("Usage"), std::string::npos);
}

TEST(Cli, MissingFileExitsTwo) {
    EXPECT_EQ(run({"upstream", "--graph", "/nonexistent/edges.csv", "--node", "1"}).code, 2);
}

TEST(Cli, BuildWritesWorkspace) {
    TempDir d;
    const auto r = build_workspace(d);
    ASSERT_EQ(r.code, 0) << r.err;
    for (const char* f : {"edges.csv", "kinds.csv", "hucs.csv", "nodes.geojson", "watersheds.geojson",
                          "build_report.json", "build_report.txt", "config.json", "ag.geojson"})
        EXPECT_TRUE(fs::exists(d.path / "ws" / f)) << f;
    EXPECT_EQ(read_file(d / "ws/edges.csv"), "FROMCOMID,TOCOMID\n2,102\n2,103\n6,104\n101,2\n102,5\n103,5\n");
    const auto rep = nlohmann::json::parse(read_file(d / "ws/build_report.json"));
    EXPECT_EQ(rep["waterbody_nodes"], 4);
    EXPECT_EQ(rep["single_lake_substitutions"], 2);
    EXPECT_EQ(rep["multi_lake_substitutions"], 1);
}

TEST(Cli, UpstreamAndDownstream) {
    TempDir d;
    ASSERT_EQ(build_workspace(d).code, 0);
    const auto r = run({"downstream", "--graph", d / "ws/edges.csv", "--kinds", d / "ws/kinds.csv", "--node",
                        std::to_string(A), "--out", d / "down.json", "--nodes", d / "ws/nodes.geojson", "--geojson",
                        d / "down.geojson", "--edges-out", d / "down.csv"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(read_file(d / "down.json"));
    EXPECT_EQ(as_ids(j["waterbodies"]), (std::vector<std::uint64_t>{B, C}));
    EXPECT_EQ(as_ids(j["nodes"]), (std::vector<std::uint64_t>{2, 5, B, C}));
    EXPECT_EQ(j["edges"].size(), 5u);
    EXPECT_EQ(read_file(d / "down.csv"), "FROMCOMID,TOCOMID\n2,102\n2,103\n101,2\n102,5\n103,5\n");
    const auto gj = nlohmann::json::parse(read_file(d / "down.geojson"));
    EXPECT_EQ(gj["features"].size(), 5u);

    EXPECT_EQ(run({"upstream", "--graph", d / "ws/edges.csv", "--node", "999"}).code, 1);
}

TEST(Cli, AggregateAndVerify) {
    TempDir d;
    ASSERT_EQ(build_workspace(d).code, 0);
    auto r = run({"aggregate", "--in", d / "ws/edges.csv", "--kinds", d / "ws/kinds.csv", "--hucs",
                  d / "ws/hucs.csv", "--out", d / "ws/edges_agg.csv", "--map", d / "ws/merges.csv"});
    ASSERT_EQ(r.code, 0) << r.err;
    // River 2 merges up into A and river 6 down into D; 5 has two waterbody inlets and stays.
    EXPECT_EQ(read_file(d / "ws/edges_agg.csv"), "FROMCOMID,TOCOMID\n101,102\n101,103\n102,5\n103,5\n");
    r = run({"verify", "--original", d / "ws/edges.csv", "--aggregated", d / "ws/edges_agg.csv", "--kinds",
             d / "ws/kinds.csv", "--map", d / "ws/merges.csv", "--out", d / "verify.json"});
    EXPECT_EQ(r.code, 0) << r.err;
    const auto rep = nlohmann::json::parse(read_file(d / "verify.json"));
    EXPECT_EQ(rep["checked_pairs"], 16);
    EXPECT_TRUE(rep["mismatches"].empty());

    write_file(d / "broken.csv", "FROMCOMID,TOCOMID\n101,102\n");
    r = run({"verify", "--original", d / "ws/edges.csv", "--aggregated", d / "broken.csv", "--kinds",
             d / "ws/kinds.csv", "--map", d / "ws/merges.csv"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("\"mismatches\""), std::string::npos);
}

TEST(Cli, AttachSources) {
    TempDir d;
    ASSERT_EQ(build_workspace(d).code, 0);
    write_file(d / "cafos.csv", "LABEL,X,Y\nCAFO,3,1\nCAFO,100,100\n");
    const auto r = run({"attach-sources", "--graph", d / "ws/edges.csv", "--kinds", d / "ws/kinds.csv", "--hucs",
                        d / "ws/hucs.csv", "--nodes", d / "ws/nodes.geojson", "--watersheds",
                        d / "ws/watersheds.geojson", "--sources", d / "cafos.csv", "--out", d / "with.csv",
                        "--out-kinds", d / "with_kinds.csv", "--report", d / "attach.json"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(read_file(d / "with.csv").find("1000000000000,101"), std::string::npos);
    const auto rep = nlohmann::json::parse(read_file(d / "attach.json"));
    EXPECT_EQ(rep["attached"].size(), 1u);
    EXPECT_EQ(rep["skipped"].size(), 1u);
    EXPECT_NE(read_file(d / "with_kinds.csv").find("1000000000000,PointSource"), std::string::npos);
}

TEST(Cli, ClassifyAndMetrics) {
    TempDir d;
    ASSERT_EQ(build_workspace(d).code, 0);
    std::string s = "COMID,PARAM,VALUE\n";
    for (int i = 0; i < 50; ++i) {
        s += "103,TP,80\n103,CHLA,20\n";  // polluted, downstream of A
        s += "101,TP,10\n101,CHLA,3\n";   // clean headwater
        s += "104,TP,30\n";               // too few chlorophyll samples
    }
    write_file(d / "samples.csv", s);
    auto r = run({"classify", "--samples", d / "samples.csv", "--out", d / "classes.csv"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(read_file(d / "classes.csv"), "COMID,CLASS\n101,Clean\n103,Polluted\n104,InsufficientData\n");

    r = run({"metrics", "--workspace", d / "ws", "--classes", d / "classes.csv", "--json", d / "metrics.json",
             "--summaries", d / "summaries.json"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto m = nlohmann::json::parse(read_file(d / "metrics.json"));
    ASSERT_EQ(m.size(), 2u);
    EXPECT_EQ(m[0]["cohort"], "Polluted");
    EXPECT_EQ(m[0]["total"], 1);
    EXPECT_EQ(m[1]["headwater"]["count"], 1);
    const auto sums = nlohmann::json::parse(read_file(d / "summaries.json"));
    EXPECT_EQ(sums["103"]["upstream_waterbodies"], 1);
    EXPECT_NEAR(sums["101"]["ag_fraction"].get<double>(), 15.0 * 10 / (65.0 * 10), 0.02);
}

TEST(Service, HandlersOnWorkspace) {
    TempDir d;
    ASSERT_EQ(build_workspace(d).code, 0);
    const auto snap = service::load_workspace(d / "ws");
    auto r = service::get_reach(*snap, Comid{A}, Direction::Downstream);
    EXPECT_EQ(r.status, 200);
    EXPECT_EQ(as_ids(r.body["waterbodies"]), (std::vector<std::uint64_t>{B, C}));
    EXPECT_EQ(service::get_reach(*snap, Comid{12345}, Direction::Upstream).status, 404);

    r = service::get_node(*snap, Comid{B});
    EXPECT_EQ(r.body["kind"], "Waterbody");
    EXPECT_EQ(r.body["huc12"], "070900020501");
    EXPECT_EQ(r.body["upstream_count"], 2);

    r = service::get_summary(*snap, Comid{C});
    EXPECT_EQ(r.status, 200);
    EXPECT_EQ(r.body["upstream_waterbodies"], 1);
    EXPECT_EQ(service::get_summary(*snap, Comid{C}).body, r.body);  // cached

    r = service::get_nodes_in_bbox(*snap, {19, -1, 31, 1});
    EXPECT_EQ(r.body["features"].size(), 2u);  // river 2 and lake B
    r = service::get_nodes_in_bbox(*snap, {-100, -100, 100, 100}, 3);
    EXPECT_EQ(r.body["features"].size(), 3u);
    EXPECT_TRUE(r.body["truncated"].get<bool>());
    EXPECT_FALSE(service::parse_bbox("1,2,3"));
    EXPECT_FALSE(service::parse_bbox("3,0,1,1"));
    EXPECT_TRUE(service::parse_bbox("0,0,1,1"));
}

TEST(Service, WhatIfIsStatelessAndDivergent) {
    TempDir d;
    ASSERT_EQ(build_workspace(d).code, 0);
    const auto snap = service::load_workspace(d / "ws");
    const auto before = snap->graph;

    const auto south = service::post_whatif(*snap, 3, 1, "spill");
    ASSERT_EQ(south.status, 200) << south.body.dump();
    EXPECT_EQ(south.body["attached_node"], A);
    EXPECT_EQ(south.body["source_huc12"], "070900020501");
    EXPECT_EQ(as_ids(south.body["downstream_waterbodies"]), (std::vector<std::uint64_t>{A, B, C}));
    EXPECT_EQ(service::post_whatif(*snap, 3, 1, "spill").text(), south.text());

    const auto north = service::post_whatif(*snap, 3, 20, "spill");
    ASSERT_EQ(north.status, 200);
    EXPECT_EQ(north.body["attached_node"], 6);
    EXPECT_EQ(as_ids(north.body["downstream_waterbodies"]), (std::vector<std::uint64_t>{D}));

    // Downstream sets equal the CLI downstream output from the attached node, plus that node.
    const auto cli = run({"downstream", "--graph", d / "ws/edges.csv", "--kinds", d / "ws/kinds.csv", "--node", "6"});
    const auto cj = nlohmann::json::parse(cli.out);
    auto expect = as_ids(cj["nodes"]);
    expect.insert(expect.begin(), 6);
    std::sort(expect.begin(), expect.end());
    EXPECT_EQ(as_ids(north.body["downstream_nodes"]), expect);

    EXPECT_TRUE(snap->graph == before);
    const auto outside = service::post_whatif(*snap, 500, 500, "spill");
    EXPECT_EQ(outside.status, 422);
    EXPECT_EQ(outside.body["error"], "no HUC12 contains this point");
}

TEST(Service, ReloadSwapsSnapshot) {
    TempDir d;
    ASSERT_EQ(build_workspace(d).code, 0);
    service::Service svc(d / "ws");
    const auto first = svc.snapshot();
    EXPECT_FALSE(first->aggregated);
    ASSERT_EQ(run({"aggregate", "--in", d / "ws/edges.csv", "--kinds", d / "ws/kinds.csv", "--hucs",
                   d / "ws/hucs.csv", "--out", d / "ws/edges_agg.csv", "--map", d / "ws/merges.csv"})
                  .code,
              0);
    svc.reload();
    const auto second = svc.snapshot();
    EXPECT_NE(first->id, second->id);
    ASSERT_TRUE(second->aggregated);
    EXPECT_FALSE(first->aggregated);  // old readers keep their snapshot
    // Original ids resolve to their survivors.
    EXPECT_EQ(second->resolve(Comid{2}), Comid{A});
    EXPECT_EQ(second->resolve(Comid{6}), Comid{D});
    EXPECT_TRUE(second->aggregated->contains(Comid{D}));  // isolated waterbody kept
}

TEST(Http, EndpointsMatchCliAndLeaveWorkspaceUntouched) {
    TempDir d;
    ASSERT_EQ(build_workspace(d).code, 0);
    const auto files_before = dir_contents(d.path / "ws");

    service::Service svc(d / "ws");
    httplib::Server server;
    service::configure_routes(server, svc);
    const int port = server.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port, 0);
    std::thread th([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    httplib::Client client("127.0.0.1", port);
    for (auto [path, dir] : {std::pair{"/upstream/", "upstream"}, std::pair{"/downstream/", "downstream"}})
        for (std::uint64_t node : {std::uint64_t{5}, A, C}) {
            const auto res = client.Get(path + std::to_string(node));
            ASSERT_TRUE(res);
            EXPECT_EQ(res->status, 200);
            EXPECT_EQ(res->get_header_value("X-Snapshot-Id"), std::to_string(svc.snapshot()->id));
            const auto cli = run({dir, "--graph", d / "ws/edges.csv", "--kinds", d / "ws/kinds.csv", "--hucs",
                                  d / "ws/hucs.csv", "--node", std::to_string(node)});
            EXPECT_EQ(res->body, cli.out) << path << node;
        }

    auto res = client.Get("/node/424242");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 404);
    res = client.Get("/summary/" + std::to_string(C));
    EXPECT_EQ(res->status, 200);
    res = client.Get("/nodes?bbox=-100,-100,100,100");
    EXPECT_EQ(res->status, 200);
    EXPECT_EQ(nlohmann::json::parse(res->body)["features"].size(), 7u);
    EXPECT_EQ(client.Get("/nodes?bbox=oops")->status, 400);
    EXPECT_EQ(client.Get("/health")->status, 200);

    const std::string body = R"({"x": 3, "y": 1, "label": "spill"})";
    const auto w1 = client.Post("/whatif", body, "application/json");
    const auto w2 = client.Post("/whatif", body, "application/json");
    ASSERT_TRUE(w1 && w2);
    EXPECT_EQ(w1->status, 200);
    EXPECT_EQ(w1->body, w2->body);
    EXPECT_EQ(client.Post("/whatif", R"({"x": 500, "y": 500})", "application/json")->status, 422);
    EXPECT_EQ(client.Post("/whatif", "nope", "application/json")->status, 400);

    server.stop();
    th.join();
    EXPECT_EQ(dir_contents(d.path / "ws"), files_before);
}
