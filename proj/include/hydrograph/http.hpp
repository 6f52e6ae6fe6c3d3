#pragma once

// HTTP binding of the service handlers (cpp-httplib).

#include "hydrograph/service.hpp"

#include <httplib.h>

#include <charconv>
#include <ostream>
#include <string>

namespace hydrograph::service {

namespace detail {

inline std::optional<Comid> parse_comid(const std::string& s) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || v == 0) return std::nullopt;
    return Comid{v};
}

inline void send(httplib::Response& res, const Snapshot& snap, const Response& r) {
    res.status = r.status;
    res.set_header("X-Snapshot-Id", std::to_string(snap.id));
    res.set_content(r.text(), "application/json");
}

} // namespace detail

inline void configure_routes(httplib::Server& server, Service& service) {
    using httplib::Request;
    using httplib::Response;

    auto by_comid = [&service](auto handler) {
        return [&service, handler](const Request& req, Response& res) {
            const auto snap = service.snapshot();
            const auto c = detail::parse_comid(req.matches[1]);
            if (!c) return detail::send(res, *snap, error(404, "invalid comid"));
            detail::send(res, *snap, handler(*snap, *c));
        };
    };

    server.Get(R"(/node/(\d+))", by_comid([](const Snapshot& s, Comid c) { return get_node(s, c); }));
    server.Get(R"(/upstream/(\d+))",
               by_comid([](const Snapshot& s, Comid c) { return get_reach(s, c, Direction::Upstream); }));
    server.Get(R"(/downstream/(\d+))",
               by_comid([](const Snapshot& s, Comid c) { return get_reach(s, c, Direction::Downstream); }));
    server.Get(R"(/summary/(\d+))", by_comid([](const Snapshot& s, Comid c) { return get_summary(s, c); }));

    server.Get("/nodes", [&service](const Request& req, Response& res) {
        const auto snap = service.snapshot();
        geo::BBox box{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
                      std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
        if (req.has_param("bbox")) {
            const auto b = parse_bbox(req.get_param_value("bbox"));
            if (!b) return detail::send(res, *snap, error(400, "bbox must be minx,miny,maxx,maxy"));
            box = *b;
        }
        detail::send(res, *snap, get_nodes_in_bbox(*snap, box));
    });

    server.Get("/health", [&service](const Request&, Response& res) {
        const auto snap = service.snapshot();
        detail::send(res, *snap,
                     {200,
                      {{"snapshot", snap->id},
                       {"nodes", snap->active().node_count()},
                       {"aggregated", snap->aggregated.has_value()}}});
    });

    server.Post("/whatif", [&service](const Request& req, Response& res) {
        const auto snap = service.snapshot();
        nlohmann::json body;
        try {
            body = nlohmann::json::parse(req.body);
        } catch (const nlohmann::json::parse_error&) {
            return detail::send(res, *snap, error(400, "body must be JSON {x, y, label}"));
        }
        if (!body.is_object() || !body.contains("x") || !body.contains("y") || !body["x"].is_number() ||
            !body["y"].is_number())
            return detail::send(res, *snap, error(400, "body must be JSON {x, y, label}"));
        const std::string label = body.contains("label") && body["label"].is_string()
                                      ? body["label"].get<std::string>()
                                      : std::string("source");
        detail::send(res, *snap, post_whatif(*snap, body["x"].get<double>(), body["y"].get<double>(), label));
    });

    server.set_exception_handler([](const Request&, Response& res, std::exception_ptr ep) {
        std::string msg = "internal error";
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            msg = e.what();
        } catch (...) {
        }
        res.status = 500;
        res.set_content(error(500, msg).text(), "application/json");
    });
}

/// Blocks serving the workspace until the process is stopped.
inline void run_server(const std::string& workspace, const std::string& host, int port, std::ostream& log) {
    Service service(workspace);
    httplib::Server server;
    configure_routes(server, service);
    log << "serving " << workspace << " on http://" << host << ":" << port << "\n" << std::flush;
    if (!server.listen(host, port)) throw IoError("cannot listen on " + host + ":" + std::to_string(port));
}

} // namespace hydrograph::service
