#pragma once

#include <tfpc/service.hpp>

#include <httplib.h>

namespace tfpc {

/// Routes every request of a cpp-httplib server through `svc.handle`.
inline std::unique_ptr<httplib::Server> make_http_server(service& svc) {
    auto server = std::make_unique<httplib::Server>();
    server->set_payload_max_length(svc.limits().max_dataset_bytes + 1);
    auto forward = [&svc](const httplib::Request& in, httplib::Response& out) {
        http_request req;
        req.method = in.method;
        req.path = in.path;
        for (const auto& [k, v] : in.params) req.query.emplace(k, v);
        req.body = in.body;
        auto res = svc.handle(req);
        out.status = res.status;
        out.set_content(res.body, res.content_type);
    };
    server->Get(R"(/.*)", forward);
    server->Post(R"(/.*)", forward);
    return server;
}

/// Blocks serving on host:port until the server is stopped.
inline bool serve(service& svc, const std::string& host, int port) {
    auto server = make_http_server(svc);
    return server->listen(host, port);
}

} // namespace tfpc
