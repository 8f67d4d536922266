// Copyright 2026 The edge-iis Authors
// SPDX-License-Identifier: Apache-2.0

#include <httplib.h>

#include <atomic>

#include "iis/api.hpp"

namespace iis
{

struct HttpServer::Impl
{
  ManagementApi& api;
  httplib::Server server;
  std::atomic<bool> stopping{false};

  explicit Impl(ManagementApi& a) : api(a) {}
};

namespace
{

void respond(httplib::Response& res, const ApiResponse& r)
{
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

std::string target_of(const httplib::Request& req)
{
  std::string target = req.path;
  std::string query;
  for (const auto& [k, v] : req.params) {
    query += (query.empty() ? "" : "&") + k + "=" + v;
  }
  return query.empty() ? target : target + "?" + query;
}

}  // namespace

HttpServer::HttpServer(ManagementApi& api, std::string static_dir) : impl_(std::make_unique<Impl>(api))
{
  auto& server = impl_->server;
  Impl* impl = impl_.get();

  server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  if (!static_dir.empty()) {
    server.set_mount_point("/", static_dir);
  }

  server.Get("/api/stream", [impl](const httplib::Request& req, httplib::Response& res) {
    std::uint64_t since = 0;
    try {
      if (req.has_param("since")) since = parse_since("since=" + req.get_param_value("since"));
      if (req.has_header("Last-Event-ID")) since = std::stoull(req.get_header_value("Last-Event-ID"));
    } catch (const std::exception& e) {
      respond(res, {400, nlohmann::json{{"error", e.what()}}});
      return;
    }
    auto cursor = std::make_shared<std::uint64_t>(since);
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider("text/event-stream", [impl, cursor](std::size_t, httplib::DataSink& sink) {
      if (impl->stopping) {
        sink.done();
        return true;
      }
      const auto batch = impl->api.events().wait_since(*cursor, std::chrono::milliseconds(500));
      for (const auto& e : batch) {
        const std::string frame = sse_frame(e);
        if (!sink.write(frame.data(), frame.size())) return false;
        *cursor = e.seq;
      }
      if (batch.empty()) {
        if (impl->api.events().closed()) {
          sink.done();
          return true;
        }
        static const std::string keepalive = ": keepalive\n\n";
        if (!sink.write(keepalive.data(), keepalive.size())) return false;
      }
      return true;
    });
  });

  auto forward = [impl](const httplib::Request& req, httplib::Response& res) {
    respond(res, impl->api.handle(req.method, target_of(req), req.body));
  };
  server.Get(R"(/api/.*)", forward);
  server.Post(R"(/api/.*)", forward);
  server.Put(R"(/api/.*)", forward);
  server.Delete(R"(/api/.*)", forward);
}

HttpServer::~HttpServer()
{
  stop();
}

int HttpServer::bind(const std::string& host, int port)
{
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

void HttpServer::serve()
{
  impl_->server.listen_after_bind();
}

void HttpServer::stop()
{
  impl_->stopping = true;
  impl_->server.stop();
}

}  // namespace iis
