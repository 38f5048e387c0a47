#pragma once

#include <filesystem>
#include <optional>
#include <string>

// httplib's default backlog of 5 refuses bursts of concurrent clients.
#ifndef CPPHTTPLIB_LISTEN_BACKLOG
#define CPPHTTPLIB_LISTEN_BACKLOG 128
#endif
#include <httplib.h>
#include <json.hpp>

#include "errors.hpp"
#include "service.hpp"
#include "trace_io.hpp"

namespace curvecaptcha {

// HTTP binding of CaptchaService:
//   POST /v1/challenge                {variant}         -> 201 payload
//   POST /v1/challenge/{id}/refresh   {variant}?        -> 201 payload
//   POST /v1/verify                   {id, strokes}     -> 200 verdict
//   GET  /v1/healthz                                    -> 200 {"status":"ok"}
class HttpFrontend {
 public:
  explicit HttpFrontend(CaptchaService& service, std::optional<std::filesystem::path> static_dir = std::nullopt)
      : service_(service) {
    server_.set_payload_max_length(4 << 20);
    // httplib defaults to SO_REUSEPORT, which would let two instances split
    // one port and each other's challenges.
    server_.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
    });
    server_.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                 {"Access-Control-Allow-Headers", "Content-Type"},
                                 {"Cache-Control", "no-store"}});
    server_.Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    server_.Get("/v1/healthz", [](const httplib::Request&, httplib::Response& res) {
      json_reply(res, 200, {{"status", "ok"}});
    });
    server_.Post("/v1/challenge", [this](const httplib::Request& req, httplib::Response& res) {
      issue(res, [&] { return service_.create_challenge(requested_variant(req)); });
    });
    server_.Post(R"(/v1/challenge/([A-Za-z0-9_-]{1,128})/refresh)",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   const std::string id = req.matches[1];
                   issue(res, [&] { return service_.refresh_challenge(id, requested_variant(req)); });
                 });
    server_.Post("/v1/verify", [this](const httplib::Request& req, httplib::Response& res) {
      std::string id;
      Trace trace;
      try {
        const auto doc = nlohmann::json::parse(req.body);
        if (!doc.is_object() || !doc.contains("id") || !doc["id"].is_string())
          throw ProtocolError("verify body needs a string \"id\"");
        id = doc["id"].get<std::string>();
        trace = trace_from_json(doc);
      } catch (const nlohmann::json::exception&) {
        return json_reply(res, 400, {{"error", "body is not valid JSON"}});
      } catch (const ProtocolError& e) {
        return json_reply(res, 400, {{"error", e.what()}});
      }
      json_reply(res, 200, verdict_to_json(service_.submit_trace(id, trace)));
    });
    if (static_dir) server_.set_mount_point("/", static_dir->string());
  }

  // Returns the bound port, or -1.
  int bind(const std::string& host, int port) {
    if (port == 0) return server_.bind_to_any_port(host);
    return server_.bind_to_port(host, port) ? port : -1;
  }
  bool listen_after_bind() { return server_.listen_after_bind(); }
  void stop() { server_.stop(); }
  bool is_running() const { return server_.is_running(); }
  void wait_until_ready() const { server_.wait_until_ready(); }

 private:
  static void json_reply(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static std::optional<Variant> requested_variant(const httplib::Request& req) {
    if (req.body.empty()) return std::nullopt;
    const auto doc = nlohmann::json::parse(req.body);  // errors mapped in issue()
    if (!doc.is_object()) throw ProtocolError("body must be a JSON object");
    if (!doc.contains("variant")) return std::nullopt;
    if (!doc["variant"].is_string()) throw ProtocolError("variant must be a string");
    try {
      return parse_variant(doc["variant"].get<std::string>());
    } catch (const ParameterError& e) {
      throw ProtocolError(e.what());
    }
  }

  template <typename F>
  void issue(httplib::Response& res, F&& make) {
    try {
      json_reply(res, 201, payload_to_json(make()));
    } catch (const nlohmann::json::exception&) {
      json_reply(res, 400, {{"error", "body is not valid JSON"}});
    } catch (const ProtocolError& e) {
      json_reply(res, 400, {{"error", e.what()}});
    } catch (const ResourceExhausted&) {
      json_reply(res, 503, {{"error", "challenge capacity exhausted"}});
    }
  }

  CaptchaService& service_;
  httplib::Server server_;
};

}  // namespace curvecaptcha
