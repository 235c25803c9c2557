#pragma once

#include <chrono>
#include <future>
#include <memory>
#include <string>
#include <thread>

#include <httplib.h>

#include "nbdoc/service/suggest.hpp"

namespace nbdoc::service {

inline constexpr std::chrono::seconds kRequestTimeout{5};

// HTTP front of a SuggestEngine: POST /suggest, GET /health, GET /schema.
// Without an engine every model route answers 503.
class SuggestServer {
 public:
  explicit SuggestServer(std::shared_ptr<const SuggestEngine> engine,
                         std::chrono::milliseconds timeout = kRequestTimeout)
      : engine_(std::move(engine)), timeout_(timeout) {
    svr_.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    svr_.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.status = 204;
    });
    svr_.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
      if (!engine_) {
        reply(res, 503, {{"status", "no model loaded"}, {"model_version", nullptr}});
        return;
      }
      reply(res, 200, {{"status", "ok"}, {"model_version", engine_->model_version()}});
    });
    svr_.Get("/schema", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(suggest_response_schema().dump(2), "application/schema+json");
    });
    svr_.Post("/suggest", [this](const httplib::Request& req, httplib::Response& res) { handle_suggest(req, res); });
  }

  // Binds to `port` (0 picks a free one) and returns the bound port, or -1.
  int bind(const std::string& host, int port) {
    port_ = port == 0 ? svr_.bind_to_any_port(host) : (svr_.bind_to_port(host, port) ? port : -1);
    return port_;
  }
  // Serves until stop(); call after bind().
  bool listen() { return svr_.listen_after_bind(); }
  void stop() { svr_.stop(); }
  void wait_until_ready() const { svr_.wait_until_ready(); }
  int port() const { return port_; }

 private:
  static void reply(httplib::Response& res, int status, const nlohmann::ordered_json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  void handle_suggest(const httplib::Request& req, httplib::Response& res) {
    if (!engine_) {
      reply(res, 503, {{"error", "no model loaded"}});
      return;
    }
    SuggestRequest sr;
    try {
      sr = parse_suggest_request(req.body);
    } catch (const RequestError& e) {
      reply(res, e.status, {{"error", e.what()}});
      return;
    }
    // Decoding runs on its own thread so a slow request can be answered
    // with 503 at the deadline; the engine outlives it through the copy.
    auto task = std::make_shared<std::packaged_task<nlohmann::ordered_json()>>(
        [engine = engine_, sr] { return engine->suggest(sr); });
    auto result = task->get_future();
    std::thread([task] { (*task)(); }).detach();
    if (result.wait_for(timeout_) != std::future_status::ready) {
      reply(res, 503, {{"error", "suggestion timed out"}});
      return;
    }
    try {
      reply(res, 200, result.get());
    } catch (const std::exception& e) {
      reply(res, 500, {{"error", e.what()}});
    }
  }

  httplib::Server svr_;
  std::shared_ptr<const SuggestEngine> engine_;
  std::chrono::milliseconds timeout_;
  int port_ = -1;
};

}  // namespace nbdoc::service
