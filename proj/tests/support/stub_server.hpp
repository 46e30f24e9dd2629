// Loopback HTTP server for exercising the external generator and bridger.
#pragma once

#include <functional>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace fact::testing {

class StubServer {
 public:
  // `handler` maps the parsed request body to (status, response body).
  using Handler = std::function<std::pair<int, std::string>(const nlohmann::json&)>;

  StubServer(const std::string& route, Handler handler) {
    server_.Post(route, [handler](const httplib::Request& req, httplib::Response& res) {
      nlohmann::json body = nlohmann::json::parse(req.body, nullptr, false);
      auto [status, text] = handler(body);
      res.status = status;
      res.set_content(text, "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }
  StubServer(const StubServer&) = delete;
  StubServer& operator=(const StubServer&) = delete;

  std::string url(const std::string& route) const { return "http://127.0.0.1:" + std::to_string(port_) + route; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace fact::testing
