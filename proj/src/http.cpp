#include "fact/http.hpp"

#include <cmath>

#include <httplib.h>

#include "fact/errors.hpp"
#include "fact/program_gen.hpp"

namespace fact {

UrlParts split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw ConfigError("url must include a scheme: '" + url + "'");
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

Json post_json(const std::string& url, const Json& body, double timeout_seconds) {
  const auto parts = split_url(url);
  httplib::Client client(parts.scheme_host_port);
  const auto seconds = static_cast<time_t>(std::floor(timeout_seconds));
  const auto micros = static_cast<time_t>((timeout_seconds - std::floor(timeout_seconds)) * 1e6);
  client.set_connection_timeout(seconds, micros);
  client.set_read_timeout(seconds, micros);
  client.set_write_timeout(seconds, micros);
  auto response = client.Post(parts.path, body.dump(), "application/json");
  if (!response) throw TransportError("POST " + url + " failed: " + httplib::to_string(response.error()));
  if (response->status < 200 || response->status >= 300)
    throw TransportError("POST " + url + " returned status " + std::to_string(response->status));
  try {
    return Json::parse(response->body);
  } catch (const Json::exception& e) {
    throw TransportError("POST " + url + " returned a non-JSON body");
  }
}

}  // namespace fact
