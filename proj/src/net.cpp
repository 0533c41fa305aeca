#include "cdi/net.hpp"

#include <thread>

#include "httplib.h"

namespace cdi::net {

RateLimiter::RateLimiter(double rps) {
  if (rps > 0) {
    interval_ = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(1.0 / rps));
  }
}

void RateLimiter::acquire() {
  if (interval_.count() == 0) return;
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(mu_);
    const auto now = std::chrono::steady_clock::now();
    slot = std::max(now, next_);
    next_ = slot + interval_;
  }
  std::this_thread::sleep_until(slot);
}

Endpoint parse_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorKind::InvalidArgument, "endpoint without scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

namespace {

nlohmann::json parse_body(const httplib::Result& res, const Endpoint& ep, ErrorKind kind) {
  if (!res) {
    throw Error(kind, ep.base + ep.path + ": " + httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    throw Error(kind, ep.base + ep.path + ": HTTP " + std::to_string(res->status));
  }
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::parse_error&) {
    throw Error(kind, ep.base + ep.path + ": response is not JSON");
  }
}

}  // namespace

nlohmann::json get_json(const Endpoint& ep, const std::multimap<std::string, std::string>& params,
                        ErrorKind kind, int timeout_seconds) {
  httplib::Client client(ep.base);
  client.set_connection_timeout(timeout_seconds);
  client.set_read_timeout(timeout_seconds);
  client.set_follow_location(true);
  httplib::Params p(params.begin(), params.end());
  return parse_body(client.Get(ep.path, p, httplib::Headers{}), ep, kind);
}

nlohmann::json post_json(const Endpoint& ep, const nlohmann::json& body, ErrorKind kind,
                         int timeout_seconds) {
  httplib::Client client(ep.base);
  client.set_connection_timeout(timeout_seconds);
  client.set_read_timeout(timeout_seconds);
  return parse_body(client.Post(ep.path, body.dump(), "application/json"), ep, kind);
}

}  // namespace cdi::net
