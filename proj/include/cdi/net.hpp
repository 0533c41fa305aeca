#pragma once

#include <chrono>
#include <map>
#include <mutex>
#include <string>

#include "cdi/jsonl.hpp"

namespace cdi::net {

// Spaces calls at least 1/rps seconds apart. rps <= 0 disables limiting.
class RateLimiter {
 public:
  explicit RateLimiter(double rps);
  void acquire();

 private:
  std::mutex mu_;
  std::chrono::steady_clock::duration interval_{};
  std::chrono::steady_clock::time_point next_{};
};

// "http://host:port/path" split into the client base and the request path.
struct Endpoint {
  std::string base;
  std::string path;
};

Endpoint parse_endpoint(const std::string& url);

// Throws Error(kind) on connection failure, non-2xx status or a body that is
// not JSON.
nlohmann::json get_json(const Endpoint& ep, const std::multimap<std::string, std::string>& params,
                        ErrorKind kind, int timeout_seconds = 30);
nlohmann::json post_json(const Endpoint& ep, const nlohmann::json& body, ErrorKind kind,
                         int timeout_seconds = 30);

}  // namespace cdi::net
