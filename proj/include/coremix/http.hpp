#pragma once

// Minimal JSON-over-HTTP POST shared by the remote generator and encoder clients.

#include "coremix/errors.hpp"

#include <httplib.h>

#include <boost/beast/core/detail/base64.hpp>

#include <chrono>
#include <semaphore>
#include <string>
#include <string_view>

namespace coremix {

struct Endpoint {
  std::string scheme_host_port; // "http://host:port"
  std::string path_prefix;      // "" or "/api"

  static Endpoint parse(std::string_view url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos || url.substr(0, scheme_end) != "http")
      throw ValidationError("endpoint must be an http:// URL: " + std::string(url));
    const auto path_start = url.find('/', scheme_end + 3);
    Endpoint e;
    e.scheme_host_port = std::string(url.substr(0, path_start));
    if (path_start != std::string_view::npos) {
      e.path_prefix = std::string(url.substr(path_start));
      while (!e.path_prefix.empty() && e.path_prefix.back() == '/')
        e.path_prefix.pop_back();
    }
    if (e.scheme_host_port.size() <= scheme_end + 3)
      throw ValidationError("endpoint has no host: " + std::string(url));
    return e;
  }
};

struct HttpReply {
  std::string body;
  std::string content_type;
};

/// POSTs `body` to endpoint + route. Maps transport failures and non-200 statuses to typed errors.
inline HttpReply http_post(const Endpoint &endpoint, std::string_view route, const std::string &body,
                           const char *content_type, std::chrono::milliseconds timeout) {
  httplib::Client client(endpoint.scheme_host_port);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  const auto target = endpoint.path_prefix + std::string(route);
  const auto start = std::chrono::steady_clock::now();
  auto res = client.Post(target, body, content_type);
  if (!res) {
    const auto err = res.error();
    const auto elapsed = std::chrono::steady_clock::now() - start;
    const std::string where = endpoint.scheme_host_port + target;
    if (err == httplib::Error::ConnectionTimeout || (err == httplib::Error::Read && elapsed >= timeout * 9 / 10))
      throw TimeoutError("timed out after " + std::to_string(timeout.count()) + " ms: " + where);
    throw ConnectionError(where + ": " + httplib::to_string(err));
  }
  if (res->status != 200)
    throw StatusError(res->status, res->body);
  return {std::move(res->body), res->get_header_value("Content-Type")};
}

/// Holds one slot of a backend's in-flight limit for the guard's lifetime.
class InFlightSlot {
public:
  explicit InFlightSlot(std::counting_semaphore<> &slots) : slots_(slots) { slots_.acquire(); }
  ~InFlightSlot() { slots_.release(); }
  InFlightSlot(const InFlightSlot &) = delete;
  InFlightSlot &operator=(const InFlightSlot &) = delete;

private:
  std::counting_semaphore<> &slots_;
};

inline std::string base64_encode(std::string_view bytes) {
  namespace b64 = boost::beast::detail::base64;
  std::string out(b64::encoded_size(bytes.size()), '\0');
  out.resize(b64::encode(out.data(), bytes.data(), bytes.size()));
  return out;
}

inline std::string base64_decode(std::string_view text) {
  namespace b64 = boost::beast::detail::base64;
  if (text.size() % 4 != 0)
    throw ProtocolError("invalid base64 payload");
  std::size_t body = text.size();
  while (body > 0 && text.size() - body < 2 && text[body - 1] == '=')
    --body;
  std::string out(b64::decoded_size(text.size()), '\0');
  const auto [written, read] = b64::decode(out.data(), text.data(), body);
  if (read != body)
    throw ProtocolError("invalid base64 payload");
  out.resize(written);
  return out;
}

} // namespace coremix
