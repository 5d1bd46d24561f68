#pragma once

// In-process HTTP stubs for the /generate and /embed wire protocols, on an
// ephemeral localhost port. Used by the integration tests and as a reference
// for real backend adapters.

#include "coremix/embedding.hpp"
#include "coremix/errors.hpp"
#include "coremix/generation.hpp"
#include "coremix/http.hpp"

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <memory>
#include <string>
#include <thread>
#include <vector>

namespace coremix {

struct StubBehavior {
  enum class Mode { echo_mock, fixed_error, delay, wrong_dimension, zero_embedding };

  Mode mode = Mode::echo_mock;
  int status = 400;                   // fixed_error
  std::string message;                // fixed_error
  std::chrono::milliseconds delay{0}; // delay: sleep, then answer like echo_mock

  static StubBehavior echo() { return {}; }
  static StubBehavior error(int status, std::string message) { return {Mode::fixed_error, status, std::move(message)}; }
  static StubBehavior delayed(std::chrono::milliseconds d) { return {Mode::delay, 0, {}, d}; }
  static StubBehavior wrong_dimension() { return {Mode::wrong_dimension}; }
  static StubBehavior zero_embedding() { return {Mode::zero_embedding}; }
};

class StubServer {
public:
  explicit StubServer(StubBehavior behavior, const std::string &host = "127.0.0.1", int port = 0)
      : behavior_(std::move(behavior)) {
    server_.Post("/generate", [this](const httplib::Request &req, httplib::Response &res) { on_generate(req, res); });
    server_.Post("/embed", [this](const httplib::Request &req, httplib::Response &res) { on_embed(req, res); });
    port_ = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
    if (port_ <= 0)
      throw IoError("stub could not bind " + host + (port ? ":" + std::to_string(port) : std::string()));
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~StubServer() {
    server_.stop();
    if (thread_.joinable())
      thread_.join();
  }

  StubServer(const StubServer &) = delete;
  StubServer &operator=(const StubServer &) = delete;

  int port() const noexcept { return port_; }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  std::size_t requests() const noexcept { return requests_.load(); }

  /// Blocks until the server stops (used by the CLI's `stub` command).
  void wait() {
    if (thread_.joinable())
      thread_.join();
  }

private:
  using Mode = StubBehavior::Mode;

  bool preamble(httplib::Response &res) {
    ++requests_;
    if (behavior_.mode == Mode::fixed_error) {
      res.status = behavior_.status;
      res.set_content(behavior_.message, "text/plain");
      return false;
    }
    if (behavior_.mode == Mode::delay)
      std::this_thread::sleep_for(behavior_.delay);
    return true;
  }

  void on_generate(const httplib::Request &req, httplib::Response &res) {
    if (!preamble(res))
      return;
    GenerationRequest request;
    try {
      request = generation_request_from_json(nlohmann::json::parse(req.body));
      validate(request);
    } catch (const std::exception &e) {
      res.status = 400;
      res.set_content(e.what(), "text/plain");
      return;
    }
    if (behavior_.mode == Mode::wrong_dimension)
      request.width += 8;
    const auto png = encode_png(mock_generate(request));
    res.set_content(std::string(png.begin(), png.end()), "image/png");
  }

  void on_embed(const httplib::Request &req, httplib::Response &res) {
    if (!preamble(res))
      return;
    std::vector<double> vector;
    if (behavior_.mode == Mode::wrong_dimension) {
      // first answer has 512 dimensions, every later one 256
      vector.assign(embed_calls_++ == 0 ? 512 : 256, 0.5);
    } else {
      ImageBuffer image;
      try {
        const auto j = nlohmann::json::parse(req.body);
        const auto bytes = base64_decode(j.at("image").get<std::string>());
        image = decode_png({reinterpret_cast<const std::uint8_t *>(bytes.data()), bytes.size()});
      } catch (const std::exception &e) {
        res.status = 400;
        res.set_content(e.what(), "text/plain");
        return;
      }
      if (behavior_.mode == Mode::zero_embedding)
        vector.assign(kMockDimension, 0.0);
      else
        vector = mock_embed(image).values();
    }
    res.set_content(nlohmann::json{{"vector", vector}}.dump(), "application/json");
  }

  StubBehavior behavior_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = -1;
  std::atomic<std::size_t> requests_{0};
  std::atomic<std::size_t> embed_calls_{0};
};

inline std::unique_ptr<StubServer> serve_stub(StubBehavior behavior) {
  return std::make_unique<StubServer>(std::move(behavior));
}

} // namespace coremix
