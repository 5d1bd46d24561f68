#pragma once

#include "coremix/errors.hpp"
#include "coremix/http.hpp"
#include "coremix/image.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <semaphore>
#include <string>
#include <vector>

namespace coremix {

/// Image embedding. Construction rejects non-finite values and the zero vector.
class Embedding {
public:
  explicit Embedding(std::vector<double> values, std::string source_id = {})
      : values_(std::move(values)), source_id_(std::move(source_id)) {
    if (values_.empty())
      throw ValidationError("empty embedding");
    bool nonzero = false;
    for (double v : values_) {
      if (!std::isfinite(v))
        throw ValidationError("non-finite embedding value");
      nonzero = nonzero || v != 0.0;
    }
    if (!nonzero)
      throw ValidationError("zero embedding");
  }

  std::size_t dimension() const noexcept { return values_.size(); }
  const std::vector<double> &values() const noexcept { return values_; }
  const std::string &source_id() const noexcept { return source_id_; }

  double norm() const noexcept {
    double s = 0.0;
    for (double v : values_)
      s += v * v;
    return std::sqrt(s);
  }

  friend bool operator==(const Embedding &, const Embedding &) = default;

private:
  std::vector<double> values_;
  std::string source_id_;
};

class EncoderBackend {
public:
  virtual ~EncoderBackend() = default;
  virtual Embedding embed(const ImageBuffer &image) = 0;
  /// 0 until known (remote encoders learn it from the first response).
  virtual std::size_t dimension() const = 0;
};

// ---------------------------------------------------------------------------
// Mock encoder: 8x8 average pooling per channel, flattened (row, col, channel), L2-normalized.

inline constexpr std::size_t kMockGrid = 8;
inline constexpr std::size_t kMockDimension = kMockGrid * kMockGrid * ImageBuffer::kChannels;

inline Embedding mock_embed(const ImageBuffer &image, std::string source_id = {}) {
  if (image.empty())
    throw ValidationError("cannot embed an empty image");
  const std::size_t h = image.height();
  const std::size_t w = image.width();
  std::vector<double> pooled(kMockDimension, 0.0);
  for (std::size_t gy = 0; gy < kMockGrid; ++gy) {
    // Cells of images smaller than the grid reuse the nearest row/column.
    const std::size_t y0 = std::min(gy * h / kMockGrid, h - 1);
    const std::size_t y1 = std::max(y0 + 1, (gy + 1) * h / kMockGrid);
    for (std::size_t gx = 0; gx < kMockGrid; ++gx) {
      const std::size_t x0 = std::min(gx * w / kMockGrid, w - 1);
      const std::size_t x1 = std::max(x0 + 1, (gx + 1) * w / kMockGrid);
      const double count = static_cast<double>((y1 - y0) * (x1 - x0));
      for (std::size_t c = 0; c < ImageBuffer::kChannels; ++c) {
        double sum = 0.0;
        for (std::size_t y = y0; y < y1; ++y)
          for (std::size_t x = x0; x < x1; ++x)
            sum += image.at(y, x, c);
        pooled[(gy * kMockGrid + gx) * ImageBuffer::kChannels + c] = sum / count;
      }
    }
  }
  double norm = 0.0;
  for (double v : pooled)
    norm += v * v;
  norm = std::sqrt(norm);
  if (norm == 0.0)
    throw ValidationError("zero embedding");
  for (double &v : pooled)
    v /= norm;
  return Embedding(std::move(pooled), std::move(source_id));
}

class MockEncoder final : public EncoderBackend {
public:
  Embedding embed(const ImageBuffer &image) override { return mock_embed(image); }
  std::size_t dimension() const override { return kMockDimension; }
};

// ---------------------------------------------------------------------------
// Remote encoder: POST {endpoint}/embed {"image": base64 PNG} -> {"vector": [...]}

inline Embedding parse_embed_response(const std::string &body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception &e) {
    throw ProtocolError(std::string("embed response is not JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("vector") || !j["vector"].is_array())
    throw ProtocolError("embed response lacks a 'vector' array");
  std::vector<double> values;
  values.reserve(j["vector"].size());
  for (const auto &v : j["vector"]) {
    if (!v.is_number())
      throw ProtocolError("embed response vector holds a non-number");
    values.push_back(v.get<double>());
  }
  return Embedding(std::move(values)); // zero / non-finite vectors raise ValidationError here
}

class RemoteEncoder final : public EncoderBackend {
public:
  RemoteEncoder(std::string url, std::chrono::milliseconds timeout, std::ptrdiff_t max_in_flight = 4)
      : endpoint_(Endpoint::parse(url)), timeout_(timeout), slots_(max_in_flight) {}

  /// Every response must match the dimension of the first one seen by this encoder.
  Embedding embed(const ImageBuffer &image) override {
    const auto png = encode_png(image);
    nlohmann::json body = {{"image", base64_encode({reinterpret_cast<const char *>(png.data()), png.size()})}};
    HttpReply reply;
    {
      InFlightSlot slot(slots_);
      reply = http_post(endpoint_, "/embed", body.dump(), "application/json", timeout_);
    }
    auto e = parse_embed_response(reply.body);
    std::size_t expected = 0;
    if (!dimension_.compare_exchange_strong(expected, e.dimension()) && expected != e.dimension())
      throw ProtocolError("embedding dimension changed from " + std::to_string(expected) + " to " +
                          std::to_string(e.dimension()));
    return e;
  }

  std::size_t dimension() const override { return dimension_.load(); }

private:
  Endpoint endpoint_;
  std::chrono::milliseconds timeout_;
  std::counting_semaphore<> slots_;
  std::atomic<std::size_t> dimension_{0};
};

inline Embedding remote_embed(const std::string &url, const ImageBuffer &image, std::chrono::milliseconds timeout) {
  return RemoteEncoder(url, timeout, 1).embed(image);
}

} // namespace coremix
