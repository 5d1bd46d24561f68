#pragma once

#include "coremix/errors.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

namespace coremix {

/// H x W x 3 image, row-major interleaved, channel values in [0, 1].
class ImageBuffer {
public:
  static constexpr std::size_t kChannels = 3;

  ImageBuffer() = default;

  ImageBuffer(std::size_t height, std::size_t width, double fill = 0.0)
      : height_(height), width_(width), data_(height * width * kChannels, fill) {
    if (height == 0 || width == 0)
      throw ValidationError("image dimensions must be >= 1");
    if (!(fill >= 0.0 && fill <= 1.0))
      throw ValidationError("image fill value outside [0,1]");
  }

  ImageBuffer(std::size_t height, std::size_t width, std::vector<double> data)
      : height_(height), width_(width), data_(std::move(data)) {
    if (height == 0 || width == 0)
      throw ValidationError("image dimensions must be >= 1");
    if (data_.size() != height * width * kChannels)
      throw ValidationError("image data size does not match dimensions");
    for (double v : data_)
      if (!(v >= 0.0 && v <= 1.0)) // also rejects NaN
        throw ValidationError("image value outside [0,1]");
  }

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t channels() const noexcept { return kChannels; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double &at(std::size_t y, std::size_t x, std::size_t c) { return data_[(y * width_ + x) * kChannels + c]; }
  double at(std::size_t y, std::size_t x, std::size_t c) const { return data_[(y * width_ + x) * kChannels + c]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool same_shape(const ImageBuffer &o) const noexcept { return height_ == o.height_ && width_ == o.width_; }

  friend bool operator==(const ImageBuffer &, const ImageBuffer &) = default;

private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> data_;
};

inline std::uint8_t to_byte(double v) noexcept {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

inline double from_byte(std::uint8_t b) noexcept { return static_cast<double>(b) / 255.0; }

/// Rounds every value to the nearest 8-bit level, so the image survives a PNG round trip unchanged.
inline ImageBuffer quantize(const ImageBuffer &img) {
  ImageBuffer out = img;
  for (double &v : out.data())
    v = from_byte(to_byte(v));
  return out;
}

/// Bilinear resize with half-pixel centers (edge pixels clamped).
inline ImageBuffer resize_bilinear(const ImageBuffer &src, std::size_t height, std::size_t width) {
  if (src.height() == height && src.width() == width)
    return src;
  ImageBuffer out(height, width);
  const double sy = static_cast<double>(src.height()) / static_cast<double>(height);
  const double sx = static_cast<double>(src.width()) / static_cast<double>(width);
  const auto max_y = static_cast<double>(src.height() - 1);
  const auto max_x = static_cast<double>(src.width() - 1);
  for (std::size_t y = 0; y < height; ++y) {
    const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, max_y);
    const auto y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, src.height() - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < width; ++x) {
      const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, max_x);
      const auto x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, src.width() - 1);
      const double wx = fx - static_cast<double>(x0);
      for (std::size_t c = 0; c < ImageBuffer::kChannels; ++c) {
        const double top = src.at(y0, x0, c) * (1.0 - wx) + src.at(y0, x1, c) * wx;
        const double bottom = src.at(y1, x0, c) * (1.0 - wx) + src.at(y1, x1, c) * wx;
        out.at(y, x, c) = std::clamp(top * (1.0 - wy) + bottom * wy, 0.0, 1.0);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// PNG codec (libpng simplified API). Decoding always goes through RGBA so that
// gray, palette and alpha inputs all land on 3 channels; alpha is dropped.

inline ImageBuffer decode_png(std::span<const std::uint8_t> bytes) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    throw ParseError(std::string("png decode: ") + image.message);
  image.format = PNG_FORMAT_RGBA;
  std::vector<std::uint8_t> rgba(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, rgba.data(), 0, nullptr)) {
    png_image_free(&image);
    throw ParseError(std::string("png decode: ") + image.message);
  }
  const std::size_t h = image.height;
  const std::size_t w = image.width;
  std::vector<double> data(h * w * 3);
  for (std::size_t i = 0; i < h * w; ++i)
    for (std::size_t c = 0; c < 3; ++c)
      data[i * 3 + c] = from_byte(rgba[i * 4 + c]);
  return ImageBuffer(h, w, std::move(data));
}

inline std::vector<std::uint8_t> encode_png(const ImageBuffer &img) {
  std::vector<std::uint8_t> rgb(img.size());
  std::transform(img.data().begin(), img.data().end(), rgb.begin(), to_byte);
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, rgb.data(), 0, nullptr))
    throw Error(std::string("png encode: ") + image.message);
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, rgb.data(), 0, nullptr))
    throw Error(std::string("png encode: ") + image.message);
  out.resize(size);
  return out;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::filesystem::path &path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out)
    throw IoError("short write to " + path.string());
}

inline ImageBuffer read_png(const std::filesystem::path &path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_png(bytes);
  } catch (const ParseError &e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

inline void write_png(const std::filesystem::path &path, const ImageBuffer &img) {
  write_file_bytes(path, encode_png(img));
}

} // namespace coremix
