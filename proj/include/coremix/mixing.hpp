#pragma once

#include "coremix/errors.hpp"
#include "coremix/image.hpp"
#include "coremix/manifest.hpp"
#include "coremix/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

namespace coremix {

struct MixConfig {
  double pi = 0.5; // probability of a pixel-wise blend
  double lambda_min = 0.3;
  double lambda_max = 0.7;
  double area_min = 0.1; // patch area as a fraction of the image
  double area_max = 0.5;
  double aspect_min = 0.5;
  double aspect_max = 2.0;
};

inline void validate(const MixConfig &c) {
  auto unit_range = [](double lo, double hi, const char *name) {
    if (!(lo >= 0.0 && hi <= 1.0 && lo <= hi))
      throw ValidationError(std::string(name) + " must satisfy 0 <= min <= max <= 1");
  };
  if (!(c.pi >= 0.0 && c.pi <= 1.0))
    throw ValidationError("pi must be in [0,1]");
  unit_range(c.lambda_min, c.lambda_max, "lambda range");
  unit_range(c.area_min, c.area_max, "patch area range");
  if (!(c.aspect_min > 0.0 && c.aspect_min <= c.aspect_max))
    throw ValidationError("aspect range must satisfy 0 < min <= max");
}

struct MixSpec {
  MixKind kind = MixKind::pixel;
  double lambda = 1.0;
  PatchRect patch_rect;
  PatchDirection direction = PatchDirection::original_onto_generated;
  bool eta = true; // true selects the pixel-wise blend
  std::uint64_t rng_seed = 0;

  static MixSpec pixel(double lambda) { return {MixKind::pixel, lambda, {}, {}, true, 0}; }
  static MixSpec patch(PatchRect rect, PatchDirection dir) { return {MixKind::patch, 0.0, rect, dir, false, 0}; }
  friend bool operator==(const MixSpec &, const MixSpec &) = default;
};

namespace detail {
inline void require_same_shape(const ImageBuffer &a, const ImageBuffer &b) {
  if (!a.same_shape(b))
    throw ValidationError("mix inputs differ in size: " + std::to_string(a.height()) + "x" + std::to_string(a.width()) +
                          " vs " + std::to_string(b.height()) + "x" + std::to_string(b.width()));
}

inline void require_in_bounds(const PatchRect &r, std::size_t height, std::size_t width) {
  if (r.w < 1 || r.h < 1)
    throw ValidationError("patch must have positive width and height");
  if (r.x + r.w > width || r.y + r.h > height)
    throw ValidationError("patch (" + std::to_string(r.x) + "," + std::to_string(r.y) + "," + std::to_string(r.w) +
                          "," + std::to_string(r.h) + ") exceeds image bounds");
}
} // namespace detail

/// out = lambda * original + (1 - lambda) * generated.
inline ImageBuffer mix_pixel(const ImageBuffer &original, const ImageBuffer &generated, double lambda) {
  detail::require_same_shape(original, generated);
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw ValidationError("lambda must be in [0,1]");
  ImageBuffer out(original.height(), original.width());
  const auto o = original.data();
  const auto g = generated.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i)
    dst[i] = std::clamp(lambda * o[i] + (1.0 - lambda) * g[i], 0.0, 1.0);
  return out;
}

/// Cut-and-paste of one rectangle. original_onto_generated takes `rect` from the
/// original and everything else from the generated image; the other direction swaps roles.
inline ImageBuffer mix_patch(const ImageBuffer &original, const ImageBuffer &generated, const PatchRect &rect,
                             PatchDirection direction) {
  detail::require_same_shape(original, generated);
  detail::require_in_bounds(rect, original.height(), original.width());
  const bool original_inside = direction == PatchDirection::original_onto_generated;
  ImageBuffer out = original_inside ? generated : original;
  const ImageBuffer &inside = original_inside ? original : generated;
  for (std::size_t y = rect.y; y < rect.y + rect.h; ++y)
    for (std::size_t x = rect.x; x < rect.x + rect.w; ++x)
      for (std::size_t c = 0; c < ImageBuffer::kChannels; ++c)
        out.at(y, x, c) = inside.at(y, x, c);
  return out;
}

/// Draws a MixSpec: Bernoulli(pi) picks pixel vs patch, then the blend weight or the
/// rectangle (area fraction, aspect ratio, position, direction). Pure in its arguments.
inline MixSpec sample_mix_spec(std::uint64_t rng_seed, std::size_t height, std::size_t width,
                               const MixConfig &config = {}) {
  validate(config);
  if (height < 1 || width < 1)
    throw ValidationError("image dimensions must be >= 1");
  Rng rng(rng_seed);
  MixSpec spec;
  spec.rng_seed = rng_seed;
  spec.eta = bernoulli(rng, config.pi);
  if (spec.eta) {
    spec.kind = MixKind::pixel;
    spec.lambda = uniform_real(rng, config.lambda_min, config.lambda_max);
    return spec;
  }
  spec.kind = MixKind::patch;
  spec.lambda = 0.0;
  const double area = uniform_real(rng, config.area_min, config.area_max) * static_cast<double>(height * width);
  const double aspect = uniform_real(rng, config.aspect_min, config.aspect_max); // width / height
  auto clamp_side = [](double v, std::size_t limit) {
    return std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(v)), 1, limit);
  };
  PatchRect r;
  r.w = clamp_side(std::sqrt(area * aspect), width);
  r.h = clamp_side(std::sqrt(area / aspect), height);
  r.x = static_cast<std::size_t>(uniform_index(rng, width - r.w + 1));
  r.y = static_cast<std::size_t>(uniform_index(rng, height - r.h + 1));
  spec.patch_rect = r;
  spec.direction = bernoulli(rng, 0.5) ? PatchDirection::original_onto_generated
                                       : PatchDirection::generated_onto_original;
  return spec;
}

inline ImageBuffer mix(const ImageBuffer &original, const ImageBuffer &generated, const MixSpec &spec) {
  switch (spec.kind) {
  case MixKind::pixel:
    return mix_pixel(original, generated, spec.lambda);
  case MixKind::patch:
    return mix_patch(original, generated, spec.patch_rect, spec.direction);
  case MixKind::none:
    break;
  }
  throw ValidationError("mix spec has no mixing kind");
}

} // namespace coremix
