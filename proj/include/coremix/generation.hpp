#pragma once

#include "coremix/errors.hpp"
#include "coremix/http.hpp"
#include "coremix/image.hpp"
#include "coremix/prompting.hpp"
#include "coremix/rng.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <semaphore>
#include <string>
#include <vector>

namespace coremix {

struct GenerationRequest {
  std::string prompt;          // contextual prompt, enters the conditional branch of guidance
  std::string negative_prompt; // replaces the unconditional branch
  double guidance_scale = 7.0;
  std::size_t width = 512;
  std::size_t height = 512;
  std::uint64_t seed = 0;

  static GenerationRequest from(const PromptPair &p, std::size_t width, std::size_t height, std::uint64_t seed) {
    return {p.contextual, p.negative, p.guidance_scale, width, height, seed};
  }
  friend bool operator==(const GenerationRequest &, const GenerationRequest &) = default;
};

inline void validate(const GenerationRequest &r) {
  if (r.width < 64 || r.height < 64 || r.width % 8 != 0 || r.height % 8 != 0)
    throw ValidationError("generation size must be >= 64 and a multiple of 8, got " + std::to_string(r.width) + "x" +
                          std::to_string(r.height));
  if (!(r.guidance_scale > 0.0))
    throw ValidationError("guidance_scale must be > 0");
  if (r.prompt.empty())
    throw ValidationError("generation prompt is empty");
}

inline nlohmann::json to_json(const GenerationRequest &r) {
  return {{"prompt", r.prompt},          {"negative_prompt", r.negative_prompt},
          {"guidance_scale", r.guidance_scale}, {"width", r.width},
          {"height", r.height},          {"seed", r.seed}};
}

inline GenerationRequest generation_request_from_json(const nlohmann::json &j) {
  try {
    return {j.at("prompt").get<std::string>(),      j.at("negative_prompt").get<std::string>(),
            j.at("guidance_scale").get<double>(),  j.at("width").get<std::size_t>(),
            j.at("height").get<std::size_t>(),     j.at("seed").get<std::uint64_t>()};
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(std::string("generation request: ") + e.what());
  }
}

struct GeneratorCapabilities {
  std::size_t max_resolution = 0; // 0 = unknown / unbounded
  bool supports_negative_prompt = true;
  bool deterministic = false;
};

class GeneratorBackend {
public:
  virtual ~GeneratorBackend() = default;
  virtual ImageBuffer generate(const GenerationRequest &request) = 0;
  virtual GeneratorCapabilities capabilities() const = 0;
};

// ---------------------------------------------------------------------------
// Mock generator
//
// A smooth color field identifies the subject; the seed adds per-pixel grain
// and a slight phase wobble. The subject phrase is the text after the first
// " the " of the prompt ("Generate heavy snow to the cardinal, a bird object"
// -> "cardinal, a bird object"), so every shipped template variant draws the
// same subject while unrelated prompts do not. Outputs are 8-bit quantized.

struct MockFieldParams {
  static constexpr int kWaves = 3;
  double base[3];
  double amplitude[3][kWaves];
  int freq_x[3][kWaves];
  int freq_y[3][kWaves];
  double phase[3][kWaves];
};

inline constexpr double kMockGenerationJitter = 0.05;
inline constexpr double kMockGenerationDeviation = 0.01; // generations stay close to the subject
inline constexpr double kMockInstanceJitter = 0.45;
inline constexpr double kMockInstanceDeviation = 0.06; // synthetic originals spread further out
inline constexpr double kMockGrain = 0.04;
inline constexpr double kMockInstanceGrain = 0.02;

inline std::string mock_subject_key(std::string_view prompt) {
  const auto pos = prompt.find(" the ");
  return std::string(pos == std::string_view::npos ? prompt : prompt.substr(pos + 5));
}

inline MockFieldParams mock_field_params(std::string_view subject) {
  Rng rng(Hasher{}.str("mock-subject").str(subject).digest());
  MockFieldParams p{};
  for (int c = 0; c < 3; ++c) {
    p.base[c] = uniform_real(rng, 0.3, 0.7);
    for (int k = 0; k < MockFieldParams::kWaves; ++k) {
      p.amplitude[c][k] = uniform_real(rng, 0.08, 0.16);
      p.freq_x[c][k] = static_cast<int>(uniform_index(rng, 3));
      p.freq_y[c][k] = static_cast<int>(uniform_index(rng, 3));
      if (p.freq_x[c][k] == 0 && p.freq_y[c][k] == 0)
        p.freq_x[c][k] = 1;
      p.phase[c][k] = uniform_real(rng, 0.0, 2.0 * std::numbers::pi);
    }
  }
  return p;
}

/// Field values in interleaved RGB order. cos(a + b) is split into per-column and
/// per-row tables so each wave costs two multiplies per pixel.
inline std::vector<double> evaluate_field(const MockFieldParams &f, std::size_t height, std::size_t width) {
  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<double> out(height * width * 3);
  std::vector<double> cx(width), sx(width), cy(height), sy(height);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = c; i < out.size(); i += 3)
      out[i] = f.base[c];
    for (int k = 0; k < MockFieldParams::kWaves; ++k) {
      for (std::size_t x = 0; x < width; ++x) {
        const double a = two_pi * f.freq_x[c][k] * static_cast<double>(x) / static_cast<double>(width) + f.phase[c][k];
        cx[x] = std::cos(a);
        sx[x] = std::sin(a);
      }
      for (std::size_t y = 0; y < height; ++y) {
        const double b = two_pi * f.freq_y[c][k] * static_cast<double>(y) / static_cast<double>(height);
        cy[y] = std::cos(b);
        sy[y] = std::sin(b);
      }
      const double amp = f.amplitude[c][k];
      for (std::size_t y = 0; y < height; ++y) {
        double *row = out.data() + y * width * 3 + c;
        for (std::size_t x = 0; x < width; ++x)
          row[x * 3] += amp * (cx[x] * cy[y] - sx[x] * sy[y]);
      }
    }
  }
  return out;
}

/// Renders a subject field. Each wave's phase and amplitude are perturbed (drawn
/// from `rng`), then the smooth departure from the unperturbed field is rescaled
/// to `deviation_rms`, so every rendering sits the same distance from its subject.
/// `grain` is the half-width of per-value uniform noise added last.
inline ImageBuffer render_mock_field(const MockFieldParams &params, std::size_t height, std::size_t width, Rng &rng,
                                     double phase_jitter, double amplitude_jitter, double deviation_rms,
                                     double grain) {
  MockFieldParams p = params;
  for (int c = 0; c < 3; ++c)
    for (int k = 0; k < MockFieldParams::kWaves; ++k) {
      p.phase[c][k] += uniform_real(rng, -phase_jitter, phase_jitter);
      p.amplitude[c][k] *= 1.0 + uniform_real(rng, -amplitude_jitter, amplitude_jitter);
    }
  std::vector<double> subject = evaluate_field(params, height, width);
  std::vector<double> deviation = evaluate_field(p, height, width);
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < deviation.size(); ++i) {
    deviation[i] -= subject[i];
    sum_sq += deviation[i] * deviation[i];
  }
  const double rms = std::sqrt(sum_sq / static_cast<double>(deviation.size()));
  const double scale = rms > 0.0 ? deviation_rms / rms : 0.0;
  ImageBuffer img(height, width);
  auto out = img.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    double value = subject[i] + scale * deviation[i];
    if (grain > 0.0)
      value += uniform_real(rng, -grain, grain);
    out[i] = from_byte(to_byte(value));
  }
  return img;
}

inline ImageBuffer mock_noise_image(std::size_t height, std::size_t width, std::uint64_t seed) {
  Rng rng(seed);
  ImageBuffer img(height, width);
  for (double &v : img.data())
    v = from_byte(static_cast<std::uint8_t>(uniform_index(rng, 256)));
  return img;
}

class MockGenerator final : public GeneratorBackend {
public:
  /// `corrupt_fraction` is the probability that a request yields seeded uniform noise instead of the subject.
  explicit MockGenerator(double corrupt_fraction = 0.0) : corrupt_fraction_(corrupt_fraction) {
    if (!(corrupt_fraction >= 0.0 && corrupt_fraction <= 1.0))
      throw ValidationError("corrupt_fraction must be in [0,1]");
  }

  ImageBuffer generate(const GenerationRequest &request) override {
    validate(request);
    const auto key = Hasher{}.str(request.prompt).str(request.negative_prompt).u64(request.seed).digest();
    Rng corrupt_rng(Hasher{}.u64(key).str("corrupt").digest());
    if (corrupt_fraction_ > 0.0 && bernoulli(corrupt_rng, corrupt_fraction_))
      return mock_noise_image(request.height, request.width, corrupt_rng());
    Rng rng(key);
    return render_mock_field(mock_field_params(mock_subject_key(request.prompt)), request.height, request.width, rng,
                             kMockGenerationJitter, kMockGenerationJitter, kMockGenerationDeviation, kMockGrain);
  }

  GeneratorCapabilities capabilities() const override { return {0, true, true}; }
  double corrupt_fraction() const noexcept { return corrupt_fraction_; }

private:
  double corrupt_fraction_;
};

inline ImageBuffer mock_generate(const GenerationRequest &request, double corrupt_fraction = 0.0) {
  return MockGenerator(corrupt_fraction).generate(request);
}

// ---------------------------------------------------------------------------
// Remote generator: POST {endpoint}/generate, JSON body, PNG response.

inline ImageBuffer remote_generate(const Endpoint &endpoint, const GenerationRequest &request,
                                   std::chrono::milliseconds timeout) {
  validate(request);
  auto reply = http_post(endpoint, "/generate", to_json(request).dump(), "application/json", timeout);
  if (reply.content_type.rfind("image/png", 0) != 0)
    throw ProtocolError("expected image/png, got '" + reply.content_type + "'");
  ImageBuffer img;
  try {
    img = decode_png({reinterpret_cast<const std::uint8_t *>(reply.body.data()), reply.body.size()});
  } catch (const Error &e) {
    throw ProtocolError(std::string("undecodable image from backend: ") + e.what());
  }
  if (img.width() != request.width || img.height() != request.height)
    throw ProtocolError("backend returned " + std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                        ", requested " + std::to_string(request.width) + "x" + std::to_string(request.height));
  return img;
}

class RemoteGenerator final : public GeneratorBackend {
public:
  RemoteGenerator(std::string url, std::chrono::milliseconds timeout, std::ptrdiff_t max_in_flight = 4,
                  GeneratorCapabilities caps = {})
      : endpoint_(Endpoint::parse(url)), timeout_(timeout), slots_(max_in_flight), caps_(caps) {}

  ImageBuffer generate(const GenerationRequest &request) override {
    InFlightSlot slot(slots_);
    return remote_generate(endpoint_, request, timeout_);
  }

  GeneratorCapabilities capabilities() const override { return caps_; }

private:
  Endpoint endpoint_;
  std::chrono::milliseconds timeout_;
  std::counting_semaphore<> slots_;
  GeneratorCapabilities caps_;
};

} // namespace coremix
