#pragma once

// Hard-cosine filtration: a generated image is kept only when its embedding's
// cosine similarity to the original's exceeds the class threshold tau, where
// tau is the mean similarity over (possibly sampled) pairs of original images
// from the same class.

#include "coremix/dataset.hpp"
#include "coremix/embedding.hpp"
#include "coremix/errors.hpp"
#include "coremix/generation.hpp"
#include "coremix/rng.hpp"

#include <algorithm>
#include <cstdint>
#include <exception>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <variant>
#include <vector>

namespace coremix {

struct ClassThreshold {
  std::string class_name;
  double tau = 0.0;
  std::uint64_t pairs_used = 0;
  std::uint64_t pairs_total = 0;
  std::uint64_t seed = 0;
  bool exhaustive = false;
};

struct FiltrationDecision {
  double similarity = 0.0;
  double tau = 0.0;
  bool retained = false;
};

inline double cosine_similarity(const Embedding &a, const Embedding &b) {
  if (a.dimension() != b.dimension())
    throw ValidationError("embedding dimension mismatch: " + std::to_string(a.dimension()) + " vs " +
                          std::to_string(b.dimension()));
  double dot = 0.0, na = 0.0, nb = 0.0;
  const auto &x = a.values();
  const auto &y = b.values();
  for (std::size_t i = 0; i < x.size(); ++i) {
    dot += x[i] * y[i];
    na += x[i] * x[i];
    nb += y[i] * y[i];
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

/// Maps a rank in [0, C(n,2)) to the pair (i, j), i < j, in row-major order of the upper triangle.
inline std::pair<std::size_t, std::size_t> unrank_pair(std::uint64_t rank, std::size_t n) {
  std::size_t i = 0;
  std::uint64_t row = n - 1;
  while (rank >= row) {
    rank -= row;
    ++i;
    --row;
  }
  return {i, i + 1 + static_cast<std::size_t>(rank)};
}

/// `count` distinct values from [0, population), ascending. Floyd's algorithm, O(count) draws.
inline std::vector<std::uint64_t> sample_without_replacement(std::uint64_t population, std::uint64_t count,
                                                             std::uint64_t seed) {
  Rng rng(seed);
  std::unordered_set<std::uint64_t> chosen;
  chosen.reserve(count * 2);
  for (std::uint64_t j = population - count; j < population; ++j) {
    const std::uint64_t t = uniform_index(rng, j + 1);
    if (!chosen.insert(t).second)
      chosen.insert(j);
  }
  std::vector<std::uint64_t> out(chosen.begin(), chosen.end());
  std::sort(out.begin(), out.end());
  return out;
}

/// Class threshold from intra-class pair similarities. Exhaustive when C(n,2) <= z_max,
/// otherwise the mean of z_max distinct pairs drawn with `seed`.
inline ClassThreshold estimate_threshold(std::span<const Embedding> class_embeddings, std::uint64_t z_max,
                                         std::uint64_t seed, std::string class_name = {}) {
  const std::size_t n = class_embeddings.size();
  if (n < 2)
    throw ValidationError("class too small for threshold" + (class_name.empty() ? "" : ": " + class_name));
  if (z_max < 1)
    throw ValidationError("z_max must be >= 1");
  ClassThreshold t;
  t.class_name = std::move(class_name);
  t.pairs_total = pair_count(n);
  t.seed = seed;
  double sum = 0.0;
  if (t.pairs_total <= z_max) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        sum += cosine_similarity(class_embeddings[i], class_embeddings[j]);
    t.pairs_used = t.pairs_total;
  } else {
    for (auto rank : sample_without_replacement(t.pairs_total, z_max, seed)) {
      const auto [i, j] = unrank_pair(rank, n);
      sum += cosine_similarity(class_embeddings[i], class_embeddings[j]);
    }
    t.pairs_used = z_max;
  }
  t.exhaustive = t.pairs_used == t.pairs_total;
  t.tau = sum / static_cast<double>(t.pairs_used);
  return t;
}

inline FiltrationDecision decide(double similarity, double tau) noexcept { return {similarity, tau, similarity > tau}; }

/// Keep the generated image only when S(original, generated) > tau. Ties discard.
inline FiltrationDecision filter(const Embedding &original, const Embedding &generated, const ClassThreshold &threshold) {
  return decide(cosine_similarity(original, generated), threshold.tau);
}

// ---------------------------------------------------------------------------

struct AlignedSample {
  ImageBuffer image;
  Embedding embedding;
  FiltrationDecision decision;
  std::uint32_t attempts = 0;
  std::uint64_t seed = 0; // seed of the retained generation
};

struct FailureReport {
  std::vector<FiltrationDecision> attempts; // one per rejected generation, in order
};

using AcquireResult = std::variant<AlignedSample, FailureReport>;

/// A backend call failed during acquisition; the original error is nested.
class AcquireError : public Error {
public:
  AcquireError(std::uint32_t attempt, const std::string &what)
      : Error("attempt " + std::to_string(attempt) + ": " + what), attempt_(attempt) {}
  std::uint32_t attempt() const noexcept { return attempt_; }

private:
  std::uint32_t attempt_;
};

/// Generates with seeds base.seed, base.seed+1, ... until one passes the filter or
/// `max_retries` generations have been rejected.
inline AcquireResult acquire_aligned(const Embedding &original, const GenerationRequest &request_base,
                                     GeneratorBackend &gen, EncoderBackend &enc, const ClassThreshold &threshold,
                                     std::uint32_t max_retries) {
  if (max_retries < 1)
    throw ValidationError("max_retries must be >= 1");
  FailureReport failures;
  for (std::uint32_t attempt = 1; attempt <= max_retries; ++attempt) {
    GenerationRequest request = request_base;
    request.seed = request_base.seed + (attempt - 1);
    try {
      ImageBuffer image = gen.generate(request);
      Embedding embedding = enc.embed(image);
      const auto decision = filter(original, embedding, threshold);
      if (decision.retained)
        return AlignedSample{std::move(image), std::move(embedding), decision, attempt, request.seed};
      failures.attempts.push_back(decision);
    } catch (const Error &e) {
      std::throw_with_nested(AcquireError(attempt, e.what()));
    }
  }
  return failures;
}

} // namespace coremix
