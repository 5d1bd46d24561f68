#include "coremix/filtration.hpp"
#include "coremix/synthetic.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

using namespace coremix;

namespace {

Embedding random_embedding(Rng &rng, std::size_t d) {
  std::vector<double> v(d);
  for (double &x : v)
    x = uniform_real(rng, -1.0, 1.0);
  return Embedding(std::move(v));
}

// Independent oracle: normalize first, then average the ordered i != j similarities.
double brute_force_tau(const std::vector<Embedding> &es) {
  std::vector<std::vector<double>> unit;
  for (const auto &e : es) {
    std::vector<double> u = e.values();
    double n = 0;
    for (double x : u)
      n += x * x;
    for (double &x : u)
      x /= std::sqrt(n);
    unit.push_back(u);
  }
  double sum = 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < unit.size(); ++i)
    for (std::size_t j = 0; j < unit.size(); ++j) {
      if (i == j)
        continue;
      double dot = 0;
      for (std::size_t k = 0; k < unit[i].size(); ++k)
        dot += unit[i][k] * unit[j][k];
      sum += dot;
      ++count;
    }
  return sum / static_cast<double>(count);
}

std::vector<Embedding> mock_class(std::size_t n) {
  std::vector<Embedding> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(mock_embed(synthetic_instance("cardinal", "bird", i, 64, 64, 0)));
  return out;
}

} // namespace

TEST(CosineSimilarity, KnownValues) {
  const Embedding v({0.3, -2.0, 5.0});
  EXPECT_NEAR(cosine_similarity(v, v), 1.0, 1e-9);
  EXPECT_EQ(cosine_similarity(Embedding({1, 0}), Embedding({0, 1})), 0.0);
  // 32 / (sqrt(14) * sqrt(77))
  EXPECT_NEAR(cosine_similarity(Embedding({1, 2, 3}), Embedding({4, 5, 6})), 0.974631846, 1e-6);
  EXPECT_NEAR(cosine_similarity(Embedding({1, 2, 3}), Embedding({-1, -2, -3})), -1.0, 1e-12);
}

TEST(CosineSimilarity, DimensionMismatchThrows) {
  EXPECT_THROW(cosine_similarity(Embedding({1, 2}), Embedding({1, 2, 3})), ValidationError);
}

TEST(CosineSimilarity, SymmetricAndBounded) {
  Rng rng(31);
  for (int t = 0; t < 2000; ++t) {
    const auto d = 1 + uniform_index(rng, 16);
    const auto a = random_embedding(rng, d);
    const auto b = uniform01(rng) < 0.1 ? a : random_embedding(rng, d);
    const double s = cosine_similarity(a, b);
    EXPECT_EQ(s, cosine_similarity(b, a));
    EXPECT_GE(s, -1.0 - 1e-9);
    EXPECT_LE(s, 1.0 + 1e-9);
  }
}

TEST(UnrankPair, EnumeratesUpperTriangleInOrder) {
  for (std::size_t n : {2u, 3u, 7u, 30u}) {
    std::uint64_t rank = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        EXPECT_EQ(unrank_pair(rank++, n), std::make_pair(i, j));
  }
}

TEST(SampleWithoutReplacement, DistinctSortedInRange) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto s = sample_without_replacement(435, 200, seed);
    ASSERT_EQ(s.size(), 200u);
    EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
    EXPECT_EQ(std::set<std::uint64_t>(s.begin(), s.end()).size(), 200u);
    EXPECT_LT(s.back(), 435u);
  }
  EXPECT_EQ(sample_without_replacement(10, 10, 3).size(), 10u);
}

TEST(EstimateThreshold, HundredImagesHave4950Pairs) {
  std::vector<Embedding> es(100, Embedding({1.0, 2.0}));
  const auto t = estimate_threshold(es, 500, 0);
  EXPECT_EQ(t.pairs_total, 4950u);
  EXPECT_EQ(t.pairs_used, 500u);
  EXPECT_FALSE(t.exhaustive);
}

TEST(EstimateThreshold, IdenticalEmbeddingsGiveOne) {
  std::vector<Embedding> es(12, Embedding({0.2, -0.4, 0.9}));
  EXPECT_NEAR(estimate_threshold(es, 500, 0).tau, 1.0, 1e-6);
  EXPECT_NEAR(estimate_threshold(es, 10, 0).tau, 1.0, 1e-6);
}

TEST(EstimateThreshold, TooSmallClass) {
  std::vector<Embedding> one{Embedding({1.0})};
  try {
    estimate_threshold(one, 500, 0);
    FAIL();
  } catch (const ValidationError &e) {
    EXPECT_NE(std::string(e.what()).find("class too small for threshold"), std::string::npos);
  }
}

TEST(EstimateThreshold, ExhaustiveMatchesBruteForce) {
  Rng rng(77);
  for (int c = 0; c < 100; ++c) {
    const auto n = 2 + uniform_index(rng, 24);
    const auto d = 2 + uniform_index(rng, 30);
    std::vector<Embedding> es;
    for (std::size_t i = 0; i < n; ++i)
      es.push_back(random_embedding(rng, d));
    const auto t = estimate_threshold(es, pair_count(n), rng());
    EXPECT_TRUE(t.exhaustive);
    EXPECT_EQ(t.pairs_used, pair_count(n));
    EXPECT_NEAR(t.tau, brute_force_tau(es), 1e-9);
  }
}

TEST(EstimateThreshold, SampledIsCloseToExhaustiveOnMockClass) {
  const auto es = mock_class(30);
  const double exact = brute_force_tau(es);
  int within = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto t = estimate_threshold(es, 200, seed);
    EXPECT_EQ(t.pairs_total, 435u);
    EXPECT_EQ(t.pairs_used, 200u);
    within += std::abs(t.tau - exact) <= 0.02;
  }
  EXPECT_GE(within, 95);
}

TEST(EstimateThreshold, SampledIsCloseToExhaustiveOnSpreadClass) {
  // wider spread of pair similarities than the mock class
  Rng rng(5);
  std::vector<Embedding> es;
  for (int i = 0; i < 30; ++i) {
    std::vector<double> v(16);
    for (auto &x : v)
      x = 0.6 + uniform_real(rng, -1.0, 1.0);
    es.emplace_back(std::move(v));
  }
  const double exact = brute_force_tau(es);
  int within = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed)
    within += std::abs(estimate_threshold(es, 200, seed).tau - exact) <= 0.02;
  EXPECT_GE(within, 95);
}

TEST(EstimateThreshold, DeterministicInSeed) {
  const auto es = mock_class(30);
  EXPECT_EQ(estimate_threshold(es, 100, 9).tau, estimate_threshold(es, 100, 9).tau);
}

TEST(Filter, StrictInequality) {
  EXPECT_TRUE(decide(0.9, 0.7).retained);
  EXPECT_FALSE(decide(0.7, 0.7).retained);
  EXPECT_FALSE(decide(0.3, 0.7).retained);
  ClassThreshold t;
  t.tau = 1.0;
  const Embedding v({1.0, 1.0});
  EXPECT_FALSE(filter(v, v, t).retained); // similarity 1 == tau 1
}

TEST(Filter, DecisionLawFuzz) {
  Rng rng(123);
  for (int i = 0; i < 100000; ++i) {
    const double s = uniform_real(rng, -1, 1);
    const double tau = uniform01(rng) < 0.05 ? s : uniform_real(rng, -1, 1);
    const auto d = decide(s, tau);
    EXPECT_EQ(d.retained, s > tau);
  }
}

namespace {

class ScriptedGenerator final : public GeneratorBackend {
public:
  std::vector<std::uint64_t> seeds;
  bool fail = false;
  ImageBuffer generate(const GenerationRequest &r) override {
    if (fail)
      throw TimeoutError("scripted timeout");
    seeds.push_back(r.seed);
    return mock_generate(r, 0.0);
  }
  GeneratorCapabilities capabilities() const override { return {}; }
};

struct CalibratedClass {
  std::vector<Embedding> originals;
  ClassThreshold threshold;
  GenerationRequest base;
};

CalibratedClass calibrated() {
  CalibratedClass c{mock_class(20), {}, {}};
  c.threshold = estimate_threshold(c.originals, 500, 0, "cardinal");
  c.base = GenerationRequest::from(build_prompt_pair(PromptTemplate::builtin(), "cardinal", "bird", 0), 64, 64, 40);
  return c;
}

} // namespace

TEST(AcquireAligned, CleanMockIsRetainedOnFirstAttempt) {
  auto c = calibrated();
  MockGenerator gen(0.0);
  MockEncoder enc;
  for (std::size_t i = 0; i < c.originals.size(); ++i) {
    auto base = c.base;
    base.seed += 1000 * i;
    const auto result = acquire_aligned(c.originals[i], base, gen, enc, c.threshold, 5);
    ASSERT_TRUE(std::holds_alternative<AlignedSample>(result));
    const auto &a = std::get<AlignedSample>(result);
    EXPECT_EQ(a.attempts, 1u);
    EXPECT_TRUE(a.decision.retained);
    EXPECT_EQ(a.seed, base.seed);
  }
}

TEST(AcquireAligned, FullCorruptionExhaustsRetries) {
  auto c = calibrated();
  MockGenerator gen(1.0);
  MockEncoder enc;
  const auto result = acquire_aligned(c.originals[0], c.base, gen, enc, c.threshold, 5);
  ASSERT_TRUE(std::holds_alternative<FailureReport>(result));
  const auto &f = std::get<FailureReport>(result);
  ASSERT_EQ(f.attempts.size(), 5u);
  for (const auto &d : f.attempts) {
    EXPECT_FALSE(d.retained);
    EXPECT_LE(d.similarity, d.tau);
  }
}

TEST(AcquireAligned, SeedsAdvanceByOne) {
  auto c = calibrated();
  c.threshold.tau = 2.0; // nothing passes
  ScriptedGenerator gen;
  MockEncoder enc;
  (void)acquire_aligned(c.originals[0], c.base, gen, enc, c.threshold, 4);
  EXPECT_EQ(gen.seeds, (std::vector<std::uint64_t>{40, 41, 42, 43}));
}

TEST(AcquireAligned, RetryMonotonicityFuzz) {
  auto c = calibrated();
  MockEncoder enc;
  Rng rng(4);
  for (int t = 0; t < 40; ++t) {
    MockGenerator gen(uniform01(rng));
    const auto max_retries = 1 + static_cast<std::uint32_t>(uniform_index(rng, 6));
    auto base = c.base;
    base.seed = rng();
    const auto result = acquire_aligned(c.originals[t % 20], base, gen, enc, c.threshold, max_retries);
    if (const auto *a = std::get_if<AlignedSample>(&result)) {
      EXPECT_LE(a->attempts, max_retries);
      EXPECT_TRUE(a->decision.retained);
      EXPECT_GT(a->decision.similarity, a->decision.tau);
    } else {
      EXPECT_EQ(std::get<FailureReport>(result).attempts.size(), max_retries);
    }
  }
}

TEST(AcquireAligned, ZeroRetriesIsAPreconditionError) {
  auto c = calibrated();
  MockGenerator gen;
  MockEncoder enc;
  EXPECT_THROW(acquire_aligned(c.originals[0], c.base, gen, enc, c.threshold, 0), ValidationError);
}

TEST(AcquireAligned, BackendErrorsCarryAttemptIndex) {
  auto c = calibrated();
  ScriptedGenerator gen;
  gen.fail = true;
  MockEncoder enc;
  try {
    (void)acquire_aligned(c.originals[0], c.base, gen, enc, c.threshold, 3);
    FAIL();
  } catch (const AcquireError &e) {
    EXPECT_EQ(e.attempt(), 1u);
    try {
      std::rethrow_if_nested(e);
      FAIL();
    } catch (const TimeoutError &inner) {
      EXPECT_TRUE(inner.retryable());
    }
  }
}
