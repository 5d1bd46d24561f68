#include "coremix/pipeline.hpp"
#include "coremix/synthetic.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace coremix;
using coremix::testing::TempDir;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path &p) {
  const auto bytes = read_file_bytes(p);
  return {bytes.begin(), bytes.end()};
}

RunConfig mock_config(const fs::path &data, const fs::path &out) {
  RunConfig c;
  c.dataset_root = data;
  c.output_root = out;
  c.dataset_type = "bird";
  c.allow_default_prompts = true;
  c.gen_width = c.gen_height = 64;
  c.master_seed = 42;
  return c;
}

void make_dataset(const fs::path &root, std::size_t per_class = 20, std::size_t side = 64,
                  std::vector<std::string> names = {"cardinal", "jay", "sparrow"}) {
  SyntheticDatasetSpec spec;
  spec.class_names = std::move(names);
  spec.images_per_class = per_class;
  spec.dataset_type = "bird";
  spec.height = spec.width = side;
  write_synthetic_dataset(root, spec);
}

} // namespace

TEST(DeriveSeeds, DeterministicAndCollisionFree) {
  std::set<std::uint64_t> seen;
  for (const char *cls : {"a", "b"})
    for (std::uint64_t i = 0; i < 500; ++i) {
      const auto s = derive_seeds(7, cls, i);
      EXPECT_EQ(s, derive_seeds(7, cls, i));
      EXPECT_NE(s.gen_seed, s.mix_seed);
      EXPECT_TRUE(seen.insert(s.gen_seed).second);
      EXPECT_TRUE(seen.insert(s.mix_seed).second);
      EXPECT_TRUE(seen.insert(s.filter_seed).second);
    }
  EXPECT_NE(derive_seeds(7, "a", 0), derive_seeds(8, "a", 0));
  // class names are length-prefixed, so ("ab", 1) and ("a", ...) cannot alias
  EXPECT_NE(derive_seed(1, "ab", 0, "gen"), derive_seed(1, "a", 0, "bgen"));
}

TEST(AugmentCount, CeilingAndCap) {
  EXPECT_EQ(augment_count(100, 20), 20u);
  EXPECT_EQ(augment_count(50, 20), 10u);
  EXPECT_EQ(augment_count(10, 5), 1u);
  EXPECT_EQ(augment_count(30, 10), 3u); // 30*10/100 is 3.0000000000000004 in floating point
  EXPECT_EQ(augment_count(0.1, 3), 1u);
}

TEST(SelectSources, DistinctSortedSeeded) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto s = select_sources(20, 7, seed);
    ASSERT_EQ(s.size(), 7u);
    EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
    EXPECT_EQ(std::set<std::size_t>(s.begin(), s.end()).size(), 7u);
    EXPECT_EQ(s, select_sources(20, 7, seed));
  }
}

TEST(RecordId, ZeroPadded) { EXPECT_EQ(make_record_id("jay", 7), "jay_00007"); }

TEST(RunConfig, Validation) {
  RunConfig c = mock_config("d", "o");
  EXPECT_NO_THROW(validate(c));
  c.augment_percent = 0;
  EXPECT_THROW(validate(c), ValidationError);
  c = mock_config("d", "o");
  c.max_retries = 0;
  EXPECT_THROW(validate(c), ValidationError);
  c = mock_config("d", "o");
  c.backend = BackendKind::remote;
  EXPECT_THROW(validate(c), ValidationError);
}

TEST(Pipeline, FullRunAcceptsEverySample) {
  TempDir tmp;
  make_dataset(tmp / "data");
  const auto report = run(mock_config(tmp / "data", tmp / "out"));
  EXPECT_TRUE(report.complete);
  EXPECT_EQ(report.totals.records, 60u);
  EXPECT_EQ(report.totals.accepted, 60u);
  EXPECT_EQ(report.totals.failures, 0u);
  EXPECT_EQ(report.totals.n_k, 60u);
  ASSERT_EQ(report.classes.size(), 3u);
  for (const auto &c : report.classes) {
    ASSERT_TRUE(c.threshold);
    EXPECT_TRUE(c.threshold->exhaustive);
    EXPECT_EQ(c.threshold->pairs_total, 190u);
  }
  const auto records = read_manifest(tmp / "out" / kManifestName);
  ASSERT_EQ(records.size(), 60u);
  for (const auto &r : records) {
    EXPECT_TRUE(fs::exists(tmp / "out" / *r.output_path));
    EXPECT_TRUE(fs::exists(tmp / "out" / *r.generated_path));
    EXPECT_EQ(read_png(tmp / "out" / *r.output_path).height(), 64u);
  }
  EXPECT_TRUE(fs::exists(tmp / "out" / kReportName));
  EXPECT_FALSE(fs::exists(tmp / "out" / kIncompleteMarker));
}

TEST(Pipeline, OutputsKeepTheirSourceLabel) {
  TempDir tmp;
  make_dataset(tmp / "data", 6);
  run(mock_config(tmp / "data", tmp / "out"));
  for (const auto &r : read_manifest(tmp / "out" / kManifestName)) {
    EXPECT_EQ(fs::path(r.source_path).parent_path().filename().string(), r.class_name);
    EXPECT_EQ(fs::path(*r.output_path).parent_path().string(), r.class_name);
    EXPECT_EQ(r.record_id.rfind(r.class_name + "_", 0), 0u);
  }
}

TEST(Pipeline, HalfAugmentationPicksHalfOfEachClass) {
  TempDir tmp;
  make_dataset(tmp / "data");
  auto c = mock_config(tmp / "data", tmp / "out");
  c.augment_percent = 50;
  const auto report = run(c);
  for (const auto &cls : report.classes)
    EXPECT_EQ(cls.records, 10u);
  std::set<std::string> sources;
  for (const auto &r : read_manifest(tmp / "out" / kManifestName))
    EXPECT_TRUE(sources.insert(r.source_path).second);
}

TEST(Pipeline, RepeatedRunsAreByteIdenticalAcrossConcurrency) {
  TempDir tmp;
  make_dataset(tmp / "data", 8);
  auto a = mock_config(tmp / "data", tmp / "a");
  auto b = mock_config(tmp / "data", tmp / "b");
  a.concurrency = 1;
  b.concurrency = 6;
  a.corrupt_fraction = b.corrupt_fraction = 0.3;
  run(a);
  run(b);
  EXPECT_EQ(slurp(tmp / "a" / kManifestName), slurp(tmp / "b" / kManifestName));
  EXPECT_EQ(slurp(tmp / "a" / kEmbeddingsName), slurp(tmp / "b" / kEmbeddingsName));
  for (const auto &r : read_manifest(tmp / "a" / kManifestName))
    if (r.output_path)
      EXPECT_EQ(slurp(tmp / "a" / *r.output_path), slurp(tmp / "b" / *r.output_path));
}

TEST(Pipeline, DifferentMasterSeedChangesTheRun) {
  TempDir tmp;
  make_dataset(tmp / "data", 4);
  auto a = mock_config(tmp / "data", tmp / "a");
  auto b = mock_config(tmp / "data", tmp / "b");
  b.master_seed = 43;
  run(a);
  run(b);
  EXPECT_NE(slurp(tmp / "a" / kManifestName), slurp(tmp / "b" / kManifestName));
}

TEST(Pipeline, MixSeedOverrideOnlyChangesMixing) {
  TempDir tmp;
  make_dataset(tmp / "data", 4);
  auto a = mock_config(tmp / "data", tmp / "a");
  auto b = mock_config(tmp / "data", tmp / "b");
  b.mix_seed = 99;
  run(a);
  run(b);
  const auto ra = read_manifest(tmp / "a" / kManifestName);
  const auto rb = read_manifest(tmp / "b" / kManifestName);
  ASSERT_EQ(ra.size(), rb.size());
  for (std::size_t i = 0; i < ra.size(); ++i) {
    EXPECT_EQ(ra[i].gen_seed, rb[i].gen_seed);
    EXPECT_NE(ra[i].eta_seed, rb[i].eta_seed);
  }
}

TEST(Pipeline, ReplayIsBitExact) {
  TempDir tmp;
  make_dataset(tmp / "data", 10);
  run(mock_config(tmp / "data", tmp / "out"));
  const auto n = replay(tmp / "out" / kManifestName, tmp / "replayed");
  EXPECT_EQ(n, 30u);
  for (const auto &r : read_manifest(tmp / "out" / kManifestName))
    EXPECT_EQ(read_png(tmp / "replayed" / *r.output_path), read_png(tmp / "out" / *r.output_path));
}

TEST(Pipeline, RecordCountsAreConserved) {
  TempDir tmp;
  make_dataset(tmp / "data", 12);
  auto c = mock_config(tmp / "data", tmp / "out");
  c.corrupt_fraction = 0.5;
  c.max_retries = 2;
  const auto report = run(c);
  const auto records = read_manifest(tmp / "out" / kManifestName);
  EXPECT_EQ(records.size(), 36u);
  std::size_t attempts = 0, accepted = 0, failed = 0;
  for (const auto &r : records) {
    attempts += r.attempts;
    (r.accepted ? accepted : failed)++;
    EXPECT_LE(r.attempts, 2u);
    EXPECT_EQ(r.accepted, r.mix_kind != MixKind::none);
  }
  EXPECT_EQ(report.totals.accepted, accepted);
  EXPECT_EQ(report.totals.failures, failed);
  EXPECT_EQ(report.totals.generated, attempts);
  EXPECT_EQ(report.totals.accepted + report.totals.discarded, report.totals.generated);
  EXPECT_GT(failed, 0u);
}

TEST(Pipeline, DiscardRateRecoversCorruptFraction) {
  TempDir tmp;
  // 8 classes x 400 = 3200 single-attempt samples per run
  std::vector<std::string> names;
  for (int i = 0; i < 8; ++i)
    names.push_back("class" + std::to_string(i));
  make_dataset(tmp / "data", 400, 32, names);
  for (double q : {0.05, 0.10, 0.20}) {
    auto c = mock_config(tmp / "data", tmp / ("out" + std::to_string(q)));
    c.corrupt_fraction = q;
    c.max_retries = 1;
    const auto report = run(c);
    EXPECT_GE(report.totals.generated, 1000u);
    ASSERT_TRUE(report.totals.discard_rate);
    EXPECT_NEAR(*report.totals.discard_rate, q, 0.02) << "q=" << q;
  }
}

TEST(Pipeline, SingleImageClassIsFatal) {
  TempDir tmp;
  make_dataset(tmp / "data", 1);
  EXPECT_THROW(run(mock_config(tmp / "data", tmp / "out")), ValidationError);
}

TEST(Pipeline, MissingPromptsWithoutOptInFails) {
  TempDir tmp;
  make_dataset(tmp / "data", 3);
  auto c = mock_config(tmp / "data", tmp / "out");
  c.allow_default_prompts = false;
  EXPECT_THROW(run(c), IoError);
}

namespace {
class FailingAfter final : public GeneratorBackend {
public:
  explicit FailingAfter(std::size_t ok) : ok_(ok) {}
  ImageBuffer generate(const GenerationRequest &r) override {
    if (calls_++ >= ok_)
      throw ConnectionError("backend went away");
    return mock_generate(r);
  }
  GeneratorCapabilities capabilities() const override { return {}; }

private:
  std::atomic<std::size_t> calls_{0};
  std::size_t ok_;
};
} // namespace

TEST(Pipeline, FatalErrorLeavesPartialManifestAndMarker) {
  TempDir tmp;
  make_dataset(tmp / "data", 10);
  auto c = mock_config(tmp / "data", tmp / "out");
  c.concurrency = 1;
  FailingAfter gen(5);
  MockEncoder enc;
  EXPECT_THROW(run(c, gen, enc), RunAborted);
  EXPECT_TRUE(fs::exists(tmp / "out" / kIncompleteMarker));
  EXPECT_EQ(read_manifest(tmp / "out" / kManifestName).size(), 5u);
  const auto report = nlohmann::json::parse(slurp(tmp / "out" / kReportName));
  EXPECT_FALSE(report["complete"].get<bool>());
}
