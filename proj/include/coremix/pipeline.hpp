#pragma once

// End-to-end augmentation run: scan -> class thresholds -> per-sample
// generate/filter/mix -> images + manifest + report. All randomness is derived
// up front from the master seed, so worker interleaving cannot change output.

#include "coremix/dataset.hpp"
#include "coremix/embedding.hpp"
#include "coremix/errors.hpp"
#include "coremix/filtration.hpp"
#include "coremix/generation.hpp"
#include "coremix/image.hpp"
#include "coremix/manifest.hpp"
#include "coremix/metrics.hpp"
#include "coremix/mixing.hpp"
#include "coremix/prompting.hpp"
#include "coremix/rng.hpp"
#include "coremix/worker_pool.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace coremix {

enum class BackendKind { mock, remote };

struct RunConfig {
  std::filesystem::path dataset_root;
  std::filesystem::path output_root;
  std::string dataset_type = "object";
  double augment_percent = 100.0;

  BackendKind backend = BackendKind::mock;
  std::string gen_url;
  std::string embed_url;
  std::chrono::milliseconds timeout{120'000};
  double corrupt_fraction = 0.0; // mock generator only

  std::optional<std::filesystem::path> prompts;
  bool allow_default_prompts = false;
  double guidance_scale = 7.0;
  std::size_t gen_width = 512;
  std::size_t gen_height = 512;

  std::uint64_t tau_pairs = 500;
  std::uint32_t max_retries = 5;
  std::optional<std::uint64_t> filter_seed;

  MixConfig mix;
  std::optional<std::uint64_t> mix_seed;

  std::uint64_t master_seed = 0;
  std::size_t concurrency = 4;

  std::optional<OverheadInput> overhead; // measured training times, reported if given
};

inline void validate(const RunConfig &c) {
  if (!(c.augment_percent > 0.0 && c.augment_percent <= 100.0))
    throw ValidationError("augment_percent must be in (0, 100]");
  if (c.concurrency < 1)
    throw ValidationError("concurrency must be >= 1");
  if (c.max_retries < 1)
    throw ValidationError("max_retries must be >= 1");
  if (c.tau_pairs < 1)
    throw ValidationError("tau_pairs must be >= 1");
  if (c.output_root.empty())
    throw ValidationError("output directory not set");
  if (c.backend == BackendKind::remote && (c.gen_url.empty() || c.embed_url.empty()))
    throw ValidationError("remote backend needs both --gen-url and --embed-url");
  validate(c.mix);
}

inline const std::string kManifestName = "manifest.jsonl";
inline const std::string kReportName = "report.json";
inline const std::string kEmbeddingsName = "embeddings.jsonl";
inline const std::string kGeneratedDir = ".generated";
inline const std::string kIncompleteMarker = "manifest.jsonl.incomplete";

// ---------------------------------------------------------------------------
// Seeds

struct SampleSeeds {
  std::uint64_t gen_seed = 0;
  std::uint64_t mix_seed = 0;
  std::uint64_t filter_seed = 0;
  friend bool operator==(const SampleSeeds &, const SampleSeeds &) = default;
};

inline std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view class_name, std::uint64_t index,
                                 std::string_view role) {
  return Hasher{}.u64(master_seed).str(class_name).u64(index).str(role).digest();
}

inline SampleSeeds derive_seeds(std::uint64_t master_seed, std::string_view class_name, std::uint64_t sample_index) {
  return {derive_seed(master_seed, class_name, sample_index, "gen"),
          derive_seed(master_seed, class_name, sample_index, "mix"),
          derive_seed(master_seed, class_name, sample_index, "filter")};
}

/// ceil(percent/100 * n), guarded against representation error, capped at n.
inline std::size_t augment_count(double augment_percent, std::size_t n) {
  const double exact = augment_percent * static_cast<double>(n) / 100.0;
  const auto k = static_cast<std::size_t>(std::ceil(exact - 1e-9));
  return std::min(k, n);
}

/// Indices of the source images to augment: `count` of `n`, seeded, ascending.
inline std::vector<std::size_t> select_sources(std::size_t n, std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = 0; i < count; ++i)
    std::swap(idx[i], idx[i + uniform_index(rng, n - i)]);
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

inline std::string make_record_id(std::string_view class_name, std::size_t counter) {
  std::ostringstream os;
  os << class_name << '_' << std::setw(5) << std::setfill('0') << counter;
  return os.str();
}

// ---------------------------------------------------------------------------
// Backends

inline std::unique_ptr<GeneratorBackend> make_generator(const RunConfig &c) {
  if (c.backend == BackendKind::mock)
    return std::make_unique<MockGenerator>(c.corrupt_fraction);
  return std::make_unique<RemoteGenerator>(c.gen_url, c.timeout, static_cast<std::ptrdiff_t>(c.concurrency));
}

inline std::unique_ptr<EncoderBackend> make_encoder(const RunConfig &c) {
  if (c.backend == BackendKind::mock)
    return std::make_unique<MockEncoder>();
  return std::make_unique<RemoteEncoder>(c.embed_url, c.timeout, static_cast<std::ptrdiff_t>(c.concurrency));
}

/// Thrown after a fatal error once the partial manifest and report are on disk.
class RunAborted : public Error {
public:
  using Error::Error;
};

namespace detail {

struct Stopwatch {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const { return Seconds(std::chrono::steady_clock::now() - start).count(); }
};

inline nlohmann::ordered_json vector_json(const Embedding &e) { return e.values(); }

inline void write_text(const std::filesystem::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError("cannot write " + path.string());
  out << text;
}

struct SampleTask {
  std::size_t class_index;
  std::size_t counter; // per-class augmentation counter, also the prompt variant
  std::size_t source_index;
};

struct SampleOutcome {
  AugmentationRecord record;
  std::string embedding_line;
  double generation_s = 0, mixing_s = 0, io_s = 0;
};

} // namespace detail

/// Runs the pipeline against the given backends. Writes into config.output_root:
/// `<class>/<record_id>.png`, `.generated/<class>/<record_id>.png`, manifest.jsonl,
/// embeddings.jsonl and report.json.
inline RunReport run(const RunConfig &config, GeneratorBackend &gen, EncoderBackend &enc) {
  namespace fs = std::filesystem;
  validate(config);
  const auto tpl = load_templates(config.prompts, config.allow_default_prompts);
  PhaseTimings timings;

  detail::Stopwatch watch;
  const DatasetIndex index = scan_dataset(config.dataset_root, config.dataset_type);
  std::vector<std::vector<ImageBuffer>> originals(index.classes.size());
  for (std::size_t k = 0; k < index.classes.size(); ++k)
    for (const auto &p : index.classes[k].image_paths)
      originals[k].push_back(read_png(p));
  timings.scan = watch.seconds();

  // Original embeddings are computed once and serve both tau and filtration.
  watch = {};
  std::vector<std::pair<std::size_t, std::size_t>> flat;
  for (std::size_t k = 0; k < originals.size(); ++k)
    for (std::size_t i = 0; i < originals[k].size(); ++i)
      flat.emplace_back(k, i);
  std::vector<std::vector<std::optional<Embedding>>> slots(originals.size());
  for (std::size_t k = 0; k < originals.size(); ++k)
    slots[k].resize(originals[k].size());
  parallel_for(flat.size(), config.concurrency, [&](std::size_t f) {
    const auto [k, i] = flat[f];
    slots[k][i] = enc.embed(originals[k][i]);
  });
  std::vector<std::vector<Embedding>> embeddings(originals.size());
  for (std::size_t k = 0; k < slots.size(); ++k)
    for (auto &e : slots[k])
      embeddings[k].push_back(std::move(*e));
  const std::uint64_t filter_base = config.filter_seed.value_or(config.master_seed);
  std::vector<ClassThreshold> thresholds;
  for (std::size_t k = 0; k < index.classes.size(); ++k) {
    const auto &name = index.classes[k].class_name;
    thresholds.push_back(
        estimate_threshold(embeddings[k], config.tau_pairs, derive_seed(filter_base, name, 0, "tau"), name));
  }
  timings.thresholds = watch.seconds();

  std::vector<detail::SampleTask> tasks;
  for (std::size_t k = 0; k < index.classes.size(); ++k) {
    const auto &entry = index.classes[k];
    const auto count = augment_count(config.augment_percent, entry.n_k());
    const auto chosen = select_sources(entry.n_k(), count, derive_seed(config.master_seed, entry.class_name, 0, "select"));
    for (std::size_t c = 0; c < chosen.size(); ++c)
      tasks.push_back({k, c, chosen[c]});
  }

  const fs::path out_root = config.output_root;
  fs::create_directories(out_root);
  fs::remove(out_root / kIncompleteMarker);
  std::vector<std::optional<detail::SampleOutcome>> outcomes(tasks.size());

  auto process = [&](std::size_t t) {
    const auto &task = tasks[t];
    const auto &entry = index.classes[task.class_index];
    const auto &original = originals[task.class_index][task.source_index];
    const auto &original_embedding = embeddings[task.class_index][task.source_index];
    const auto &threshold = thresholds[task.class_index];
    const auto seeds = derive_seeds(config.master_seed, entry.class_name, task.counter);
    const std::uint64_t mix_seed =
        config.mix_seed ? derive_seeds(*config.mix_seed, entry.class_name, task.counter).mix_seed : seeds.mix_seed;

    detail::SampleOutcome out;
    auto &rec = out.record;
    rec.record_id = make_record_id(entry.class_name, task.counter);
    rec.class_name = entry.class_name;
    rec.source_path = entry.image_paths[task.source_index].string();
    rec.tau = threshold.tau;
    rec.eta_seed = mix_seed;
    rec.gen_seed = seeds.gen_seed;

    detail::Stopwatch sw;
    const auto prompt = build_prompt_pair(tpl, entry.class_name, index.dataset_type, task.counter, config.guidance_scale);
    const auto request = GenerationRequest::from(prompt, config.gen_width, config.gen_height, seeds.gen_seed);
    auto result = acquire_aligned(original_embedding, request, gen, enc, threshold, config.max_retries);
    out.generation_s = sw.seconds();

    nlohmann::ordered_json emb_line = {{"record_id", rec.record_id},
                                       {"original", detail::vector_json(original_embedding)},
                                       {"generated", nullptr}};
    if (auto *failure = std::get_if<FailureReport>(&result)) {
      rec.attempts = static_cast<std::uint32_t>(failure->attempts.size());
      rec.similarity = failure->attempts.back().similarity;
      rec.accepted = false;
      rec.mix_kind = MixKind::none;
    } else {
      auto &aligned = std::get<AlignedSample>(result);
      rec.attempts = aligned.attempts;
      rec.similarity = aligned.decision.similarity;
      rec.accepted = true;
      emb_line["generated"] = detail::vector_json(aligned.embedding);

      sw = {};
      const auto resized = resize_bilinear(aligned.image, original.height(), original.width());
      const auto spec = sample_mix_spec(mix_seed, original.height(), original.width(), config.mix);
      const auto mixed = mix(original, resized, spec);
      out.mixing_s = sw.seconds();
      rec.mix_kind = spec.kind;
      if (spec.kind == MixKind::pixel) {
        rec.lambda = spec.lambda;
      } else {
        rec.patch_rect = spec.patch_rect;
        rec.patch_direction = spec.direction;
      }

      sw = {};
      const fs::path generated_rel = fs::path(kGeneratedDir) / entry.class_name / (rec.record_id + ".png");
      const fs::path output_rel = fs::path(entry.class_name) / (rec.record_id + ".png");
      write_png(out_root / generated_rel, aligned.image);
      write_png(out_root / output_rel, mixed);
      rec.generated_path = generated_rel.generic_string();
      rec.output_path = output_rel.generic_string();
      out.io_s = sw.seconds();
    }
    out.embedding_line = emb_line.dump();
    outcomes[t] = std::move(out);
  };

  std::exception_ptr fatal;
  try {
    parallel_for(tasks.size(), config.concurrency, process);
  } catch (...) {
    fatal = std::current_exception();
  }

  std::vector<AugmentationRecord> records;
  std::string embedding_text;
  for (auto &o : outcomes) {
    if (!o)
      continue;
    timings.generation += o->generation_s;
    timings.mixing += o->mixing_s;
    timings.io += o->io_s;
    records.push_back(o->record);
    embedding_text += o->embedding_line + "\n";
  }

  watch = {};
  write_manifest(records, out_root / kManifestName);
  detail::write_text(out_root / kEmbeddingsName, embedding_text);
  timings.io += watch.seconds();

  std::map<std::string, std::size_t> sizes;
  for (const auto &c : index.classes)
    sizes[c.class_name] = c.n_k();
  RunReport report = summarize_run(records, timings, sizes);
  for (auto &s : report.classes)
    for (const auto &t : thresholds)
      if (t.class_name == s.class_name) {
        s.tau = t.tau;
        s.threshold = ThresholdInfo{t.pairs_used, t.pairs_total, t.seed, t.exhaustive};
      }
  if (config.overhead)
    report.augmentation_overhead = augmentation_overhead(*config.overhead);
  report.complete = !fatal;
  detail::write_text(out_root / kReportName, to_json(report).dump(2) + "\n");

  if (fatal) {
    std::string why = "unknown error";
    try {
      std::rethrow_exception(fatal);
    } catch (const std::exception &e) {
      why = e.what();
    } catch (...) {
    }
    detail::write_text(out_root / kIncompleteMarker, why + "\n");
    throw RunAborted("run aborted, partial manifest written: " + why);
  }
  return report;
}

inline RunReport run(const RunConfig &config) {
  validate(config);
  auto gen = make_generator(config);
  auto enc = make_encoder(config);
  return run(config, *gen, *enc);
}

/// Re-mixes every accepted record from its source image, the persisted generated image
/// and the recorded mix parameters. Relative paths resolve against the manifest's directory;
/// outputs go to `out_dir / output_path`. Returns the number of images written.
inline std::size_t replay(const std::filesystem::path &manifest_path, const std::filesystem::path &out_dir) {
  namespace fs = std::filesystem;
  const auto records = read_manifest(manifest_path);
  const fs::path base = manifest_path.has_parent_path() ? manifest_path.parent_path() : fs::path(".");
  auto resolve = [&](const std::string &p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
  std::size_t written = 0;
  for (const auto &r : records) {
    if (r.mix_kind == MixKind::none)
      continue;
    if (!r.generated_path || !r.output_path)
      throw ValidationError("record '" + r.record_id + "' is mixed but lacks generated_path/output_path");
    const auto original = read_png(r.source_path);
    const auto generated = read_png(resolve(*r.generated_path));
    const auto resized = resize_bilinear(generated, original.height(), original.width());
    const MixSpec spec = r.mix_kind == MixKind::pixel ? MixSpec::pixel(*r.lambda)
                                                      : MixSpec::patch(*r.patch_rect, *r.patch_direction);
    write_png(out_dir / *r.output_path, mix(original, resized, spec));
    ++written;
  }
  return written;
}

} // namespace coremix
