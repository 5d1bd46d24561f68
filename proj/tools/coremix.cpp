// coremix command-line front end: run / replay / report / overhead / synth / stub.

#include "coremix/coremix.hpp"
#include "coremix/stub.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

using namespace coremix;

constexpr int kExitOk = 0;
constexpr int kExitFatal = 1;
constexpr int kExitWithFailures = 2;

void print_overhead(double percent) { std::printf("%.1f\n", percent); }

std::vector<std::string> split_names(const std::string &csv) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : csv) {
    if (ch == ',') {
      if (!cur.empty())
        out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty())
    out.push_back(cur);
  return out;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"coremix: generative counterpart augmentation with hard-cosine filtration and image mixing"};
  app.require_subcommand(1);

  // run ----------------------------------------------------------------------
  RunConfig cfg;
  std::string backend = "mock";
  std::string prompts;
  std::vector<double> lambda_range{cfg.mix.lambda_min, cfg.mix.lambda_max};
  std::vector<double> area_range{cfg.mix.area_min, cfg.mix.area_max};
  std::uint64_t filter_seed = 0, mix_seed = 0;
  std::int64_t timeout_ms = cfg.timeout.count();
  std::string run_t_aug, run_t_van;

  auto *run_cmd = app.add_subcommand("run", "augment a folder-per-class dataset");
  run_cmd->add_option("--dataset", cfg.dataset_root, "dataset root (one subdirectory per class)")->required();
  run_cmd->add_option("--out", cfg.output_root, "output directory")->required();
  run_cmd->add_option("--dataset-type", cfg.dataset_type, "domain word substituted for <dataset_type>");
  run_cmd->add_option("--augment-percent", cfg.augment_percent, "percent of each class to augment, (0,100]");
  run_cmd->add_option("--backend", backend, "mock or remote")->check(CLI::IsMember({"mock", "remote"}));
  run_cmd->add_option("--gen-url", cfg.gen_url, "text-to-image endpoint (remote backend)");
  run_cmd->add_option("--embed-url", cfg.embed_url, "image encoder endpoint (remote backend)");
  run_cmd->add_option("--timeout-ms", timeout_ms, "per-request timeout for remote backends");
  run_cmd->add_option("--corrupt-fraction", cfg.corrupt_fraction, "mock generator: probability of a noise image");
  run_cmd->add_option("--seed", cfg.master_seed, "master seed");
  run_cmd->add_option("--concurrency", cfg.concurrency, "samples processed in parallel");
  run_cmd->add_option("--prompts", prompts, "prompt template file (JSON)");
  run_cmd->add_flag("--allow-default-prompts", cfg.allow_default_prompts, "use the built-in template if none is given");
  run_cmd->add_option("--guidance-scale", cfg.guidance_scale, "classifier-free guidance scale");
  run_cmd->add_option("--gen-width", cfg.gen_width, "requested generation width");
  run_cmd->add_option("--gen-height", cfg.gen_height, "requested generation height");
  run_cmd->add_option("--tau-pairs", cfg.tau_pairs, "max image pairs sampled per class threshold");
  run_cmd->add_option("--max-retries", cfg.max_retries, "generations tried per sample before giving up");
  auto *filter_seed_opt = run_cmd->add_option("--filter-seed", filter_seed, "seed for threshold pair sampling");
  run_cmd->add_option("--pi", cfg.mix.pi, "probability of pixel-wise (vs patch-wise) mixing");
  run_cmd->add_option("--lambda-range", lambda_range, "pixel blend weight range a,b")->delimiter(',')->expected(2);
  run_cmd->add_option("--patch-area-range", area_range, "patch area fraction range a,b")->delimiter(',')->expected(2);
  auto *mix_seed_opt = run_cmd->add_option("--mix-seed", mix_seed, "seed for mix parameter sampling");
  run_cmd->add_option("--t-aug", run_t_aug, "measured training time with augmentation (for the report)");
  run_cmd->add_option("--t-van", run_t_van, "measured baseline training time (for the report)");

  // replay -------------------------------------------------------------------
  std::string replay_manifest, replay_out;
  auto *replay_cmd = app.add_subcommand("replay", "re-create mixed images from a manifest");
  replay_cmd->add_option("--manifest", replay_manifest)->required();
  replay_cmd->add_option("--out", replay_out)->required();

  // report -------------------------------------------------------------------
  std::string report_manifest, report_t_aug, report_t_van;
  auto *report_cmd = app.add_subcommand("report", "summarize a manifest");
  report_cmd->add_option("--manifest", report_manifest)->required();
  report_cmd->add_option("--t-aug", report_t_aug);
  report_cmd->add_option("--t-van", report_t_van);

  // overhead -----------------------------------------------------------------
  std::string t_aug, t_van;
  auto *overhead_cmd = app.add_subcommand("overhead", "augmentation overhead (T_aug - T_van) / T_van * 100");
  overhead_cmd->add_option("--t-aug", t_aug, "e.g. 2h, 90m, 1h30m, 5400s")->required();
  overhead_cmd->add_option("--t-van", t_van)->required();

  // synth --------------------------------------------------------------------
  std::string synth_out, synth_classes = "cardinal,jay,sparrow", synth_type = "bird";
  std::size_t synth_n = 20, synth_size = 64;
  std::uint64_t synth_seed = 0;
  auto *synth_cmd = app.add_subcommand("synth", "write a synthetic dataset matching the mock backends");
  synth_cmd->add_option("--out", synth_out)->required();
  synth_cmd->add_option("--classes", synth_classes, "comma-separated class names");
  synth_cmd->add_option("--images-per-class", synth_n);
  synth_cmd->add_option("--dataset-type", synth_type);
  synth_cmd->add_option("--size", synth_size, "square image side in pixels");
  synth_cmd->add_option("--seed", synth_seed);

  // stub ---------------------------------------------------------------------
  int stub_port = 8080;
  std::string stub_mode = "echo";
  auto *stub_cmd = app.add_subcommand("stub", "serve the mock backends over the HTTP wire protocol");
  stub_cmd->add_option("--port", stub_port);
  stub_cmd->add_option("--mode", stub_mode)->check(CLI::IsMember({"echo", "wrong-dimension", "zero-embedding"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      cfg.backend = backend == "remote" ? BackendKind::remote : BackendKind::mock;
      cfg.timeout = std::chrono::milliseconds(timeout_ms);
      if (!prompts.empty())
        cfg.prompts = prompts;
      if (*filter_seed_opt)
        cfg.filter_seed = filter_seed;
      if (*mix_seed_opt)
        cfg.mix_seed = mix_seed;
      cfg.mix.lambda_min = lambda_range[0];
      cfg.mix.lambda_max = lambda_range[1];
      cfg.mix.area_min = area_range[0];
      cfg.mix.area_max = area_range[1];
      if (!run_t_aug.empty() || !run_t_van.empty())
        cfg.overhead = OverheadInput{parse_duration(run_t_aug), parse_duration(run_t_van)};
      const auto report = run(cfg);
      std::cout << to_json(report).dump(2) << "\n";
      return report.totals.failures > 0 ? kExitWithFailures : kExitOk;
    }
    if (*replay_cmd) {
      const auto n = replay(replay_manifest, replay_out);
      std::cout << "replayed " << n << " images into " << replay_out << "\n";
      return kExitOk;
    }
    if (*report_cmd) {
      auto report = summarize_run(read_manifest(report_manifest));
      if (!report_t_aug.empty() || !report_t_van.empty())
        report.augmentation_overhead =
            augmentation_overhead({parse_duration(report_t_aug), parse_duration(report_t_van)});
      std::cout << to_json(report).dump(2) << "\n";
      return kExitOk;
    }
    if (*overhead_cmd) {
      print_overhead(augmentation_overhead({parse_duration(t_aug), parse_duration(t_van)}));
      return kExitOk;
    }
    if (*synth_cmd) {
      write_synthetic_dataset(synth_out, {split_names(synth_classes), synth_n, synth_type, synth_size, synth_size,
                                          synth_seed});
      std::cout << "wrote synthetic dataset to " << synth_out << "\n";
      return kExitOk;
    }
    if (*stub_cmd) {
      StubBehavior behavior = stub_mode == "wrong-dimension"  ? StubBehavior::wrong_dimension()
                              : stub_mode == "zero-embedding" ? StubBehavior::zero_embedding()
                                                              : StubBehavior::echo();
      StubServer server(behavior, "127.0.0.1", stub_port);
      std::cout << "serving " << server.url() << " (/generate, /embed)" << std::endl;
      server.wait();
      return kExitOk;
    }
  } catch (const std::exception &e) {
    std::cerr << "coremix: " << e.what() << "\n";
    return kExitFatal;
  }
  return kExitOk;
}
