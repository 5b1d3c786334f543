#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dippas/errors.hpp"
#include "dippas/manifest.hpp"
#include "dippas/pipeline.hpp"

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kIo = 3, kEmptyPool = 4 };

int run(CLI::App& app, int argc, char** argv) {
  using namespace dippas;
  namespace fs = std::filesystem;

  // estimate-prnu
  EstimatePrnuRequest est;
  auto* estimate = app.add_subcommand("estimate-prnu", "Estimate a device PRNU from its flat-field images");
  estimate->add_option("--manifest", est.manifest, "Dataset manifest (JSON)")->required()->check(CLI::ExistingFile);
  estimate->add_option("--device", est.device, "Device id")->required();
  estimate->add_option("--out", est.out, "Output .dpfp file")->required();
  estimate->add_option("--crop", est.crop_size, "Center-crop size")->capture_default_str();

  // anonymize
  PipelineConfig cfg;
  cfg.run.learning_rate = 1e-3;
  cfg.run.max_iterations = 10000;
  cfg.run.stop_psnr_db = 39.0;
  std::vector<fs::path> images;
  std::optional<fs::path> anon_manifest;
  std::optional<fs::path> prnu;
  std::optional<fs::path> fingerprints_dir;
  bool blind = false;
  fs::path anon_out;
  std::size_t workers = 0;
  auto* anonymize = app.add_subcommand("anonymize", "Remove the device fingerprint from images");
  auto* image_opt = anonymize->add_option("--image", images, "Input image(s)")->check(CLI::ExistingFile);
  auto* manifest_opt =
      anonymize->add_option("--manifest", anon_manifest, "Anonymize every image of a manifest")->check(CLI::ExistingFile);
  image_opt->excludes(manifest_opt);
  anonymize->add_option("--prnu", prnu, "Device fingerprint (.dpfp), aware mode")->check(CLI::ExistingFile);
  anonymize->add_option("--fingerprints", fingerprints_dir,
                                           "Directory of <device>.dpfp files (with --manifest)");
  anonymize->add_flag("--blind", blind, "Blind mode: inject the image's own noise residual");
  anonymize->add_option("--tau-psnr", cfg.tau_psnr_db, "Snapshot PSNR threshold(s) [dB]")->capture_default_str();
  anonymize->add_option("--stop-psnr", cfg.run.stop_psnr_db, "Stop PSNR [dB]")->capture_default_str();
  anonymize->add_option("--max-iters", cfg.run.max_iterations, "Iteration cap")->capture_default_str();
  anonymize->add_option("--block-size", cfg.block_sizes, "Assembly block size(s) B")->capture_default_str();
  anonymize->add_option("--avg-count", cfg.average_counts, "Blocks averaged per position L")->capture_default_str();
  anonymize->add_option("--seed", cfg.seed, "Generator seed (noise seed is seed + 1)")->capture_default_str();
  anonymize->add_option("--lr", cfg.run.learning_rate, "Adam learning rate")->capture_default_str();
  anonymize->add_option("--perturbation", cfg.run.perturbation_sigma, "Std of the per-iteration input perturbation")
      ->capture_default_str();
  anonymize->add_option("--depth", cfg.generator.depth, "Generator depth")->capture_default_str();
  anonymize->add_option("--features", cfg.generator.base_features, "Features of the first MultiRes block")
      ->capture_default_str();
  anonymize->add_option("--crop", cfg.crop_size, "Center-crop size")->capture_default_str();
  anonymize->add_option("--probe-every", cfg.run.ncc_probe_interval, "Log the fingerprint NCC every N iterations")
      ->capture_default_str();
  anonymize->add_option("--snapshot-memory-mb", cfg.snapshot_memory_mb, "In-memory snapshot budget")
      ->capture_default_str();
  anonymize->add_option("--workers", workers, "Parallel images (default: DIPPAS_WORKERS or 1)");
  anonymize->add_option("--out", anon_out, "Output directory")->required();

  // evaluate
  EvaluateRequest ev;
  bool no_edges = false;
  auto* evaluate = app.add_subcommand("evaluate", "Score anonymized images with the PRNU detector");
  evaluate->add_option("--originals", ev.originals, "Original images")->required();
  evaluate->add_option("--anonymized", ev.anonymized, "Anonymization output directory")->required();
  evaluate->add_option("--fingerprints", ev.fingerprints, "Directory of <device>.dpfp files")->required();
  evaluate->add_option("--report", ev.report, "Report path (JSON)")->required();
  evaluate->add_option("--manifest", ev.manifest, "Manifest giving image devices");
  evaluate->add_option("--variant", ev.variant, "Output variant, e.g. t30_b64_l5")->capture_default_str();
  evaluate->add_option("--plots", ev.plot_dir, "Plot directory (default: next to the report)");
  evaluate->add_option("--crop", ev.crop_size, "Center-crop size")->capture_default_str();
  evaluate->add_flag("--no-edges", no_edges, "Skip the edge-region analysis");

  // synth
  SynthRequest syn;
  auto* synth = app.add_subcommand("synth", "Write a synthetic multi-device corpus");
  synth->add_option("--devices", syn.spec.devices, "Number of devices")->capture_default_str();
  synth->add_option("--images-per-device", syn.spec.images_per_device, "Images per device")->capture_default_str();
  synth->add_option("--flats-per-device", syn.spec.flats_per_device, "Flat-field images per device")
      ->capture_default_str();
  synth->add_option("--size", syn.spec.size, "Image side")->capture_default_str();
  synth->add_option("--gamma", syn.spec.gamma, "PRNU weight")->capture_default_str();
  synth->add_option("--theta-sigma", syn.spec.theta_sigma, "Additive noise std")->capture_default_str();
  synth->add_option("--prnu-std", syn.spec.prnu_stddev, "PRNU std")->capture_default_str();
  synth->add_option("--seed", syn.spec.seed, "Seed")->capture_default_str();
  synth->add_option("--out", syn.out_dir, "Output directory")->required();

  app.require_subcommand(1);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*estimate) {
      cmd_estimate_prnu(est, std::cout);
    } else if (*anonymize) {
      cfg.mode = blind ? AnonymizationMode::blind : AnonymizationMode::aware;
      AnonymizeRequest req;
      req.config = cfg;
      req.out_dir = anon_out;
      req.workers = workers > 0 ? workers : worker_count_from_env(1);
      if (anon_manifest) {
        if (prnu) throw ConfigError("use --fingerprints (not --prnu) with --manifest");
        req.jobs = jobs_from_manifest(DatasetManifest::load(*anon_manifest), fingerprints_dir, cfg.mode);
      } else {
        if (images.empty()) throw ConfigError("give --image or --manifest");
        if (fingerprints_dir) throw ConfigError("--fingerprints needs --manifest");
        req.jobs = jobs_from_images(images, prnu, cfg.mode);
      }
      cmd_anonymize(req, std::cout);
    } else if (*evaluate) {
      ev.options.edge_analysis = !no_edges;
      cmd_evaluate(ev, std::cout);
    } else if (*synth) {
      cmd_synth(syn, std::cout);
    }
  } catch (const EmptyPoolError& e) {
    std::fprintf(stderr, "error: %s (best PSNR %.2f dB after %zu iterations)\n", e.what(), e.best_psnr_db(),
                 e.iterations());
    return kEmptyPool;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return kConfig;
  } catch (const IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return kIo;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailure;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dippas: PRNU anonymization with an untrained generator prior"};
  return run(app, argc, argv);
}
