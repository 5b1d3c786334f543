#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dippas/dip.hpp"
#include "dippas/evaluation.hpp"
#include "dippas/manifest.hpp"
#include "dippas/synth.hpp"

namespace dippas {

enum class AnonymizationMode { aware, blind };
std::string to_string(AnonymizationMode mode);

// One (tau, B, L) output of an anonymization run.
struct OutputVariant {
  double tau_psnr_db = 30.0;
  std::size_t block_size = 64;
  std::size_t average_count = 5;
  std::string name() const;  // e.g. "t30_b64_l5"
};

struct PipelineConfig {
  AnonymizationMode mode = AnonymizationMode::aware;
  std::size_t crop_size = 512;
  GeneratorConfig generator;
  DipRunConfig run;  // run.tau_psnr_db is replaced by the smallest configured tau
  std::vector<double> tau_psnr_db = {30.0};
  std::vector<std::size_t> block_sizes = {64};
  std::vector<std::size_t> average_counts = {5};
  std::size_t snapshot_memory_mb = 256;
  std::uint64_t seed = 0;  // generator seed; the noise seed is seed + 1

  // Throws ConfigError, e.g. when crop_size is not divisible by 2^depth or by a block size.
  void validate() const;
  std::vector<OutputVariant> variants() const;  // tau-major, then B, then L
  DipRunConfig effective_run() const;
  nlohmann::json to_json() const;
};

struct VariantResult {
  OutputVariant variant;
  RasterImage image;
  std::size_t pool_size = 0;  // snapshots with psnr >= tau
  double psnr_db = 0.0;
  double fingerprint_ncc = 0.0;
  double quantized_psnr_db = 0.0;
  double quantized_fingerprint_ncc = 0.0;
};

struct AnonymizationResult {
  std::vector<VariantResult> variants;
  std::vector<TraceRecord> trace;
  std::size_t snapshots = 0;
  double final_gamma = 0.0;
  double input_fingerprint_ncc = 0.0;
};

// The pattern injected during optimization: `prnu` in aware mode, the
// image's own noise residual in blind mode.
Fingerprint injection_pattern(const RasterImage& image, const std::optional<Fingerprint>& prnu,
                              AnonymizationMode mode);

// run_dip followed by assembly for every configured variant. Aware mode needs
// `prnu`; blind mode rejects it. Snapshots beyond the memory budget spill to a
// temporary directory removed afterwards.
AnonymizationResult anonymize_image(const RasterImage& image, const std::optional<Fingerprint>& prnu,
                                    const PipelineConfig& config, const TraceObserver& observer = {});

// Writes <dir>/anonymized_<variant>.{png,dpimg}, anonymized.{png,dpimg} for
// the first variant, trace.jsonl and metadata.json.
void write_anonymization(const AnonymizationResult& result, const PipelineConfig& config,
                         const std::string& image_id, const std::filesystem::path& dir);

std::string trace_jsonl(std::span<const TraceRecord> trace);

// ----------------------------------------------------------------------------
// Commands. Each prints its effective configuration to `log`.

struct EstimatePrnuRequest {
  std::filesystem::path manifest;
  std::string device;
  std::filesystem::path out;
  std::size_t crop_size = 512;
};
Fingerprint cmd_estimate_prnu(const EstimatePrnuRequest& request, std::ostream& log);

struct AnonymizeJob {
  std::string id;
  std::filesystem::path image;
  std::optional<std::filesystem::path> prnu;
};

struct AnonymizeRequest {
  std::vector<AnonymizeJob> jobs;
  std::filesystem::path out_dir;  // one sub-directory per job id
  PipelineConfig config;
  std::size_t workers = 1;
};

// Jobs from explicit images (aware needs `prnu`, blind forbids it).
std::vector<AnonymizeJob> jobs_from_images(std::span<const std::filesystem::path> images,
                                           const std::optional<std::filesystem::path>& prnu,
                                           AnonymizationMode mode);
// Jobs for every manifest image; aware mode takes <fingerprints_dir>/<device>.dpfp
// (or the manifest's fingerprint entry when no directory is given).
std::vector<AnonymizeJob> jobs_from_manifest(const DatasetManifest& manifest,
                                             const std::optional<std::filesystem::path>& fingerprints_dir,
                                             AnonymizationMode mode);

// Runs the jobs on up to `workers` threads; returns results in job order.
// Throws ConfigError on invalid requests and rethrows the first job failure
// (EmptyPoolError carries the best PSNR reached).
std::vector<AnonymizationResult> cmd_anonymize(const AnonymizeRequest& request, std::ostream& log);

struct EvaluateRequest {
  std::filesystem::path originals;
  std::filesystem::path anonymized;
  std::filesystem::path fingerprints;
  std::filesystem::path report;
  std::optional<std::filesystem::path> manifest;  // device labels; defaults to originals/../manifest.json
  std::string variant = "anonymized";
  std::optional<std::filesystem::path> plot_dir;  // defaults to the report's directory
  std::size_t crop_size = 512;
  EvaluationOptions options;
};

// Throws ConfigError listing every missing input at once.
EvaluationReport cmd_evaluate(const EvaluateRequest& request, std::ostream& log);

struct SynthRequest {
  SynthSpec spec;
  std::filesystem::path out_dir;
};
SynthCorpus cmd_synth(const SynthRequest& request, std::ostream& log);

// DIPPAS_WORKERS when set, else `fallback`. Throws ConfigError unless it is a positive integer.
std::size_t worker_count_from_env(std::size_t fallback = 1);

}  // namespace dippas
