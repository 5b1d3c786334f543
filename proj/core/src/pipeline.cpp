#include "dippas/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <thread>

#include "dippas/assembly.hpp"
#include "dippas/errors.hpp"
#include "dippas/fingerprint.hpp"
#include "dippas/formats.hpp"
#include "dippas/image_io.hpp"
#include "dippas/metrics.hpp"
#include "dippas/plot.hpp"

namespace dippas {
namespace fs = std::filesystem;
namespace {

nlohmann::json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

std::string tau_label(double tau) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", tau);
  std::string s = buf;
  std::replace(s.begin(), s.end(), '.', 'p');
  return s;
}

double safe_ncc(const RasterImage& image, const Fingerprint& p) {
  try {
    return fingerprint_ncc(image, p);
  } catch (const DegenerateInputError&) {
    return 0.0;
  }
}

bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

RasterImage crop_if_needed(RasterImage image, std::size_t crop) {
  if (image.height() == crop && image.width() == crop) return image;
  return center_crop(image, crop);
}

}  // namespace

std::string to_string(AnonymizationMode mode) {
  return mode == AnonymizationMode::aware ? "aware" : "blind";
}

std::string OutputVariant::name() const {
  return "t" + tau_label(tau_psnr_db) + "_b" + std::to_string(block_size) + "_l" + std::to_string(average_count);
}

void PipelineConfig::validate() const {
  nn::validate(generator);
  dippas::validate(effective_run());
  if (tau_psnr_db.empty() || block_sizes.empty() || average_counts.empty()) {
    throw ConfigError("need at least one tau, block size and average count");
  }
  if (crop_size == 0) throw ConfigError("crop size must be positive");
  const std::size_t step = std::size_t{1} << generator.depth;
  if (crop_size % step != 0) {
    throw ConfigError("crop size " + std::to_string(crop_size) + " is not divisible by 2^depth = " +
                      std::to_string(step));
  }
  for (std::size_t b : block_sizes) {
    if (b == 0 || crop_size % b != 0) {
      throw ConfigError("crop size " + std::to_string(crop_size) + " is not divisible by block size " +
                        std::to_string(b));
    }
  }
  for (std::size_t l : average_counts) {
    if (l == 0) throw ConfigError("average count must be >= 1");
  }
  for (double t : tau_psnr_db) {
    if (!(t >= 0.0) || t > run.stop_psnr_db) {
      throw ConfigError("tau_psnr must lie in [0, stop_psnr]");
    }
  }
}

std::vector<OutputVariant> PipelineConfig::variants() const {
  std::vector<OutputVariant> out;
  for (double t : tau_psnr_db) {
    for (std::size_t b : block_sizes) {
      for (std::size_t l : average_counts) out.push_back({t, b, l});
    }
  }
  return out;
}

DipRunConfig PipelineConfig::effective_run() const {
  DipRunConfig r = run;
  if (!tau_psnr_db.empty()) r.tau_psnr_db = *std::min_element(tau_psnr_db.begin(), tau_psnr_db.end());
  r.generator_seed = seed;
  r.noise_seed = seed + 1;
  return r;
}

nlohmann::json PipelineConfig::to_json() const {
  const DipRunConfig r = effective_run();
  return {
      {"mode", to_string(mode)},
      {"crop_size", crop_size},
      {"generator",
       {{"depth", generator.depth},
        {"base_features", generator.base_features},
        {"input_channels", generator.input_channels},
        {"output_channels", generator.output_channels},
        {"negative_slope", generator.negative_slope}}},
      {"run",
       {{"learning_rate", r.learning_rate},
        {"max_iterations", r.max_iterations},
        {"stop_psnr_db", r.stop_psnr_db},
        {"tau_psnr_db", r.tau_psnr_db},
        {"perturbation_sigma", r.perturbation_sigma},
        {"generator_seed", r.generator_seed},
        {"noise_seed", r.noise_seed},
        {"ncc_probe_interval", r.ncc_probe_interval}}},
      {"tau_psnr_db", tau_psnr_db},
      {"block_sizes", block_sizes},
      {"average_counts", average_counts},
      {"snapshot_memory_mb", snapshot_memory_mb},
      {"seed", seed},
  };
}

Fingerprint injection_pattern(const RasterImage& image, const std::optional<Fingerprint>& prnu,
                              AnonymizationMode mode) {
  if (mode == AnonymizationMode::blind) {
    if (prnu) throw ConfigError("blind mode does not take a fingerprint");
    return extract_noise_residual(image);
  }
  if (!prnu) throw ConfigError("aware mode requires a device fingerprint");
  if (prnu->kind != FingerprintKind::device_prnu) throw ConfigError("aware mode requires a PRNU fingerprint");
  require_same_shape(image.shape(), prnu->shape, "anonymize");
  return *prnu;
}

AnonymizationResult anonymize_image(const RasterImage& image, const std::optional<Fingerprint>& prnu,
                                    const PipelineConfig& config, const TraceObserver& observer) {
  config.validate();
  if (image.height() != config.crop_size || image.width() != config.crop_size) {
    throw DimensionError("anonymize: image " + to_string(image.shape()) + " does not match crop size " +
                         std::to_string(config.crop_size));
  }
  const Fingerprint p = injection_pattern(image, prnu, config.mode);
  DipRunConfig run = config.effective_run();
  const std::size_t image_bytes = image.shape().size() * sizeof(double);
  run.snapshot_capacity = std::max<std::size_t>(1, config.snapshot_memory_mb * 1024 * 1024 / image_bytes);

  AnonymizationResult result;
  result.input_fingerprint_ncc = safe_ncc(image, p);
  SnapshotPool pool = run_dip(image, p, config.generator, run, observer);
  result.trace = pool.trace;
  result.snapshots = pool.size();
  result.final_gamma = pool.final_gamma;

  for (double tau : config.tau_psnr_db) {
    std::size_t members = 0;
    for (const auto& info : pool.infos()) members += info.psnr_db >= tau ? 1 : 0;
    for (std::size_t b : config.block_sizes) {
      std::vector<RasterImage> images;
      if (members > 0) images = assemble_many(pool, p, b, config.average_counts, tau);
      for (std::size_t k = 0; k < config.average_counts.size(); ++k) {
        const OutputVariant variant{tau, b, config.average_counts[k]};
        if (members == 0) {
          double best = -std::numeric_limits<double>::infinity();
          for (const auto& t : pool.trace) best = std::max(best, t.psnr_db);
          throw EmptyPoolError("variant " + variant.name() + ": no snapshot reached tau_psnr", best,
                               pool.trace.size());
        }
        VariantResult v{variant, std::move(images[k])};
        v.pool_size = members;
        v.psnr_db = psnr(v.image, image);
        v.fingerprint_ncc = safe_ncc(v.image, p);
        const RasterImage q = quantize(v.image, 8);
        v.quantized_psnr_db = psnr(q, image);
        v.quantized_fingerprint_ncc = safe_ncc(q, p);
        result.variants.push_back(std::move(v));
      }
    }
  }
  return result;
}

std::string trace_jsonl(std::span<const TraceRecord> trace) {
  std::string out;
  for (const TraceRecord& t : trace) {
    nlohmann::json j = {{"iteration", t.iteration},
                        {"loss", number(t.loss)},
                        {"psnr_db", number(t.psnr_db)},
                        {"gamma", number(t.gamma)}};
    if (t.fingerprint_ncc) j["fingerprint_ncc"] = number(*t.fingerprint_ncc);
    out += j.dump();
    out += '\n';
  }
  return out;
}

void write_anonymization(const AnonymizationResult& result, const PipelineConfig& config,
                         const std::string& image_id, const fs::path& dir) {
  fs::create_directories(dir);
  nlohmann::json variants = nlohmann::json::array();
  for (std::size_t i = 0; i < result.variants.size(); ++i) {
    const VariantResult& v = result.variants[i];
    const std::string stem = "anonymized_" + v.variant.name();
    write_png(dir / (stem + ".png"), v.image, 8);
    write_dpim(dir / (stem + ".dpimg"), v.image);
    if (i == 0) {
      write_png(dir / "anonymized.png", v.image, 8);
      write_dpim(dir / "anonymized.dpimg", v.image);
    }
    variants.push_back({{"name", v.variant.name()},
                        {"tau_psnr_db", v.variant.tau_psnr_db},
                        {"block_size", v.variant.block_size},
                        {"average_count", v.variant.average_count},
                        {"pool_size", v.pool_size},
                        {"float", {{"psnr_db", number(v.psnr_db)}, {"fingerprint_ncc", number(v.fingerprint_ncc)}}},
                        {"quantized",
                         {{"psnr_db", number(v.quantized_psnr_db)},
                          {"fingerprint_ncc", number(v.quantized_fingerprint_ncc)}}}});
  }
  const nlohmann::json meta = {{"id", image_id},
                               {"config", config.to_json()},
                               {"iterations", result.trace.size()},
                               {"snapshots", result.snapshots},
                               {"final_gamma", number(result.final_gamma)},
                               {"input_fingerprint_ncc", number(result.input_fingerprint_ncc)},
                               {"variants", std::move(variants)}};
  write_file_atomic(dir / "trace.jsonl", trace_jsonl(result.trace));
  write_file_atomic(dir / "metadata.json", meta.dump(2) + "\n");
}

// ----------------------------------------------------------------------------

Fingerprint cmd_estimate_prnu(const EstimatePrnuRequest& request, std::ostream& log) {
  log << "estimate-prnu: manifest=" << request.manifest.string() << " device=" << request.device
      << " crop_size=" << request.crop_size << " out=" << request.out.string() << "\n";
  const DatasetManifest manifest = DatasetManifest::load(request.manifest);
  const ManifestDevice& device = manifest.device(request.device);
  if (device.flats.empty()) throw ConfigError("device '" + request.device + "' has no flat-field images");
  std::vector<RasterImage> flats;
  flats.reserve(device.flats.size());
  for (const auto& f : device.flats) flats.push_back(load_and_prepare(manifest.resolve(f), request.crop_size));
  Fingerprint k = estimate_prnu_mle(flats);
  write_dpfp(request.out, k);
  log << "estimate-prnu: used " << flats.size() << " flat-field images\n";
  return k;
}

std::vector<AnonymizeJob> jobs_from_images(std::span<const fs::path> images,
                                           const std::optional<fs::path>& prnu, AnonymizationMode mode) {
  if (mode == AnonymizationMode::blind && prnu) {
    throw ConfigError("--blind and a fingerprint path are mutually exclusive");
  }
  if (mode == AnonymizationMode::aware && !prnu) throw ConfigError("aware mode requires a fingerprint path");
  std::vector<AnonymizeJob> jobs;
  std::set<std::string> ids;
  for (const auto& p : images) {
    const std::string id = p.stem().string();
    if (!ids.insert(id).second) throw ConfigError("duplicate image id '" + id + "'");
    jobs.push_back({id, p, prnu});
  }
  return jobs;
}

std::vector<AnonymizeJob> jobs_from_manifest(const DatasetManifest& manifest,
                                             const std::optional<fs::path>& fingerprints_dir,
                                             AnonymizationMode mode) {
  if (mode == AnonymizationMode::blind && fingerprints_dir) {
    throw ConfigError("--blind and a fingerprint directory are mutually exclusive");
  }
  std::vector<AnonymizeJob> jobs;
  std::vector<std::string> missing;
  for (const auto& d : manifest.devices) {
    std::optional<fs::path> prnu;
    if (mode == AnonymizationMode::aware) {
      if (fingerprints_dir) {
        prnu = *fingerprints_dir / (d.id + ".dpfp");
      } else if (d.fingerprint) {
        prnu = manifest.resolve(*d.fingerprint);
      }
      if (!prnu || !fs::exists(*prnu)) {
        missing.push_back(prnu ? prnu->string() : "fingerprint for device '" + d.id + "'");
        continue;
      }
    }
    for (const auto& im : d.images) jobs.push_back({im.id, manifest.resolve(im.path), prnu});
  }
  if (!missing.empty()) {
    std::string msg = "missing fingerprints:";
    for (const auto& m : missing) msg += "\n  " + m;
    throw ConfigError(msg);
  }
  return jobs;
}

std::vector<AnonymizationResult> cmd_anonymize(const AnonymizeRequest& request, std::ostream& log) {
  request.config.validate();
  for (const auto& job : request.jobs) {
    if (request.config.mode == AnonymizationMode::blind && job.prnu) {
      throw ConfigError("blind mode does not take a fingerprint (job " + job.id + ")");
    }
    if (request.config.mode == AnonymizationMode::aware && !job.prnu) {
      throw ConfigError("aware mode requires a fingerprint (job " + job.id + ")");
    }
  }
  const std::size_t workers = std::clamp<std::size_t>(request.workers, 1, std::max<std::size_t>(1, request.jobs.size()));
  log << "anonymize: config " << request.config.to_json().dump() << "\n";
  log << "anonymize: " << request.jobs.size() << " image(s), " << workers << " worker(s), out="
      << request.out_dir.string() << "\n";

  std::vector<AnonymizationResult> results(request.jobs.size());
  std::vector<std::exception_ptr> errors(request.jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < request.jobs.size(); i = next++) {
      const AnonymizeJob& job = request.jobs[i];
      try {
        const RasterImage image = load_and_prepare(job.image, request.config.crop_size);
        std::optional<Fingerprint> prnu;
        if (job.prnu) prnu = read_dpfp(*job.prnu);
        results[i] = anonymize_image(image, prnu, request.config);
        write_anonymization(results[i], request.config, job.id, request.out_dir / job.id);
        const auto& v = results[i].variants.front();
        std::lock_guard lock(log_mutex);
        char line[256];
        std::snprintf(line, sizeof line,
                      "anonymize: %s iterations=%zu snapshots=%zu psnr=%.2f dB ncc %.4f -> %.4f\n",
                      job.id.c_str(), results[i].trace.size(), results[i].snapshots, v.psnr_db,
                      results[i].input_fingerprint_ncc, v.fingerprint_ncc);
        log << line;
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  for (std::size_t w = 1; w < workers; ++w) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const EmptyPoolError& e) {
      throw EmptyPoolError(request.jobs[i].id + ": " + e.what() + "; lower --tau-psnr to at most the best PSNR",
                           e.best_psnr_db(), e.iterations());
    }
  }
  return results;
}

// ----------------------------------------------------------------------------

EvaluationReport cmd_evaluate(const EvaluateRequest& request, std::ostream& log) {
  log << "evaluate: originals=" << request.originals.string() << " anonymized=" << request.anonymized.string()
      << " fingerprints=" << request.fingerprints.string() << " report=" << request.report.string()
      << " variant=" << request.variant << " crop_size=" << request.crop_size
      << " edge_analysis=" << (request.options.edge_analysis ? "on" : "off") << "\n";
  std::vector<std::string> missing;
  auto require_dir = [&](const fs::path& p, const char* what) {
    if (!fs::is_directory(p)) missing.push_back(std::string(what) + " directory " + p.string());
  };
  require_dir(request.originals, "originals");
  require_dir(request.anonymized, "anonymized");
  require_dir(request.fingerprints, "fingerprints");

  std::optional<DatasetManifest> manifest;
  std::optional<fs::path> manifest_path = request.manifest;
  if (!manifest_path) {
    for (const fs::path& cand : {request.originals / "manifest.json", request.originals.parent_path() / "manifest.json"}) {
      if (fs::exists(cand)) {
        manifest_path = cand;
        break;
      }
    }
  }
  if (manifest_path) {
    if (fs::exists(*manifest_path)) {
      manifest = DatasetManifest::load(*manifest_path, false);
    } else {
      missing.push_back("manifest " + manifest_path->string());
    }
  }

  std::vector<fs::path> originals;
  if (fs::is_directory(request.originals)) {
    for (const auto& e : fs::directory_iterator(request.originals)) {
      if (e.is_regular_file() && is_image_file(e.path())) originals.push_back(e.path());
    }
  }
  std::sort(originals.begin(), originals.end());
  if (originals.empty() && fs::is_directory(request.originals)) {
    missing.push_back("images in " + request.originals.string());
  }

  struct Pending {
    std::string id;
    std::string device;
    fs::path original;
    fs::path anonymized;
    std::optional<fs::path> quantized;
  };
  std::vector<Pending> pending;
  std::set<std::string> devices;
  const std::string stem = request.variant == "anonymized" ? "anonymized" : "anonymized_" + request.variant;
  for (const auto& path : originals) {
    Pending p{path.stem().string(), {}, path, {}, std::nullopt};
    if (manifest) {
      if (auto d = manifest->device_of(p.id)) p.device = *d;
    } else {
      const auto cut = p.id.find('_');
      if (cut != std::string::npos) p.device = p.id.substr(0, cut);
    }
    if (p.device.empty()) {
      missing.push_back("device label for image " + p.id);
      continue;
    }
    const fs::path run_dir = request.anonymized / p.id;
    if (fs::exists(run_dir / (stem + ".dpimg"))) {
      p.anonymized = run_dir / (stem + ".dpimg");
      if (fs::exists(run_dir / (stem + ".png"))) p.quantized = run_dir / (stem + ".png");
    } else if (fs::exists(run_dir / (stem + ".png"))) {
      p.anonymized = run_dir / (stem + ".png");
    } else {
      bool found = false;
      for (const char* ext : {".dpimg", ".png", ".jpg", ".jpeg"}) {
        if (fs::exists(request.anonymized / (p.id + ext))) {
          p.anonymized = request.anonymized / (p.id + ext);
          found = true;
          break;
        }
      }
      if (!found) {
        missing.push_back("anonymized image for " + p.id);
        continue;
      }
    }
    devices.insert(p.device);
    pending.push_back(std::move(p));
  }
  std::map<std::string, Fingerprint> fingerprints;
  for (const auto& d : devices) {
    const fs::path fp = request.fingerprints / (d + ".dpfp");
    if (!fs::exists(fp)) {
      missing.push_back("fingerprint " + fp.string());
      continue;
    }
    fingerprints.emplace(d, read_dpfp(fp));
  }
  if (!missing.empty()) {
    std::string msg = "evaluate: missing inputs:";
    for (const auto& m : missing) msg += "\n  " + m;
    throw ConfigError(msg);
  }

  auto load_any = [&](const fs::path& p) {
    if (p.extension() == ".dpimg") return crop_if_needed(read_dpim(p), request.crop_size);
    return load_and_prepare(p, request.crop_size);
  };
  std::vector<DatasetImage> images;
  for (const auto& p : pending) {
    DatasetImage im{p.id, p.device, load_and_prepare(p.original, request.crop_size), load_any(p.anonymized),
                    std::nullopt};
    if (p.quantized) im.anonymized_quantized = load_and_prepare(*p.quantized, request.crop_size);
    images.push_back(std::move(im));
  }
  EvaluationReport report = evaluate_dataset(images, fingerprints, request.options);

  const fs::path meta = request.anonymized / pending.front().id / "metadata.json";
  if (fs::exists(meta)) {
    const auto bytes = read_file(meta);
    const auto j = nlohmann::json::parse(bytes.begin(), bytes.end(), nullptr, false);
    if (!j.is_discarded() && j.contains("config") && j.contains("variants")) {
      report.config.mode = j["config"].value("mode", "");
      for (const auto& v : j["variants"]) {
        if (stem == "anonymized" || v.value("name", "") == request.variant) {
          report.config.tau_psnr_db = v.value("tau_psnr_db", 0.0);
          report.config.block_size = v.value("block_size", std::size_t{0});
          report.config.average_count = v.value("average_count", std::size_t{0});
          break;
        }
      }
    }
  } else {
    report.config.mode = "none";
  }

  if (request.report.has_parent_path()) fs::create_directories(request.report.parent_path());
  write_file_atomic(request.report, to_json(report).dump(2) + "\n");
  const fs::path plot_dir = request.plot_dir ? *request.plot_dir : request.report.parent_path();
  write_plots(report, plot_dir.empty() ? fs::path(".") : plot_dir);
  char line[160];
  std::snprintf(line, sizeof line, "evaluate: %zu images, %zu devices, pooled AUC %.4f\n", report.per_image.size(),
                fingerprints.size(), report.auc);
  log << line;
  return report;
}

SynthCorpus cmd_synth(const SynthRequest& request, std::ostream& log) {
  const SynthSpec& s = request.spec;
  log << "synth: devices=" << s.devices << " images_per_device=" << s.images_per_device
      << " flats_per_device=" << s.flats_per_device << " size=" << s.size << " channels=" << s.channels
      << " gamma=" << s.gamma << " theta_sigma=" << s.theta_sigma << " prnu_stddev=" << s.prnu_stddev
      << " seed=" << s.seed << " out=" << request.out_dir.string() << "\n";
  SynthCorpus corpus = synthesize_corpus(s);
  write_corpus(corpus, request.out_dir);
  log << "synth: wrote " << corpus.images.size() << " images and " << corpus.devices.size() << " fingerprints\n";
  return corpus;
}

std::size_t worker_count_from_env(std::size_t fallback) {
  const char* v = std::getenv("DIPPAS_WORKERS");
  if (v == nullptr || *v == '\0') return fallback;
  char* end = nullptr;
  const unsigned long n = std::strtoul(v, &end, 10);
  if (end == v || *end != '\0' || n == 0) throw ConfigError(std::string("DIPPAS_WORKERS must be a positive integer, got '") + v + "'");
  return static_cast<std::size_t>(n);
}

}  // namespace dippas
