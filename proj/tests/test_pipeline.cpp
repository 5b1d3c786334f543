#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "dippas/errors.hpp"
#include "dippas/formats.hpp"
#include "dippas/image_io.hpp"
#include "dippas/pipeline.hpp"

namespace dippas {
namespace {

namespace fs = std::filesystem;

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("dippas_pipeline_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::vector<std::uint8_t> bytes_of(const fs::path& p) { return read_file(p); }

SynthSpec small_spec() {
  SynthSpec s;
  s.devices = 2;
  s.images_per_device = 10;
  s.flats_per_device = 6;
  s.size = 64;
  return s;
}

PipelineConfig small_config() {
  PipelineConfig c;
  c.crop_size = 64;
  c.generator.depth = 2;
  c.generator.base_features = 8;
  c.run.stop_psnr_db = 32.0;
  c.run.max_iterations = 1500;
  c.tau_psnr_db = {29.0};
  c.block_sizes = {16, 32};
  c.average_counts = {1, 5};
  c.seed = 3;
  return c;
}

TEST(Config, VariantsAndValidation) {
  auto c = small_config();
  EXPECT_NO_THROW(c.validate());
  const auto v = c.variants();
  ASSERT_EQ(v.size(), 4u);
  EXPECT_EQ(v[0].name(), "t29_b16_l1");
  EXPECT_EQ(v[3].name(), "t29_b32_l5");
  EXPECT_EQ((OutputVariant{30.5, 64, 5}.name()), "t30p5_b64_l5");
  const auto run = c.effective_run();
  EXPECT_EQ(run.tau_psnr_db, 29.0);
  EXPECT_EQ(run.generator_seed, 3u);
  EXPECT_EQ(run.noise_seed, 4u);

  c.block_sizes = {24};
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_config();
  c.crop_size = 34;  // not divisible by 2^depth
  c.block_sizes = {2};
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_config();
  c.tau_psnr_db = {40.0};
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_config();
  c.average_counts = {0};
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Jobs, BlindWithFingerprintIsAConfigError) {
  const std::vector<fs::path> images = {"a.png"};
  EXPECT_THROW(jobs_from_images(images, fs::path("k.dpfp"), AnonymizationMode::blind), ConfigError);
  EXPECT_THROW(jobs_from_images(images, std::nullopt, AnonymizationMode::aware), ConfigError);
  const auto jobs = jobs_from_images(images, std::nullopt, AnonymizationMode::blind);
  ASSERT_EQ(jobs.size(), 1u);
  EXPECT_EQ(jobs[0].id, "a");
}

TEST(InjectionPattern, ModeSelectsThePattern) {
  const Shape s{32, 32, 3};
  const auto im = smooth_texture(s, 1);
  const Fingerprint k(s, std::vector<double>(s.size(), 0.01), FingerprintKind::device_prnu);
  EXPECT_EQ(injection_pattern(im, k, AnonymizationMode::aware).pattern, k.pattern);
  EXPECT_EQ(injection_pattern(im, std::nullopt, AnonymizationMode::blind).kind, FingerprintKind::noise_residual);
  EXPECT_THROW(injection_pattern(im, k, AnonymizationMode::blind), ConfigError);
  EXPECT_THROW(injection_pattern(im, std::nullopt, AnonymizationMode::aware), ConfigError);
}

TEST(Env, WorkerCount) {
  ::setenv("DIPPAS_WORKERS", "3", 1);
  EXPECT_EQ(worker_count_from_env(1), 3u);
  ::setenv("DIPPAS_WORKERS", "zero", 1);
  EXPECT_THROW(worker_count_from_env(2), ConfigError);
  ::unsetenv("DIPPAS_WORKERS");
  EXPECT_EQ(worker_count_from_env(5), 5u);
}

class CorpusFixture : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fs::path(fresh_dir("corpus"));
    std::ostringstream log;
    cmd_synth({small_spec(), *dir_}, log);
  }
  static void TearDownTestSuite() {
    fs::remove_all(*dir_);
    delete dir_;
  }
  static fs::path* dir_;
};
fs::path* CorpusFixture::dir_ = nullptr;

TEST_F(CorpusFixture, SynthWritesExpectedFilesDeterministically) {
  std::size_t images = 0;
  for (const auto& e : fs::directory_iterator(*dir_ / "images")) images += e.path().extension() == ".png";
  EXPECT_EQ(images, 20u);
  EXPECT_TRUE(fs::exists(*dir_ / "fingerprints" / "dev0.dpfp"));
  EXPECT_TRUE(fs::exists(*dir_ / "fingerprints" / "dev1.dpfp"));
  EXPECT_TRUE(fs::exists(*dir_ / "manifest.json"));
  const auto manifest = DatasetManifest::load(*dir_ / "manifest.json");
  EXPECT_EQ(manifest.device("dev1").flats.size(), 6u);

  const auto again = fresh_dir("corpus_again");
  std::ostringstream log;
  cmd_synth({small_spec(), again}, log);
  for (const auto& e : fs::recursive_directory_iterator(*dir_)) {
    if (!e.is_regular_file()) continue;
    EXPECT_EQ(bytes_of(e.path()), bytes_of(again / fs::relative(e.path(), *dir_))) << e.path();
  }
  fs::remove_all(again);
}

TEST_F(CorpusFixture, EstimatePrnuWritesARoundTrippingFile) {
  const auto out = *dir_ / "est" / "dev0.dpfp";
  std::ostringstream log;
  const auto fp = cmd_estimate_prnu({*dir_ / "manifest.json", "dev0", out, 64}, log);
  EXPECT_EQ(fp.kind, FingerprintKind::device_prnu);
  const auto back = read_dpfp(out);
  EXPECT_EQ(back.kind, FingerprintKind::device_prnu);
  for (std::size_t i = 0; i < fp.pattern.size(); ++i) EXPECT_EQ(back.pattern[i], static_cast<float>(fp.pattern[i]));
  EXPECT_NE(log.str().find("dev0"), std::string::npos);
  EXPECT_THROW(cmd_estimate_prnu({*dir_ / "manifest.json", "dev9", out, 64}, log), ConfigError);
}

TEST_F(CorpusFixture, EstimatePrnuWithoutFlatsFails) {
  auto m = DatasetManifest::load(*dir_ / "manifest.json");
  m.devices[0].flats.clear();
  m.save(*dir_ / "noflats.json");
  std::ostringstream log;
  EXPECT_THROW(cmd_estimate_prnu({*dir_ / "noflats.json", "dev0", *dir_ / "x.dpfp", 64}, log), ConfigError);
}

TEST_F(CorpusFixture, IdentityEvaluationDetectsDevicesAndReportRoundTrips) {
  const auto out = fresh_dir("eval");
  EvaluateRequest r;
  r.originals = *dir_ / "images";
  r.anonymized = *dir_ / "images";
  r.fingerprints = *dir_ / "fingerprints";
  r.report = out / "report.json";
  r.crop_size = 64;
  std::ostringstream log;
  const auto report = cmd_evaluate(r, log);
  EXPECT_GT(report.auc, 0.9);
  EXPECT_EQ(report.per_image.size(), 20u);
  EXPECT_EQ(report.config.mode, "none");
  const auto bytes = bytes_of(r.report);
  EXPECT_EQ(report_from_json(nlohmann::json::parse(bytes.begin(), bytes.end())), report);
  EXPECT_TRUE(fs::exists(out / "roc.svg"));
  EXPECT_TRUE(fs::exists(out / "psnr_auc.svg"));
  fs::remove_all(out);
}

TEST_F(CorpusFixture, EvaluateListsEveryMissingInputOnce) {
  const auto fps = fresh_dir("fps_partial");
  fs::copy_file(*dir_ / "fingerprints" / "dev0.dpfp", fps / "dev0.dpfp");
  EvaluateRequest r;
  r.originals = *dir_ / "images";
  r.anonymized = *dir_ / "images";
  r.fingerprints = fps;
  r.report = fps / "report.json";
  r.crop_size = 64;
  std::ostringstream log;
  try {
    cmd_evaluate(r, log);
    FAIL();
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("dev1.dpfp"), std::string::npos);
    EXPECT_EQ(what.find("dev0.dpfp"), std::string::npos);
  }
  EXPECT_FALSE(fs::exists(r.report));
  fs::remove_all(fps);
}

TEST_F(CorpusFixture, AwareAnonymizationLowersNccAndIsReproducible) {
  const auto out_a = fresh_dir("anon_a");
  const auto out_b = fresh_dir("anon_b");
  AnonymizeRequest req;
  req.jobs = {{"dev0_000", *dir_ / "images" / "dev0_000.png", *dir_ / "fingerprints" / "dev0.dpfp"}};
  req.config = small_config();
  req.out_dir = out_a;
  std::ostringstream log;
  const auto a = cmd_anonymize(req, log);
  req.out_dir = out_b;
  req.workers = 2;
  const auto b = cmd_anonymize(req, log);
  ASSERT_EQ(a.size(), 1u);
  ASSERT_EQ(a[0].variants.size(), 4u);
  for (const auto& v : a[0].variants) {
    EXPECT_LT(std::abs(v.fingerprint_ncc), a[0].input_fingerprint_ncc);
    EXPECT_GE(v.psnr_db, 20.0);
  }
  for (const char* f : {"anonymized.png", "anonymized.dpimg", "anonymized_t29_b32_l5.png", "trace.jsonl", "metadata.json"}) {
    const auto pa = out_a / "dev0_000" / f;
    ASSERT_TRUE(fs::exists(pa)) << f;
    EXPECT_EQ(bytes_of(pa), bytes_of(out_b / "dev0_000" / f)) << f;
  }
  const auto meta = nlohmann::json::parse(std::string(
      [&] { auto v = bytes_of(out_a / "dev0_000" / "metadata.json"); return std::string(v.begin(), v.end()); }()));
  EXPECT_EQ(meta["config"]["seed"], 3);
  EXPECT_NE(log.str().find("seed"), std::string::npos);
  fs::remove_all(out_a);
  fs::remove_all(out_b);
}

}  // namespace
}  // namespace dippas
