// egomem: simulate a self-supervised data-collection session and evaluate
// recognition on the collected dataset.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "egomem/egomem.hpp"

namespace fs = std::filesystem;
using namespace egomem;

namespace {

std::string slurp(const fs::path& p) {
  const auto d = io::read_file(p);
  return {d.begin(), d.end()};
}

void require(const fs::path& p, const char* what) {
  if (!fs::exists(p)) throw IoError(std::string("missing ") + what + " (run the earlier subcommands first)", p.string());
}

int cmd_simulate(const std::string& scenario, std::uint64_t seed, const fs::path& out) {
  const auto cfg = scenario.empty() ? world::default_scenario(seed) : world::parse_scenario(slurp(scenario), seed);
  const auto sim = session::simulate(cfg);
  for (const char* sub : {"dataset", "test", "features", "enroll", "eval"}) fs::remove_all(out / sub);
  session::write_outputs(sim, out);
  io::write_file(out / "summary.txt", sim.summary());
  std::cout << sim.summary();
  if (!sim.complete) {
    std::cerr << "error: the game did not reach GameEnd; see " << (out / "trace.txt").string() << '\n';
    return 2;
  }
  return 0;
}

int cmd_features(const fs::path& out) {
  require(out / "dataset" / "manifest.txt", "dataset");
  require(out / "ego_noise.wav", "ego-noise recording");
  fs::remove_all(out / "features");
  const auto s = pipeline::extract_features(out);
  std::printf("voice chunks: %zu seen, %zu kept by VAD\n", s.chunks_seen, s.chunks_kept);
  return 0;
}

int cmd_enroll(const fs::path& out) {
  require(out / "features" / "index.txt", "features");
  const auto [faces, voices] = pipeline::enroll(out);
  std::printf("enrolled %zu face and %zu voice embeddings\n", faces, voices);
  return 0;
}

int cmd_evaluate(const fs::path& out, std::optional<double> threshold, bool sweep, const std::string& classifier) {
  require(out / "features" / "index.txt", "features");
  require(out / "test" / "manifest.txt", "test split");
  std::string report;
  fs::create_directories(out / "eval");
  if (classifier.empty()) {
    require(out / "enroll" / "faces.db", "enrollment");
    const auto fdb = pipeline::load_db(out / "enroll" / "faces.db");
    const auto vdb = pipeline::load_db(out / "enroll" / "voices.db");
    report += pipeline::to_text(pipeline::open_set("faces", fdb, pipeline::face_set(out / "test"),
                                                   threshold.value_or(recognition::kFaceThreshold), sweep));
    report += pipeline::to_text(pipeline::open_set("voices", vdb, pipeline::voice_set(out, "test", false),
                                                   threshold.value_or(recognition::kVoiceThreshold), sweep));
  } else {
    const auto kind =
        classifier == "linear" ? recognition::ClassifierKind::Linear : recognition::ClassifierKind::Centroid;
    const auto faces = pipeline::closed_set(pipeline::face_set(out / "dataset"), pipeline::face_set(out / "test"), kind);
    const auto voices = pipeline::closed_set(pipeline::voice_set(out, "train", true),
                                             pipeline::voice_set(out, "test", true), kind);
    report += pipeline::to_text("faces", faces) + pipeline::to_text("voices", voices);
    io::write_pgm(out / "eval" / "confusion_faces.pgm", faces.heatmap());
    io::write_pgm(out / "eval" / "confusion_voices.pgm", voices.heatmap());
  }
  io::write_file(out / "eval" / "report.txt", report);
  std::cout << report;
  return 0;
}

int cmd_report(const fs::path& out) {
  require(out / "summary.txt", "simulation summary");
  std::cout << slurp(out / "summary.txt");
  for (const char* sub : {"dataset", "test"}) {
    const auto m = DatasetManifest::parse(slurp(out / sub / "manifest.txt"));
    std::cout << "# " << sub << " manifest (" << m.session << ")\n" << m.to_text();
  }
  if (fs::exists(out / "eval" / "report.txt")) std::cout << "# evaluation\n" << slurp(out / "eval" / "report.txt");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-supervised multimodal data collection: simulation and evaluation"};
  app.require_subcommand(1);

  std::string scenario;
  std::string out;
  std::uint64_t seed = 0;
  std::optional<double> threshold;
  bool sweep = false;
  std::string classifier;

  auto* sim = app.add_subcommand("simulate", "run a scripted session and write the collected dataset");
  sim->add_option("--scenario", scenario, "scenario file (key=value lines)")->check(CLI::ExistingFile);
  sim->add_option("--seed", seed, "master seed")->required();
  sim->add_option("--out", out, "output directory")->required();

  auto* feat = app.add_subcommand("features", "extract gammatonegram features from a run directory");
  feat->add_option("--out", out, "run directory")->required();

  auto* enr = app.add_subcommand("enroll", "build face and voice embedding databases");
  enr->add_option("--out", out, "run directory")->required();

  auto* ev = app.add_subcommand("evaluate", "open-set or closed-set evaluation on the test split");
  ev->add_option("--out", out, "run directory")->required();
  ev->add_option("--threshold", threshold, "open-set distance threshold (both modalities)")
      ->check(CLI::PositiveNumber);
  ev->add_flag("--sweep", sweep, "report a 20-point threshold sweep");
  ev->add_option("--classifier", classifier, "closed-set reference classifier")
      ->check(CLI::IsMember({"centroid", "linear"}));

  auto* rep = app.add_subcommand("report", "print the summary of a run directory");
  rep->add_option("--out", out, "run directory")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (sim->parsed()) return cmd_simulate(scenario, seed, out);
    if (feat->parsed()) return cmd_features(out);
    if (enr->parsed()) return cmd_enroll(out);
    if (ev->parsed()) return cmd_evaluate(out, threshold, sweep, classifier);
    if (rep->parsed()) return cmd_report(out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
