#pragma once

// Recognition pipeline over a run directory produced by a simulation:
// voice feature extraction, enrollment, open-set and closed-set
// evaluation. Also a synthetic identity corpus for classifier checks.

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "egomem/collector.hpp"
#include "egomem/features.hpp"
#include "egomem/io.hpp"
#include "egomem/recognition.hpp"
#include "egomem/world.hpp"

namespace egomem::pipeline {

namespace fs = std::filesystem;

inline constexpr const char* kBackgroundLabel = "background";

/// Reference embedders used throughout the pipeline.
inline recognition::PixelEmbedder face_embedder() { return {}; }
inline recognition::EnergyEmbedder voice_embedder() { return {true, true}; }

inline recognition::Embedding embed_face(const FaceEntry& f) {
  return face_embedder()(features::align_face(f.image, f.box));
}

/// 1 s chunks of a clip that pass the VAD rule (all chunks if vad is null).
inline std::vector<features::Gammatonegram> voice_features(const AudioEvent& clip,
                                                           const features::VadParams* vad) {
  std::vector<features::Gammatonegram> out;
  for (const auto& c : features::chunk_audio(clip))
    if (!vad || features::is_voiced(c, *vad)) out.push_back(features::gammatonegram(c));
  return out;
}

// -------------------------------------------------------- feature files

/// Raw little-endian float32, row-major.
inline void write_feature(const fs::path& p, const features::Gammatonegram& g) {
  static_assert(std::endian::native == std::endian::little, "feature files are little-endian");
  std::string bytes(g.values.size() * sizeof(float), '\0');
  std::memcpy(bytes.data(), g.values.data(), bytes.size());
  io::write_file(p, bytes);
}

inline features::Gammatonegram read_feature(const fs::path& p, int rows, int cols) {
  const auto d = io::read_file(p);
  features::Gammatonegram g{rows, cols, std::vector<float>(static_cast<std::size_t>(rows) * cols)};
  if (d.size() != g.values.size() * sizeof(float)) throw IoError("feature file has wrong size", p.string());
  std::memcpy(g.values.data(), d.data(), d.size());
  return g;
}

struct FeatureRow {
  std::string split, label, file;
  int rows = 0, cols = 0;
};

struct FeatureSummary {
  std::size_t chunks_seen = 0;
  std::size_t chunks_kept = 0;
};

/// Reads `<run>/dataset`, `<run>/test` and `<run>/ego_noise.wav`; writes
/// `<run>/features/<split>/<label>/NNNN.f32` and `<run>/features/index.txt`.
/// The VAD floor is measured on the ego-noise recording. Ego-noise chunks
/// form the background class (first half train, second half test).
inline FeatureSummary extract_features(const fs::path& run) {
  const AudioEvent noise = io::read_wav(run / "ego_noise.wav");
  features::VadParams vad;
  vad.noise_floor = features::estimate_noise_floor(noise, vad);
  FeatureSummary sum;
  std::ostringstream index;
  auto emit = [&](const std::string& split, const std::string& label, const std::vector<features::Gammatonegram>& gs,
                  std::size_t& counter) {
    const fs::path dir = run / "features" / split / label;
    fs::create_directories(dir);
    for (const auto& g : gs) {
      const std::string name = detail::numbered(counter++, "f32");
      write_feature(dir / name, g);
      index << split << '\t' << label << '\t' << (fs::path(split) / label / name).string() << '\t' << g.rows << '\t'
            << g.cols << '\n';
    }
  };
  for (const auto& [split, sub] : {std::pair<std::string, std::string>{"train", "dataset"}, {"test", "test"}}) {
    const Dataset ds = read_dataset(run / sub);
    for (const auto& r : ds.records) {
      if (r.label == kQuarantineLabel) continue;
      std::size_t counter = 0;
      for (const auto& clip : r.voices) {
        sum.chunks_seen += features::chunk_count(clip.frames(), clip.sample_rate);
        auto gs = voice_features(clip, &vad);
        sum.chunks_kept += gs.size();
        emit(split, r.label, gs, counter);
      }
    }
  }
  const std::size_t half = noise.frames() / 2;
  for (int part = 0; part < 2; ++part) {
    AudioEvent seg = noise;
    const auto ch = static_cast<std::size_t>(noise.channels);
    seg.samples.assign(noise.samples.begin() + static_cast<std::ptrdiff_t>(part * half * ch),
                       noise.samples.begin() + static_cast<std::ptrdiff_t>((part + 1) * half * ch));
    std::size_t counter = 0;
    emit(part == 0 ? "train" : "test", kBackgroundLabel, voice_features(seg, nullptr), counter);
  }
  io::write_file(run / "features" / "index.txt", index.str());
  return sum;
}

inline std::vector<FeatureRow> read_feature_index(const fs::path& run) {
  const auto raw = io::read_file(run / "features" / "index.txt");
  std::istringstream is(std::string(raw.begin(), raw.end()));
  std::vector<FeatureRow> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    FeatureRow r;
    std::getline(ls, r.split, '\t');
    std::getline(ls, r.label, '\t');
    std::getline(ls, r.file, '\t');
    if (!(ls >> r.rows >> r.cols)) throw IoError("bad feature index line", (run / "features" / "index.txt").string());
    rows.push_back(std::move(r));
  }
  return rows;
}

struct LabeledSet {
  std::vector<recognition::Embedding> x;
  std::vector<std::string> y;
};

/// Voice embeddings of one split; background chunks only if requested.
inline LabeledSet voice_set(const fs::path& run, const std::string& split, bool with_background) {
  LabeledSet s;
  const auto emb = voice_embedder();
  for (const auto& r : read_feature_index(run)) {
    if (r.split != split || (!with_background && r.label == kBackgroundLabel)) continue;
    s.x.push_back(emb(read_feature(run / "features" / r.file, r.rows, r.cols)));
    s.y.push_back(r.label);
  }
  return s;
}

inline LabeledSet face_set(const fs::path& dataset_dir) {
  LabeledSet s;
  for (const auto& r : read_dataset(dataset_dir).records) {
    if (r.label == kQuarantineLabel) continue;
    for (const auto& f : r.faces) {
      s.x.push_back(embed_face(f));
      s.y.push_back(r.label);
    }
  }
  return s;
}

// ------------------------------------------------------------ enrollment

inline recognition::EmbeddingDb to_db(const LabeledSet& s) {
  recognition::EmbeddingDb db;
  for (std::size_t i = 0; i < s.x.size(); ++i) db.enroll(s.y[i], s.x[i]);
  return db;
}

/// Writes `<run>/enroll/faces.db` and `<run>/enroll/voices.db`.
inline std::pair<std::size_t, std::size_t> enroll(const fs::path& run) {
  const auto faces = to_db(face_set(run / "dataset"));
  const auto voices = to_db(voice_set(run, "train", false));
  io::write_file(run / "enroll" / "faces.db", faces.to_text());
  io::write_file(run / "enroll" / "voices.db", voices.to_text());
  return {faces.size(), voices.size()};
}

inline recognition::EmbeddingDb load_db(const fs::path& p) {
  const auto raw = io::read_file(p);
  return recognition::EmbeddingDb::from_text(std::string(raw.begin(), raw.end()));
}

// ------------------------------------------------------------ evaluation

inline std::string fmt_ratio(std::optional<double> r) {
  if (!r) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *r);
  return buf;
}

struct OpenSetResult {
  std::string modality;
  double threshold;
  recognition::OpenSetCounts counts;
  std::vector<recognition::SweepPoint> sweep;
};

inline std::vector<recognition::QueryTruth> truth_for(const recognition::EmbeddingDb& db,
                                                      const std::vector<std::string>& labels) {
  const auto known = db.labels();
  std::vector<recognition::QueryTruth> t;
  for (const auto& l : labels)
    t.push_back(std::binary_search(known.begin(), known.end(), l) ? recognition::QueryTruth{l} : std::nullopt);
  return t;
}

inline OpenSetResult open_set(const std::string& modality, const recognition::EmbeddingDb& db, const LabeledSet& test,
                              double t, bool sweep) {
  OpenSetResult r{modality, t, {}, {}};
  const auto truth = truth_for(db, test.y);
  std::vector<recognition::OpenSetVerdict> v;
  for (const auto& q : test.x) v.push_back(recognition::classify_open_set(db, q, t));
  r.counts = recognition::count_outcomes(v, truth);
  if (sweep) {
    std::vector<double> ts;
    for (int k = 1; k <= 20; ++k) ts.push_back(t * k / 10.0);
    r.sweep = recognition::threshold_sweep(db, test.x, truth, ts);
  }
  return r;
}

inline std::string to_text(const OpenSetResult& r) {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s\tt=%.4g\tpositive=%s\tnegative=%s\tTP=%zu\tFN=%zu\tTN=%zu\tFP=%zu\n",
                r.modality.c_str(), r.threshold, fmt_ratio(recognition::positive_accuracy(r.counts)).c_str(),
                fmt_ratio(recognition::negative_accuracy(r.counts)).c_str(), r.counts.tp, r.counts.fn, r.counts.tn,
                r.counts.fp);
  os << buf;
  if (!r.sweep.empty()) {
    os << "# sweep " << r.modality << "\nthreshold\tknown_rate\tpositive\tnegative\n";
    for (const auto& p : r.sweep) {
      std::snprintf(buf, sizeof buf, "%.4g\t%.4f\t%s\t%s\n", p.threshold, p.known_rate, fmt_ratio(p.positive).c_str(),
                    fmt_ratio(p.negative).c_str());
      os << buf;
    }
  }
  return os.str();
}

/// Test samples whose label is one of the model's classes.
inline LabeledSet restrict_to(const LabeledSet& s, const std::vector<std::string>& classes) {
  LabeledSet out;
  for (std::size_t i = 0; i < s.x.size(); ++i)
    if (std::find(classes.begin(), classes.end(), s.y[i]) != classes.end()) {
      out.x.push_back(s.x[i]);
      out.y.push_back(s.y[i]);
    }
  return out;
}

inline recognition::ConfusionMatrix closed_set(const LabeledSet& train, const LabeledSet& test,
                                               recognition::ClassifierKind kind) {
  recognition::TrainOptions opt;
  opt.kind = kind;
  const auto model = recognition::train_closed_set(train.x, train.y, opt);
  const auto t = restrict_to(test, model.classes);
  return recognition::eval_closed_set(model, t.x, t.y);
}

inline std::string to_text(const std::string& modality, const recognition::ConfusionMatrix& cm) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s\taccuracy=%.4f\tchance=%.4f\tclasses=%zu\tsamples=%zu\n", modality.c_str(),
                cm.accuracy(), cm.chance_level(), cm.n_classes(), cm.total());
  return std::string(buf) + cm.to_text();
}

// ------------------------------------------------------ synthetic corpus

struct Corpus {
  LabeledSet face_train, face_test, voice_train, voice_test;
};

/// n identities generated from one seed: faces and voice chunks for
/// training and testing, plus ego-noise background chunks for voices.
inline Corpus synthetic_corpus(int n, std::uint64_t seed, int train_faces = 20, int test_faces = 10,
                               double train_voice_seconds = 4.0, int test_voice_chunks = 6) {
  auto cfg = world::default_scenario(seed);
  Corpus c;
  const auto femb = face_embedder();
  const auto vemb = voice_embedder();
  const auto& names = world::default_names();
  for (int i = 0; i < n; ++i) {
    const std::string label = names[static_cast<std::size_t>(i) % names.size()] + "-" + std::to_string(i);
    const auto spec = world::make_participant(label, Color::Blue, derive_seed(seed, "cf-" + std::to_string(i)),
                                              derive_seed(seed, "cv-" + std::to_string(i)), AzimuthBin::Center,
                                              cfg.sample_rate);
    for (int k = 0; k < train_faces + test_faces; ++k) {
      auto d = world::synth_face(spec, static_cast<std::uint64_t>(k), 0.0, seed);
      auto& set = k < train_faces ? c.face_train : c.face_test;
      set.x.push_back(femb(features::align_face(d->image, d->box)));
      set.y.push_back(label);
    }
    const auto train_clip = world::synth_voice(spec, train_voice_seconds, cfg, 0, 1);
    for (const auto& g : voice_features(train_clip, nullptr)) {
      c.voice_train.x.push_back(vemb(g));
      c.voice_train.y.push_back(label);
    }
    for (int k = 0; k < test_voice_chunks; ++k) {
      const auto clip = world::synth_voice(spec, 1.0, cfg, static_cast<std::int64_t>(100 + 2 * k) * cfg.sample_rate,
                                           static_cast<std::uint64_t>(2 + k));
      c.voice_test.x.push_back(vemb(features::gammatonegram(clip)));
      c.voice_test.y.push_back(label);
    }
  }
  const auto noise = world::ego_noise(train_voice_seconds + test_voice_chunks, cfg, derive_seed(seed, "bg"));
  const auto chunks = features::chunk_audio(noise, {1.0, 1.0});
  for (std::size_t k = 0; k < chunks.size(); ++k) {
    auto& set = static_cast<double>(k) < train_voice_seconds ? c.voice_train : c.voice_test;
    set.x.push_back(vemb(features::gammatonegram(chunks[k])));
    set.y.push_back(kBackgroundLabel);
  }
  return c;
}

}  // namespace egomem::pipeline
