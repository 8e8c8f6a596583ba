#pragma once

// Data collector: stores faces and voice segments under the identity the
// working memory supplies, quarantines what it cannot attribute, and
// writes/reads the on-disk dataset.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "egomem/errors.hpp"
#include "egomem/image.hpp"
#include "egomem/io.hpp"
#include "egomem/sls.hpp"
#include "egomem/spatial_memory.hpp"
#include "egomem/tracker.hpp"

namespace egomem {

inline constexpr const char* kQuarantineLabel = "unassigned";
inline constexpr double kMinVoiceSeconds = 0.1;

struct FaceSample {
  GrayImage image;
  BoundingBox box;
  std::uint64_t source = 0;  // sample id, for scoring against ground truth
};

struct VoiceSample {
  AudioEvent audio;
  std::int64_t start_sample = 0;
  std::uint64_t source = 0;
};

struct TrackRecord {
  std::vector<FaceSample> faces;
  std::vector<VoiceSample> voices;
};

class Collector {
 public:
  /// Stored under the track if it resolves to a remembered person.
  void collect_face(FaceSample s, std::optional<TrackId> track, const SpatialMemory& memory) {
    s.box.validate();
    ++faces_in_;
    if (track && memory.slot(*track)) tracks_[*track].faces.push_back(std::move(s));
    else quarantine_.faces.push_back(std::move(s));
  }

  /// Stored under the unique occupant of the bin, quarantined otherwise.
  void collect_voice(VoiceSample s, AzimuthBin bin, const SpatialMemory& memory) {
    collect_voice(std::move(s), memory.unique_track_at(bin), memory);
  }

  void collect_voice(VoiceSample s, std::optional<TrackId> track, const SpatialMemory& memory) {
    s.audio.validate();
    ++voices_in_;
    if (track && memory.slot(*track)) tracks_[*track].voices.push_back(std::move(s));
    else quarantine_.voices.push_back(std::move(s));
  }

  const std::map<TrackId, TrackRecord>& by_track() const noexcept { return tracks_; }
  const TrackRecord& quarantine() const noexcept { return quarantine_; }

  std::size_t faces_in() const noexcept { return faces_in_; }
  std::size_t voices_in() const noexcept { return voices_in_; }
  std::size_t stored_faces() const {
    std::size_t n = 0;
    for (const auto& [_, r] : tracks_) n += r.faces.size();
    return n;
  }
  std::size_t stored_voices() const {
    std::size_t n = 0;
    for (const auto& [_, r] : tracks_) n += r.voices.size();
    return n;
  }

 private:
  std::map<TrackId, TrackRecord> tracks_;
  TrackRecord quarantine_;
  std::size_t faces_in_ = 0, voices_in_ = 0;
};

// ----------------------------------------------------------------- records

struct FaceEntry {
  GrayImage image;
  BoundingBox box;
  friend bool operator==(const FaceEntry&, const FaceEntry&) = default;
};

inline bool same_audio(const AudioEvent& a, const AudioEvent& b) {
  return a.channels == b.channels && a.sample_rate == b.sample_rate && a.samples == b.samples;
}

struct PersonRecord {
  std::string label;
  std::vector<FaceEntry> faces;
  std::vector<AudioEvent> voices;

  double voice_seconds() const {
    double s = 0.0;
    for (const auto& v : voices) s += v.duration();
    return s;
  }

  friend bool operator==(const PersonRecord& a, const PersonRecord& b) {
    if (a.label != b.label || a.faces != b.faces || a.voices.size() != b.voices.size()) return false;
    for (std::size_t i = 0; i < a.voices.size(); ++i)
      if (!same_audio(a.voices[i], b.voices[i])) return false;
    return true;
  }
};

/// Joins voice samples that follow each other without a gap.
inline std::vector<AudioEvent> merge_contiguous(const std::vector<VoiceSample>& in) {
  std::vector<AudioEvent> out;
  std::int64_t end = 0;
  for (const auto& v : in) {
    const auto frames = static_cast<std::int64_t>(v.audio.frames());
    if (!out.empty() && v.start_sample == end && out.back().channels == v.audio.channels &&
        out.back().sample_rate == v.audio.sample_rate) {
      out.back().samples.insert(out.back().samples.end(), v.audio.samples.begin(), v.audio.samples.end());
    } else {
      out.push_back(v.audio);
    }
    end = v.start_sample + frames;
  }
  return out;
}

inline PersonRecord to_record(std::string label, const TrackRecord& r) {
  PersonRecord p{std::move(label), {}, merge_contiguous(r.voices)};
  for (const auto& f : r.faces) p.faces.push_back({f.image, f.box});
  return p;
}

/// Appends "-2", "-3", ... to repeated labels, in order of appearance.
inline std::vector<std::string> dedup_labels(const std::vector<std::string>& labels) {
  std::set<std::string> used(labels.begin(), labels.end());
  std::set<std::string> seen;
  std::vector<std::string> out;
  for (const auto& l : labels) {
    if (seen.insert(l).second) {
      out.push_back(l);
      continue;
    }
    for (int k = 2;; ++k) {
      std::string c = l + "-" + std::to_string(k);
      if (!used.count(c)) {
        used.insert(c);
        seen.insert(c);
        out.push_back(c);
        break;
      }
    }
  }
  return out;
}

struct SessionCollection {
  const Collector* collector;
  const SpatialMemory* memory;
};

struct BuiltRecords {
  std::vector<PersonRecord> records;                 // sorted by label
  std::vector<std::map<TrackId, std::string>> labels;  // per session: exported label of each track
};

/// Labels are resolved now, against the final memory: a person named
/// during the presentation is exported under that name. Quarantined
/// samples of all sessions share one record.
inline BuiltRecords build_records(const std::vector<SessionCollection>& sessions) {
  std::vector<std::string> labels;
  std::vector<std::pair<std::size_t, TrackId>> owner;
  std::vector<const TrackRecord*> src;
  for (std::size_t i = 0; i < sessions.size(); ++i)
    for (const auto& [id, r] : sessions[i].collector->by_track()) {
      const PersonSlot* s = sessions[i].memory->slot(id);
      labels.push_back(s ? s->label() : "track-" + std::to_string(id));
      owner.push_back({i, id});
      src.push_back(&r);
    }
  TrackRecord quarantine;
  for (const auto& s : sessions) {
    const auto& q = s.collector->quarantine();
    quarantine.faces.insert(quarantine.faces.end(), q.faces.begin(), q.faces.end());
    quarantine.voices.insert(quarantine.voices.end(), q.voices.begin(), q.voices.end());
  }
  if (!quarantine.faces.empty() || !quarantine.voices.empty()) {
    labels.push_back(kQuarantineLabel);
    src.push_back(&quarantine);
  }
  labels = dedup_labels(labels);
  BuiltRecords out;
  out.labels.resize(sessions.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out.records.push_back(to_record(labels[i], *src[i]));
    if (i < owner.size()) out.labels[owner[i].first][owner[i].second] = labels[i];
  }
  std::sort(out.records.begin(), out.records.end(), [](const auto& a, const auto& b) { return a.label < b.label; });
  return out;
}

inline std::vector<PersonRecord> build_records(const Collector& c, const SpatialMemory& memory) {
  return build_records({{&c, &memory}}).records;
}

// ---------------------------------------------------------------- on disk

struct ManifestRow {
  std::string label;
  std::size_t n_faces = 0;
  double voice_seconds = 0.0;  // millisecond resolution
  friend bool operator==(const ManifestRow&, const ManifestRow&) = default;
};

struct DatasetManifest {
  std::string session;
  std::vector<ManifestRow> rows;
  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;

  std::string to_text() const {
    std::ostringstream os;
    os << "# session " << session << '\n';
    char buf[64];
    for (const auto& r : rows) {
      std::snprintf(buf, sizeof buf, "%.3f", r.voice_seconds);
      os << r.label << '\t' << r.n_faces << '\t' << buf << '\n';
    }
    return os.str();
  }

  static DatasetManifest parse(const std::string& text) {
    DatasetManifest m;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      if (line.rfind("# session ", 0) == 0) {
        m.session = line.substr(10);
        continue;
      }
      if (line[0] == '#') continue;
      const auto t1 = line.find('\t'), t2 = line.find('\t', t1 + 1);
      if (t1 == std::string::npos || t2 == std::string::npos) throw ConsistencyError("bad manifest row: " + line);
      ManifestRow r{line.substr(0, t1), std::stoul(line.substr(t1 + 1, t2 - t1 - 1)), std::stod(line.substr(t2 + 1))};
      m.rows.push_back(std::move(r));
    }
    return m;
  }
};

inline double round_ms(double s) { return static_cast<double>(std::llround(s * 1000.0)) / 1000.0; }

inline DatasetManifest manifest_of(const std::vector<PersonRecord>& records, std::string session) {
  DatasetManifest m{std::move(session), {}};
  for (const auto& r : records) m.rows.push_back({r.label, r.faces.size(), round_ms(r.voice_seconds())});
  std::sort(m.rows.begin(), m.rows.end(), [](const auto& a, const auto& b) { return a.label < b.label; });
  return m;
}

namespace detail {
inline void check_label(const std::string& l) {
  if (l.empty() || l == "." || l == ".." || l.find_first_of("/\t\n\r") != std::string::npos)
    throw ConsistencyError("label cannot be used as a directory name: '" + l + "'");
}

inline std::string numbered(std::size_t i, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04zu.%s", i, ext);
  return buf;
}

inline std::string coord(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

inline double parse_coord(const std::string& s) {
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) throw ConsistencyError("bad coordinate: " + s);
  return v;
}
}  // namespace detail

/// Writes `<out>/<label>/faces/NNNN.pgm`, `<out>/<label>/faces.idx`,
/// `<out>/<label>/voices/NNNN.wav` and `<out>/manifest.txt`.
inline DatasetManifest write_dataset(const std::vector<PersonRecord>& records, const std::filesystem::path& out,
                                     const std::string& session) {
  namespace fs = std::filesystem;
  std::set<std::string> labels;
  for (const auto& r : records) {
    detail::check_label(r.label);
    if (!labels.insert(r.label).second) throw ConsistencyError("duplicate label: " + r.label);
    for (const auto& v : r.voices)
      if (v.duration() < kMinVoiceSeconds) throw ConsistencyError("voice segment shorter than 0.1 s in " + r.label);
  }
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create directory", out.string());
  for (const auto& r : records) {
    const fs::path dir = out / r.label;
    fs::create_directories(dir / "faces", ec);
    if (ec) throw IoError("cannot create directory", (dir / "faces").string());
    fs::create_directories(dir / "voices", ec);
    if (ec) throw IoError("cannot create directory", (dir / "voices").string());
    std::string idx;
    for (std::size_t i = 0; i < r.faces.size(); ++i) {
      const auto name = detail::numbered(i, "pgm");
      const auto& b = r.faces[i].box;
      b.validate();
      io::write_pgm(dir / "faces" / name, r.faces[i].image);
      idx += name + ' ' + detail::coord(b.x1) + ' ' + detail::coord(b.y1) + ' ' + detail::coord(b.x2) + ' ' +
             detail::coord(b.y2) + '\n';
    }
    io::write_file(dir / "faces.idx", idx);
    for (std::size_t i = 0; i < r.voices.size(); ++i) io::write_wav(dir / "voices" / detail::numbered(i, "wav"), r.voices[i]);
  }
  auto m = manifest_of(records, session);
  io::write_file(out / "manifest.txt", m.to_text());
  return m;
}

struct Dataset {
  DatasetManifest manifest;
  std::vector<PersonRecord> records;
};

inline Dataset read_dataset(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  const auto raw = io::read_file(dir / "manifest.txt");
  Dataset d{DatasetManifest::parse(std::string(raw.begin(), raw.end())), {}};
  for (const auto& row : d.manifest.rows) {
    detail::check_label(row.label);
    PersonRecord r{row.label, {}, {}};
    const fs::path rd = dir / row.label;
    const auto idx = io::read_file(rd / "faces.idx");
    std::istringstream is(std::string(idx.begin(), idx.end()));
    std::string name, a, b, c, e;
    while (is >> name >> a >> b >> c >> e)
      r.faces.push_back({io::read_pgm(rd / "faces" / name),
                         {detail::parse_coord(a), detail::parse_coord(b), detail::parse_coord(c), detail::parse_coord(e)}});
    std::vector<fs::path> wavs;
    if (fs::exists(rd / "voices"))
      for (const auto& ent : fs::directory_iterator(rd / "voices"))
        if (ent.path().extension() == ".wav") wavs.push_back(ent.path());
    std::sort(wavs.begin(), wavs.end());
    for (const auto& p : wavs) r.voices.push_back(io::read_wav(p));
    if (r.faces.size() != row.n_faces || round_ms(r.voice_seconds()) != row.voice_seconds)
      throw ConsistencyError("manifest does not match contents of " + rd.string());
    d.records.push_back(std::move(r));
  }
  return d;
}

}  // namespace egomem
