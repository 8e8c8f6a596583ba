#pragma once

// End-to-end simulated session: world -> perception -> game -> collector,
// plus label-accuracy scoring against the ground truth and the held-out
// test split used for recognition.

#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "egomem/collector.hpp"
#include "egomem/game.hpp"
#include "egomem/io.hpp"
#include "egomem/perception.hpp"
#include "egomem/sls.hpp"
#include "egomem/world.hpp"

namespace egomem::session {

struct LabelScore {
  std::size_t correct = 0;
  std::size_t total = 0;  // stored + quarantined
  double accuracy() const { return total ? static_cast<double>(correct) / static_cast<double>(total) : 1.0; }
  LabelScore& operator+=(const LabelScore& o) {
    correct += o.correct;
    total += o.total;
    return *this;
  }
};

struct GroupRun {
  std::unique_ptr<world::World> world;
  perception::Perceived perceived;
  game::GameTrace trace;
  Collector collector;
  LabelScore faces, voices;
};

struct SimulationResult {
  world::ScenarioConfig config;
  std::vector<GroupRun> groups;
  BuiltRecords built;
  LabelScore faces, voices;
  bool complete = true;

  std::string session_id() const {
    return "seed-" + std::to_string(config.master_seed) + "-groups-" + std::to_string(config.groups);
  }

  /// Exported label of a participant, if the agent learned one.
  std::optional<std::string> label_of(int group, int participant) const {
    const auto& g = groups[static_cast<std::size_t>(group)];
    const auto& spec = g.world->participants()[static_cast<std::size_t>(participant)];
    const PersonSlot* s = g.trace.memory.by_color(spec.color);
    if (!s) return std::nullopt;
    const auto& m = built.labels[static_cast<std::size_t>(group)];
    if (auto it = m.find(s->track_id); it != m.end()) return it->second;
    return s->label();
  }

  std::string trace_text() const {
    std::string out;
    for (std::size_t g = 0; g < groups.size(); ++g) out += "# group " + std::to_string(g) + '\n' + groups[g].trace.to_text();
    return out;
  }
  std::string memory_text() const {
    std::string out;
    for (std::size_t g = 0; g < groups.size(); ++g)
      out += "# group " + std::to_string(g) + '\n' + groups[g].trace.memory.snapshot();
    return out;
  }
  std::string ground_truth_text() const {
    std::string out;
    for (const auto& g : groups) out += g.world->ground_truth_text();
    return out;
  }

  std::size_t quarantined_faces() const {
    std::size_t n = 0;
    for (const auto& g : groups) n += g.collector.quarantine().faces.size();
    return n;
  }
  std::size_t quarantined_voices() const {
    std::size_t n = 0;
    for (const auto& g : groups) n += g.collector.quarantine().voices.size();
    return n;
  }

  std::string summary() const {
    std::ostringstream os;
    char buf[128];
    os << "session " << session_id() << ": " << (complete ? "complete" : "INCOMPLETE") << '\n';
    os << "label\tfaces\tvoice_s\n";
    for (const auto& r : built.records) {
      std::snprintf(buf, sizeof buf, "%s\t%zu\t%.1f\n", r.label.c_str(), r.faces.size(), r.voice_seconds());
      os << buf;
    }
    std::snprintf(buf, sizeof buf, "quarantined: %zu faces, %zu voice segments\n", quarantined_faces(),
                  quarantined_voices());
    os << buf;
    std::snprintf(buf, sizeof buf, "label accuracy: faces %.4f (%zu/%zu), voices %.4f (%zu/%zu)\n", faces.accuracy(),
                  faces.correct, faces.total, voices.accuracy(), voices.correct, voices.total);
    os << buf;
    return os.str();
  }
};

inline std::unique_ptr<AzimuthEstimator> make_localizer(const world::ScenarioConfig& cfg, int group) {
  if (cfg.cross_correlation_sls) return std::make_unique<CrossCorrelationEstimator>(MicPair{});
  return std::make_unique<NoisyOracleEstimator>(cfg.azimuth_noise_sigma,
                                                derive_seed(cfg.master_seed, "sls-" + std::to_string(group)));
}

/// Scores stored and quarantined samples: a sample is correct when it is
/// stored under the slot whose color matches its true owner.
inline void score(GroupRun& g) {
  const auto& people = g.world->participants();
  const auto& truth = g.world->truth();
  for (const auto& [track, rec] : g.collector.by_track()) {
    const PersonSlot* s = g.trace.memory.slot(track);
    int expected = -1;
    for (std::size_t i = 0; s && s->color && i < people.size(); ++i)
      if (people[i].color == *s->color) expected = static_cast<int>(i);
    for (const auto& f : rec.faces) g.faces.correct += truth.faces.at(f.source).participant == expected;
    for (const auto& v : rec.voices) g.voices.correct += truth.voices.at(v.source).participant == expected;
    g.faces.total += rec.faces.size();
    g.voices.total += rec.voices.size();
  }
  g.faces.total += g.collector.quarantine().faces.size();
  g.voices.total += g.collector.quarantine().voices.size();
}

inline GroupRun run_group(const world::ScenarioConfig& cfg, int group) {
  GroupRun g;
  g.world = std::make_unique<world::World>(world::run_scenario(cfg, group));
  const auto sls = make_localizer(cfg, group);
  g.perceived = perception::perceive(*g.world, *sls);
  const auto& w = *g.world;
  const auto& payloads = g.perceived.payloads;
  auto sink = [&](const game::GameEvent& ev, const game::Effect& eff, const SpatialMemory& memory) {
    if (ev.payload < 0) return;
    const auto& p = payloads[static_cast<std::size_t>(ev.payload)];
    if (auto* cv = std::get_if<game::CollectVoice>(&eff)) {
      const auto& u = w.stream().utterances[p.utterance];
      g.collector.collect_voice({w.audio(u), u.start_sample, u.id}, cv->track, memory);
    } else if (auto* cf = std::get_if<game::CollectFace>(&eff)) {
      for (const auto& f : p.faces) {
        const bool wanted = cf->track ? f.track == *cf->track : perception::bin_of_x(f.box.cx()) == cf->bin;
        if (!wanted) continue;
        auto det = w.face(f.face_id);
        g.collector.collect_face({std::move(det.image), det.box, f.face_id}, cf->track, memory);
      }
    }
  };
  g.trace = game::run_to_completion(g.perceived.events, w.game_config(), sink);
  score(g);
  return g;
}

inline SimulationResult simulate(const world::ScenarioConfig& cfg) {
  cfg.validate();
  SimulationResult r;
  r.config = cfg;
  std::vector<SessionCollection> sc;
  for (int g = 0; g < cfg.groups; ++g) r.groups.push_back(run_group(cfg, g));
  for (auto& g : r.groups) {
    sc.push_back({&g.collector, &g.trace.memory});
    r.faces += g.faces;
    r.voices += g.voices;
    r.complete = r.complete && g.trace.complete;
  }
  r.built = build_records(sc);
  return r;
}

// ----------------------------------------------------------- test split

inline constexpr int kTestFaces = 10;
inline constexpr int kTestVoiceChunks = 6;
inline constexpr int kImpostors = 4;

/// Fresh samples of every participant under the label the agent learned
/// for them (participants it never learned keep their true name), plus
/// impostors labelled "impostor-<k>".
inline std::vector<PersonRecord> make_test_split(const SimulationResult& sim, int impostors = kImpostors) {
  const auto& cfg = sim.config;
  const std::uint64_t seed = derive_seed(cfg.master_seed, "test-split");
  std::vector<std::pair<std::string, world::ParticipantSpec>> who;
  for (int g = 0; g < cfg.groups; ++g)
    for (int i = 0; i < cfg.players; ++i) {
      const auto& spec = sim.groups[static_cast<std::size_t>(g)].world->participants()[static_cast<std::size_t>(i)];
      who.push_back({sim.label_of(g, i).value_or(spec.name), spec});
    }
  for (int k = 1; k <= impostors; ++k) {
    const std::string name = "impostor-" + std::to_string(k);
    who.push_back({name, world::make_participant(name, Color::Green, derive_seed(seed, name + "-face"),
                                                 derive_seed(seed, name + "-voice"), AzimuthBin::Center,
                                                 cfg.sample_rate)});
  }
  std::vector<std::string> labels;
  for (const auto& w : who) labels.push_back(w.first);
  labels = dedup_labels(labels);
  std::vector<PersonRecord> out;
  for (std::size_t i = 0; i < who.size(); ++i) {
    const auto& spec = who[i].second;
    PersonRecord r{labels[i], {}, {}};
    for (int k = 0; k < kTestFaces; ++k) {
      auto d = world::synth_face(spec, 1'000'000 + static_cast<std::uint64_t>(k), 0.0, seed);
      r.faces.push_back({std::move(d->image), d->box});
    }
    for (int k = 0; k < kTestVoiceChunks; ++k)
      r.voices.push_back(world::synth_voice(spec, 1.0, cfg, static_cast<std::int64_t>(10'000 + 2 * k) * cfg.sample_rate,
                                            derive_seed(seed, static_cast<std::uint64_t>(k))));
    out.push_back(std::move(r));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.label < b.label; });
  return out;
}

inline constexpr double kEgoNoiseSeconds = 20.0;

/// Writes dataset/, test/, ego_noise.wav, trace.txt, ground_truth.txt and
/// memory.txt under `out`.
inline void write_outputs(const SimulationResult& sim, const std::filesystem::path& out) {
  write_dataset(sim.built.records, out / "dataset", sim.session_id());
  write_dataset(make_test_split(sim), out / "test", sim.session_id() + "-test");
  io::write_wav(out / "ego_noise.wav",
                world::ego_noise(kEgoNoiseSeconds, sim.config, derive_seed(sim.config.master_seed, "ego-noise")));
  io::write_file(out / "trace.txt", sim.trace_text());
  io::write_file(out / "ground_truth.txt", sim.ground_truth_text());
  io::write_file(out / "memory.txt", sim.memory_text());
}

}  // namespace egomem::session
