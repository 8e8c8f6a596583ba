#pragma once

// Deterministic stand-in for the agent's sensors: scripted participants
// walk around a panoramic camera view, talk, present themselves and play
// the game, producing face detections, audio and a ground-truth log.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "egomem/errors.hpp"
#include "egomem/game.hpp"
#include "egomem/image.hpp"
#include "egomem/random.hpp"
#include "egomem/sls.hpp"
#include "egomem/spatial_memory.hpp"
#include "egomem/tracker.hpp"

namespace egomem::world {

// ------------------------------------------------------------ participants

struct FaceAppearance {
  double base = 150, contrast = 40;
  double grating_freq = 3, grating_angle = 0, grating_phase = 0;
  double eye_sep = 0.38, eye_y = 0.4, mouth_w = 0.3, mouth_y = 0.75;
  double hair_line = 0.15, hair_tone = 50;
  double width = 32, height = 57;  // mean detection box size in pixels
};

struct Partial {
  double frequency;
  double amplitude;
};

struct VoiceSignature {
  std::vector<Partial> partials;
  double am_rate = 4.0;
  double am_depth = 0.3;

  /// Long-run mean power of the (mono) signature.
  double power() const {
    double p = 0.0;
    for (const auto& q : partials) p += 0.5 * q.amplitude * q.amplitude;
    return p * (1.0 + 0.5 * am_depth * am_depth);
  }
};

inline constexpr double kVoiceRms = 0.1;
inline constexpr int kFacePatch = 96;

struct ParticipantSpec {
  std::string name;
  Color color = Color::Blue;
  std::uint64_t face_seed = 0;
  std::uint64_t voice_seed = 0;
  AzimuthBin home_bin = AzimuthBin::Left;
  FaceAppearance face;
  VoiceSignature voice;
};

inline FaceAppearance appearance_from_seed(std::uint64_t seed) {
  Rng rng(derive_seed(seed, "appearance"));
  FaceAppearance a;
  a.base = uniform(rng, 110, 200);
  a.contrast = uniform(rng, 20, 60);
  a.grating_freq = uniform(rng, 2, 6);
  a.grating_angle = uniform(rng, 0, std::numbers::pi);
  a.grating_phase = uniform(rng, 0, 2 * std::numbers::pi);
  a.eye_sep = uniform(rng, 0.3, 0.45);
  a.eye_y = uniform(rng, 0.35, 0.45);
  a.mouth_w = uniform(rng, 0.2, 0.45);
  a.mouth_y = uniform(rng, 0.7, 0.8);
  a.hair_line = uniform(rng, 0.05, 0.25);
  a.hair_tone = uniform(rng, 20, 90);
  a.width = 32 + uniform(rng, -3, 3);
  a.height = 57 + uniform(rng, -4, 4);
  return a;
}

/// Harmonic series on f0 shaped by one formant-like bump, scaled so the
/// signature has RMS kVoiceRms. Partials at or above 0.45 fs are dropped.
inline VoiceSignature signature_from_seed(std::uint64_t seed, int sample_rate, std::optional<double> f0 = {}) {
  Rng rng(derive_seed(seed, "voice"));
  const double fund = uniform(rng, 90, 260);
  const double formant = uniform(rng, 500, 2500);
  VoiceSignature v;
  v.am_rate = uniform(rng, 3, 6);
  const double base = f0.value_or(fund);
  for (int k = 1; k <= 12; ++k) {
    const double f = k * base;
    const double a = uniform(rng, 0.5, 1.0) * std::exp(-std::pow((f - formant) / 600.0, 2)) + 0.3 / k;
    if (f < 0.45 * sample_rate) v.partials.push_back({f, a});
  }
  if (v.partials.empty()) throw ConfigError("voice signature has no partial below Nyquist");
  const double g = kVoiceRms / std::sqrt(v.power());
  for (auto& p : v.partials) p.amplitude *= g;
  return v;
}

inline ParticipantSpec make_participant(std::string name, Color color, std::uint64_t face_seed,
                                        std::uint64_t voice_seed, AzimuthBin home, int sample_rate,
                                        std::optional<double> f0 = {}) {
  return {std::move(name), color, face_seed, voice_seed, home, appearance_from_seed(face_seed),
          signature_from_seed(voice_seed, sample_rate, f0)};
}

// ---------------------------------------------------------------- scenario

inline const std::vector<std::string>& default_names() {
  static const std::vector<std::string> names{"Alice", "Marco", "Giulia", "Omar",  "Sofia",  "Kenji",
                                              "Lena",  "Tomas", "Priya",  "Diego", "Hana",   "Felix",
                                              "Nora",  "Ivan",  "Chiara", "Samir", "Elena",  "Yusuf"};
  return names;
}

struct ScenarioConfig {
  std::uint64_t master_seed = 0;
  double azimuth_noise_sigma = 5.0;
  double detector_miss_rate = 0.1;
  double name_failure_rate = 1.0 / 6.0;
  double ego_noise_snr_db = 9.0;  // +inf disables ego-noise
  double frame_rate = 10.0;
  int sample_rate = 16000;
  int players = 3;  // per group
  int groups = 1;
  double no_answer_rate = 0.0;
  double walk_speed = 40.0;  // px/s in the panoramic frame
  bool cross_correlation_sls = false;  // default: noisy-oracle localizer
  game::GameConfig game;               // timers and card count; players are filled per group
  std::vector<ParticipantSpec> participants;  // groups * players, group-major

  /// Participants of one group.
  std::vector<ParticipantSpec> group(int g) const {
    return {participants.begin() + g * players, participants.begin() + (g + 1) * players};
  }

  game::GameConfig game_config(int g) const {
    game::GameConfig c = game;
    c.turn_order_seed = derive_seed(master_seed, "turns-" + std::to_string(g));
    c.players.clear();
    for (const auto& p : group(g)) c.players.push_back({p.color, p.home_bin});
    return c;
  }

  void validate() const {
    auto rate = [](double r, bool closed) { return r >= 0.0 && (closed ? r <= 1.0 : r < 1.0); };
    if (!rate(detector_miss_rate, false)) throw ConfigError("detector_miss_rate must lie in [0,1)");
    if (!rate(name_failure_rate, true)) throw ConfigError("name_failure_rate must lie in [0,1]");
    if (!rate(no_answer_rate, true)) throw ConfigError("no_answer_rate must lie in [0,1]");
    if (std::isnan(ego_noise_snr_db) || ego_noise_snr_db == -std::numeric_limits<double>::infinity())
      throw ConfigError("ego_noise_snr_db must be finite or +inf");
    if (!(azimuth_noise_sigma >= 0.0) || !std::isfinite(azimuth_noise_sigma))
      throw ConfigError("azimuth_noise_sigma must be a finite non-negative number");
    if (!(frame_rate > 0.0) || !std::isfinite(frame_rate)) throw ConfigError("frame_rate must be positive");
    if (sample_rate < 8000) throw ConfigError("sample_rate must be at least 8000");
    if (players < 2 || players > 3) throw ConfigError("players must be 2 or 3");
    if (!(walk_speed > 0.0) || !std::isfinite(walk_speed)) throw ConfigError("walk_speed must be positive");
    if (groups < 1) throw ConfigError("groups must be positive");
    if (participants.size() != static_cast<std::size_t>(players * groups))
      throw ConfigError("participant count must equal players * groups");
    std::set<std::uint64_t> seeds;
    for (const auto& p : participants) {
      if (p.name.empty()) throw ConfigError("participant name must not be empty");
      if (!seeds.insert(p.face_seed).second || !seeds.insert(p.voice_seed).second)
        throw ConfigError("participant seeds must be distinct");
      for (const auto& q : p.voice.partials)
        if (!(q.frequency > 0 && q.frequency < sample_rate / 2.0))
          throw ConfigError("voice partial above Nyquist for " + p.name);
    }
    for (int g = 0; g < groups; ++g) game_config(g).validate();
  }
};

namespace detail {

inline double parse_double(const std::string& key, const std::string& v) {
  if (v == "inf" || v == "+inf") return std::numeric_limits<double>::infinity();
  double out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) throw ConfigError("bad number for " + key + ": " + v);
  return out;
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) throw ConfigError("bad integer for " + key + ": " + v);
  return out;
}

inline std::string trim(std::string s) {
  auto ws = [](unsigned char c) { return std::isspace(c); };
  while (!s.empty() && ws(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && ws(static_cast<unsigned char>(s[i]))) ++i;
  return s.substr(i);
}

struct ParticipantOverride {
  std::optional<std::string> name;
  std::optional<Color> color;
  std::optional<std::uint64_t> face_seed, voice_seed;
  std::optional<double> f0;
};

}  // namespace detail

/// Parses "key = value" lines ('#' starts a comment). Participants not
/// overridden with participant.<i>.<field> keys get seeded defaults.
inline ScenarioConfig parse_scenario(const std::string& text, std::optional<std::uint64_t> seed_override = {}) {
  ScenarioConfig c;
  std::map<int, detail::ParticipantOverride> over;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = detail::trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    using detail::parse_double;
    if (key == "master_seed") c.master_seed = detail::parse_u64(key, val);
    else if (key == "azimuth_noise_sigma") c.azimuth_noise_sigma = parse_double(key, val);
    else if (key == "detector_miss_rate") c.detector_miss_rate = parse_double(key, val);
    else if (key == "name_failure_rate") c.name_failure_rate = parse_double(key, val);
    else if (key == "ego_noise_snr_db") c.ego_noise_snr_db = parse_double(key, val);
    else if (key == "frame_rate") c.frame_rate = parse_double(key, val);
    else if (key == "sample_rate") c.sample_rate = static_cast<int>(detail::parse_u64(key, val));
    else if (key == "players") c.players = static_cast<int>(detail::parse_u64(key, val));
    else if (key == "groups") c.groups = static_cast<int>(detail::parse_u64(key, val));
    else if (key == "no_answer_rate") c.no_answer_rate = parse_double(key, val);
    else if (key == "walk_speed") c.walk_speed = parse_double(key, val);
    else if (key == "localizer") {
      if (val != "oracle" && val != "gcc") throw ConfigError("localizer must be oracle or gcc");
      c.cross_correlation_sls = val == "gcc";
    } else if (key == "presentation_seconds") c.game.presentation_seconds = parse_double(key, val);
    else if (key == "description_seconds") c.game.description_seconds = parse_double(key, val);
    else if (key == "cards_per_player") c.game.cards_per_player = static_cast<int>(detail::parse_u64(key, val));
    else if (key.rfind("participant.", 0) == 0) {
      auto dot = key.find('.', 12);
      if (dot == std::string::npos) throw ConfigError("bad participant key: " + key);
      const int idx = static_cast<int>(detail::parse_u64(key, key.substr(12, dot - 12)));
      const std::string field = key.substr(dot + 1);
      auto& o = over[idx];
      if (field == "name") o.name = val;
      else if (field == "color") {
        o.color = parse_color(val);
        if (!o.color) throw ConfigError("bad color: " + val);
      } else if (field == "face_seed") o.face_seed = detail::parse_u64(key, val);
      else if (field == "voice_seed") o.voice_seed = detail::parse_u64(key, val);
      else if (field == "f0") o.f0 = parse_double(key, val);
      else throw ConfigError("unknown participant field: " + field);
    } else {
      throw ConfigError("unknown scenario key: " + key);
    }
  }
  if (seed_override) c.master_seed = *seed_override;
  if (c.players < 2 || c.players > 3) throw ConfigError("players must be 2 or 3");
  if (c.groups < 1) throw ConfigError("groups must be positive");
  const int total = c.players * c.groups;
  for (const auto& [idx, o] : over)
    if (idx < 0 || idx >= total) throw ConfigError("participant index out of range: " + std::to_string(idx));

  const game::GameConfig defaults;
  for (int i = 0; i < total; ++i) {
    const auto& o = over[i];
    const auto& names = default_names();
    const Color color = o.color.value_or(kAllColors[static_cast<std::size_t>(i % c.players)]);
    AzimuthBin home = AzimuthBin::Center;
    for (const auto& p : defaults.players)
      if (p.color == color) home = p.target;
    c.participants.push_back(make_participant(
        o.name.value_or(names[static_cast<std::size_t>(i) % names.size()]), color,
        o.face_seed.value_or(derive_seed(c.master_seed, "face-" + std::to_string(i))),
        o.voice_seed.value_or(derive_seed(c.master_seed, "voice-" + std::to_string(i))), home, c.sample_rate, o.f0));
  }
  c.validate();
  return c;
}

/// Default scenario for a seed: three players, one group.
inline ScenarioConfig default_scenario(std::uint64_t seed = 0) { return parse_scenario("", seed); }

// ---------------------------------------------------------------- synthesis

struct FaceDetection {
  GrayImage image;  // kFacePatch square patch around the face
  BoundingBox box;  // face box in patch coordinates
};

/// Procedural face drawn in box-normalized coordinates plus per-pixel noise.
inline FaceDetection render_face(const FaceAppearance& a, double width, double height, std::uint64_t noise_seed) {
  const double w = std::clamp(std::round(width), 8.0, kFacePatch - 4.0);
  const double h = std::clamp(std::round(height), 8.0, kFacePatch - 4.0);
  const double x1 = std::floor((kFacePatch - w) / 2), y1 = std::floor((kFacePatch - h) / 2);
  FaceDetection d{GrayImage(kFacePatch, kFacePatch), {x1, y1, x1 + w, y1 + h}};
  Rng rng(noise_seed);
  const double ca = std::cos(a.grating_angle), sa = std::sin(a.grating_angle);
  for (int y = 0; y < kFacePatch; ++y)
    for (int x = 0; x < kFacePatch; ++x) {
      const double u = (x + 0.5 - x1) / w, v = (y + 0.5 - y1) / h;
      double val = 40.0;
      const double du = u - 0.5, dv = v - 0.5;
      if (du * du + dv * dv <= 0.25) {
        val = a.base + a.contrast * std::sin(2 * std::numbers::pi * a.grating_freq * (u * ca + v * sa) + a.grating_phase);
        if (v < a.hair_line + 0.1) val = a.hair_tone;
        for (double ex : {0.5 - a.eye_sep / 2, 0.5 + a.eye_sep / 2})
          if ((u - ex) * (u - ex) + (v - a.eye_y) * (v - a.eye_y) < 0.08 * 0.08) val = a.base - 80;
        if (std::abs(v - a.mouth_y) < 0.035 && std::abs(u - 0.5) < a.mouth_w / 2) val = a.base - 60;
      }
      val += gaussian(rng, 0.0, 6.0);
      d.image.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(val), 0L, 255L));
    }
  return d;
}

/// Face detection at a frame index with the participant's mean box size
/// jittered by up to one pixel; nullopt with probability miss_rate.
inline std::optional<FaceDetection> synth_face(const ParticipantSpec& spec, std::uint64_t frame, double miss_rate,
                                               std::uint64_t seed) {
  Rng rng(derive_seed(derive_seed(seed, spec.face_seed), frame));
  if (bernoulli(rng, miss_rate)) return std::nullopt;
  const double w = spec.face.width + static_cast<double>(std::uniform_int_distribution<int>(-1, 1)(rng));
  const double h = spec.face.height + static_cast<double>(std::uniform_int_distribution<int>(-1, 1)(rng));
  return render_face(spec.face, w, h, rng());
}

/// Clean stereo signature and independent per-channel ego-noise, both as
/// interleaved doubles in [-1, 1] scale.
struct VoiceComponents {
  std::vector<double> signal;
  std::vector<double> noise;
  int sample_rate = 16000;
};

inline double signature_at(const VoiceSignature& v, double t) {
  double s = 0.0;
  for (const auto& p : v.partials) s += p.amplitude * std::sin(2 * std::numbers::pi * p.frequency * t);
  return s * (1.0 + v.am_depth * std::sin(2 * std::numbers::pi * v.am_rate * t));
}

inline double mean_power(const std::vector<double>& x, std::size_t offset, std::size_t stride) {
  double p = 0.0;
  std::size_t n = 0;
  for (std::size_t i = offset; i < x.size(); i += stride, ++n) p += x[i] * x[i];
  return n ? p / static_cast<double>(n) : 0.0;
}

/// Signature evaluated at absolute time (so consecutive segments join
/// seamlessly), delayed per channel for the given azimuth, with white noise
/// scaled so each channel has exactly snr_db.
inline VoiceComponents synth_voice_components(const VoiceSignature& v, std::int64_t start_sample, std::size_t frames,
                                              int sample_rate, double azimuth_deg, double snr_db,
                                              std::uint64_t noise_seed, const MicPair& mics = {}) {
  VoiceComponents c{std::vector<double>(2 * frames), std::vector<double>(2 * frames, 0.0), sample_rate};
  const double tau = mics.delay_seconds(azimuth_deg);
  for (std::size_t n = 0; n < frames; ++n) {
    const double t = static_cast<double>(start_sample + static_cast<std::int64_t>(n)) / sample_rate;
    c.signal[2 * n] = signature_at(v, t - tau / 2);
    c.signal[2 * n + 1] = signature_at(v, t + tau / 2);
  }
  if (std::isinf(snr_db) || frames == 0) return c;
  Rng rng(noise_seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (auto& x : c.noise) x = nd(rng);
  for (std::size_t ch = 0; ch < 2; ++ch) {
    const double ps = mean_power(c.signal, ch, 2), pn = mean_power(c.noise, ch, 2);
    const double g = pn > 0 ? std::sqrt(ps / std::pow(10.0, snr_db / 10.0) / pn) : 0.0;
    for (std::size_t i = ch; i < c.noise.size(); i += 2) c.noise[i] *= g;
  }
  return c;
}

inline std::int16_t to_pcm(double x) {
  return static_cast<std::int16_t>(std::clamp(std::lround(x * 32768.0), -32768L, 32767L));
}

inline AudioEvent to_audio(const VoiceComponents& c, double azimuth, double timestamp) {
  AudioEvent a;
  a.channels = 2;
  a.sample_rate = c.sample_rate;
  a.true_azimuth = azimuth;
  a.timestamp = timestamp;
  a.samples.resize(c.signal.size());
  for (std::size_t i = 0; i < c.signal.size(); ++i) a.samples[i] = to_pcm(c.signal[i] + c.noise[i]);
  return a;
}

/// A standalone utterance from the participant's home bin centre.
inline AudioEvent synth_voice(const ParticipantSpec& spec, double duration, const ScenarioConfig& cfg,
                              std::int64_t start_sample = 0, std::uint64_t noise_seed = 0) {
  if (!(duration > 0)) throw DomainError("voice duration must be positive");
  const auto frames = static_cast<std::size_t>(std::lround(duration * cfg.sample_rate));
  const double az = bin_center(spec.home_bin);
  return to_audio(synth_voice_components(spec.voice, start_sample, frames, cfg.sample_rate, az, cfg.ego_noise_snr_db,
                                         derive_seed(derive_seed(cfg.master_seed, spec.voice_seed), noise_seed)),
                  az, static_cast<double>(start_sample) / cfg.sample_rate);
}

/// Ego-noise alone, at the level the scenario's SNR implies for a voice of
/// RMS kVoiceRms (silence when ego-noise is disabled).
inline AudioEvent ego_noise(double duration, const ScenarioConfig& cfg, std::uint64_t seed) {
  const auto frames = static_cast<std::size_t>(std::lround(duration * cfg.sample_rate));
  AudioEvent a;
  a.channels = 2;
  a.sample_rate = cfg.sample_rate;
  a.samples.assign(2 * frames, 0);
  if (std::isinf(cfg.ego_noise_snr_db)) return a;
  const double sigma = kVoiceRms / std::pow(10.0, cfg.ego_noise_snr_db / 20.0);
  Rng rng(seed);
  std::normal_distribution<double> nd(0.0, sigma);
  for (auto& s : a.samples) s = to_pcm(nd(rng));
  return a;
}

// ----------------------------------------------------------------- script

/// Panoramic camera: 10 px per degree of azimuth, 1800 x 600 px.
inline constexpr double kPxPerDegree = 10.0;
inline constexpr double kBackRowY = 150, kGroupRowY = 290, kFrontRowY = 430;

inline double azimuth_to_x(double az) { return (az + 90.0) * kPxPerDegree; }
inline double x_to_azimuth(double x) { return std::clamp(x / kPxPerDegree - 90.0, -90.0, 90.0); }

struct Waypoint {
  double t, x, y;
};

class Path {
 public:
  explicit Path(double t, double x, double y) : pts_{{t, x, y}} {}
  void move_to(double x, double y, double speed) {
    const auto& p = pts_.back();
    pts_.push_back({p.t + std::hypot(x - p.x, y - p.y) / speed, x, y});
  }
  void wait(double s) { pts_.push_back({pts_.back().t + s, pts_.back().x, pts_.back().y}); }
  double end_time() const { return pts_.back().t; }
  std::pair<double, double> at(double t) const {
    if (t <= pts_.front().t) return {pts_.front().x, pts_.front().y};
    for (std::size_t i = 1; i < pts_.size(); ++i)
      if (t <= pts_[i].t) {
        const auto &a = pts_[i - 1], &b = pts_[i];
        const double f = b.t > a.t ? (t - a.t) / (b.t - a.t) : 1.0;
        return {a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)};
      }
    return {pts_.back().x, pts_.back().y};
  }

 private:
  std::vector<Waypoint> pts_;
};

struct FrameDetection {
  std::uint64_t id;  // globally unique face sample id
  BoundingBox box;   // camera coordinates
};

struct CameraFrame {
  std::uint64_t index;
  double time;
  std::vector<FrameDetection> detections;
};

enum class UtteranceKind { Arrival, Name, Speech, Buzzer, Answer, HotWord };

inline const char* to_string(UtteranceKind k) {
  switch (k) {
    case UtteranceKind::Arrival: return "arrival";
    case UtteranceKind::Name: return "name";
    case UtteranceKind::Speech: return "speech";
    case UtteranceKind::Buzzer: return "buzzer";
    case UtteranceKind::Answer: return "answer";
    case UtteranceKind::HotWord: return "hotword";
  }
  return "?";
}

/// What the microphones hear; the speaker is only in the ground truth.
struct Utterance {
  std::uint64_t id;
  UtteranceKind kind;
  std::int64_t start_sample;
  std::int64_t length;
  std::optional<std::string> transcript;  // recognized words, if any
};

/// The agent's own timer expiries, scheduled when the script expects the
/// agent to have started them.
struct TimerTick {
  double time;
  game::Timer timer;
};

struct SensorStream {
  int sample_rate = 16000;
  std::vector<CameraFrame> frames;
  std::vector<Utterance> utterances;
  std::vector<TimerTick> timers;
  double end_time = 0.0;
};

struct FaceTruth {
  int participant;  // index within the group
  std::uint64_t frame;
  BoundingBox box;
};
struct VoiceTruth {
  int participant;
  double azimuth;
};

struct GroundTruth {
  std::map<std::uint64_t, FaceTruth> faces;
  std::map<std::uint64_t, VoiceTruth> voices;
};

/// One group's scripted session.
class World {
 public:
  World(const ScenarioConfig& cfg, int group) : cfg_(cfg), group_(group), people_(cfg.group(group)),
        game_(cfg.game_config(group)), seed_(derive_seed(cfg.master_seed, "group-" + std::to_string(group))) {
    cfg.validate();
    build();
  }

  const SensorStream& stream() const noexcept { return stream_; }
  const GroundTruth& truth() const noexcept { return truth_; }
  const std::vector<ParticipantSpec>& participants() const noexcept { return people_; }
  const game::GameConfig& game_config() const noexcept { return game_; }
  const ScenarioConfig& config() const noexcept { return cfg_; }
  int group() const noexcept { return group_; }

  /// Stereo audio of an utterance as captured by the microphones.
  AudioEvent audio(const Utterance& u) const {
    const auto& vt = truth_.voices.at(u.id);
    const auto& spec = people_[static_cast<std::size_t>(vt.participant)];
    return to_audio(synth_voice_components(spec.voice, u.start_sample, static_cast<std::size_t>(u.length),
                                           cfg_.sample_rate, vt.azimuth, cfg_.ego_noise_snr_db,
                                           derive_seed(seed_, "noise-" + std::to_string(u.id))),
                    vt.azimuth, static_cast<double>(u.start_sample) / cfg_.sample_rate);
  }

  /// Face image of a detection, with the box in patch coordinates.
  FaceDetection face(std::uint64_t id) const {
    const auto& ft = truth_.faces.at(id);
    const auto& spec = people_[static_cast<std::size_t>(ft.participant)];
    return render_face(spec.face, ft.box.width(), ft.box.height(), derive_seed(seed_, "face-" + std::to_string(id)));
  }

  std::string ground_truth_text() const {
    std::ostringstream os;
    os << "# group " << group_ << '\n';
    for (std::size_t i = 0; i < people_.size(); ++i)
      os << "participant\t" << i << '\t' << people_[i].name << '\t' << to_string(people_[i].color) << '\n';
    for (const auto& [id, f] : truth_.faces)
      os << "face\t" << id << '\t' << f.participant << '\t' << f.frame << '\t' << f.box.x1 << ' ' << f.box.y1 << ' '
         << f.box.x2 << ' ' << f.box.y2 << '\n';
    for (const auto& u : stream_.utterances) {
      const auto& v = truth_.voices.at(u.id);
      os << "voice\t" << u.id << '\t' << v.participant << '\t' << to_string(u.kind) << '\t' << u.start_sample << '\t'
         << u.length << '\n';
    }
    return os.str();
  }

 private:
  int index_of(Color c) const {
    for (std::size_t i = 0; i < people_.size(); ++i)
      if (people_[i].color == c) return static_cast<int>(i);
    throw NotFoundError("no participant with color " + std::string(to_string(c)));
  }

  void say(int who, UtteranceKind kind, double t, double seconds, double az, std::optional<std::string> words = {}) {
    const auto id = static_cast<std::uint64_t>(stream_.utterances.size());
    stream_.utterances.push_back({id, kind, std::llround(t * cfg_.sample_rate),
                                  std::llround(seconds * cfg_.sample_rate), std::move(words)});
    truth_.voices[id] = {who, az};
  }

  double azimuth_at(int who, double t) const { return x_to_azimuth(paths_[static_cast<std::size_t>(who)].at(t).first); }

  void build() {
    static constexpr double kGroupAzimuth[] = {-82, -70, -48};
    Rng rng(derive_seed(seed_, "script"));
    const int n = static_cast<int>(people_.size());
    for (int i = 0; i < n; ++i) paths_.emplace_back(0.0, azimuth_to_x(kGroupAzimuth[i]), kGroupRowY);

    // Arrival: someone in the group speaks up.
    say(0, UtteranceKind::Arrival, 1.0, 0.5, kGroupAzimuth[0]);

    // Positioning: each player walks to the table, takes the cards, then
    // goes to the assigned spot on the back row.
    double t = 3.0;
    for (Color c : game::positioning_order(game_)) {
      const int who = index_of(c);
      auto& p = paths_[static_cast<std::size_t>(who)];
      const auto [gx, gy] = p.at(0.0);
      p = Path(t, gx, gy);
      const double tx = azimuth_to_x(0.0), corner = 40.0;
      p.move_to(gx, kFrontRowY - corner, cfg_.walk_speed);
      p.move_to(gx + (tx > gx ? corner : -corner), kFrontRowY, cfg_.walk_speed);
      p.move_to(tx, kFrontRowY, cfg_.walk_speed);
      p.wait(0.5);
      p.move_to(azimuth_to_x(bin_center(game_.plan(c).target)), kBackRowY, cfg_.walk_speed);
      t = p.end_time() + 2.5;
    }

    // Presentations in positioning order.
    double pk = t - 1.0;
    const int pres = static_cast<int>(std::floor(game_.presentation_seconds));
    for (Color c : game::positioning_order(game_)) {
      const int who = index_of(c);
      std::optional<std::string> heard = people_[static_cast<std::size_t>(who)].name;
      if (bernoulli(rng, cfg_.name_failure_rate)) heard.reset();
      say(who, UtteranceKind::Name, pk + 0.25, 1.0, azimuth_at(who, pk), heard);
      for (int i = 0; i + 1 < pres; ++i)
        say(who, UtteranceKind::Speech, pk + 1.25 + i, 1.0, azimuth_at(who, pk));
      pk += game_.presentation_seconds;
      stream_.timers.push_back({pk, game::Timer::Presentation});
    }

    // Rounds.
    double r = pk;
    const auto turns = game::turn_order(game_);
    const int desc = static_cast<int>(std::floor(game_.description_seconds));
    for (Color d : turns) {
      const int who = index_of(d);
      stream_.timers.push_back({r + game_.prepare_seconds, game::Timer::Prepare});
      const double start = r + game_.prepare_seconds;
      for (int j = 0; j < desc; ++j) say(who, UtteranceKind::Speech, start + 0.25 + j, 1.0, azimuth_at(who, start));
      const double end = start + game_.description_seconds;
      stream_.timers.push_back({end, game::Timer::Description});
      if (bernoulli(rng, cfg_.no_answer_rate)) {
        r = end + game_.answer_wait_seconds;
        stream_.timers.push_back({r, game::Timer::AnswerWait});
        continue;
      }
      std::vector<int> others;
      for (int i = 0; i < n; ++i)
        if (i != who) others.push_back(i);
      const int ans = others[std::uniform_int_distribution<std::size_t>(0, others.size() - 1)(rng)];
      say(ans, UtteranceKind::Buzzer, end + 2.0, 0.5, azimuth_at(ans, end));
      say(ans, UtteranceKind::Answer, end + 2.5, 1.5, azimuth_at(ans, end));
      stream_.timers.push_back({end + 2.0 + game_.answer_listen_seconds, game::Timer::AnswerListen});
      r = end + 2.0 + game_.answer_listen_seconds + 2.0;
      say(who, UtteranceKind::HotWord, r - 0.5, 0.5, azimuth_at(who, r), bernoulli(rng, 0.5) ? "yes" : "no");
    }
    stream_.end_time = r + 1.0;
    stream_.sample_rate = cfg_.sample_rate;

    // Camera.
    const auto n_frames = static_cast<std::uint64_t>(std::floor(stream_.end_time * cfg_.frame_rate)) + 1;
    for (std::uint64_t k = 0; k < n_frames; ++k) {
      CameraFrame f{k, static_cast<double>(k) / cfg_.frame_rate, {}};
      for (int i = 0; i < n; ++i) {
        const auto& spec = people_[static_cast<std::size_t>(i)];
        Rng fr(derive_seed(derive_seed(seed_, spec.face_seed), k));
        if (bernoulli(fr, cfg_.detector_miss_rate)) continue;
        std::uniform_int_distribution<int> j(-1, 1);
        const auto [x, y] = paths_[static_cast<std::size_t>(i)].at(f.time);
        const double x1 = std::round(x - spec.face.width / 2) + j(fr), y1 = std::round(y - spec.face.height / 2) + j(fr);
        const double x2 = std::round(x + spec.face.width / 2) + j(fr), y2 = std::round(y + spec.face.height / 2) + j(fr);
        const std::uint64_t id = k * 8 + static_cast<std::uint64_t>(i);
        f.detections.push_back({id, {x1, y1, x2, y2}});
        truth_.faces[id] = {i, k, {x1, y1, x2, y2}};
      }
      stream_.frames.push_back(std::move(f));
    }
  }

  ScenarioConfig cfg_;
  int group_;
  std::vector<ParticipantSpec> people_;
  game::GameConfig game_;
  std::uint64_t seed_;
  std::vector<Path> paths_;
  SensorStream stream_;
  GroundTruth truth_;
};

/// Builds the scripted sensor stream and ground-truth log of one group.
inline World run_scenario(const ScenarioConfig& cfg, int group = 0) {
  if (group < 0 || group >= cfg.groups) throw ConfigError("group index out of range");
  return World(cfg, group);
}

}  // namespace egomem::world
