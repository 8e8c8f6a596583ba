#pragma once

// Turns the raw sensor stream into game events: sound localization, face
// tracking, and a motion monitor that reports when a walking person has
// settled.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <vector>

#include "egomem/game.hpp"
#include "egomem/sls.hpp"
#include "egomem/tracker.hpp"
#include "egomem/world.hpp"

namespace egomem::perception {

struct MotionParams {
  double still_px = 5.0;       // displacement that counts as movement
  double still_seconds = 1.0;  // time without movement before reporting
};

/// Tracks an anchor position per track. Any displacement beyond still_px
/// moves the anchor and marks the track as walking; a walking track whose
/// anchor has held for still_seconds is reported once as settled.
class MotionMonitor {
 public:
  explicit MotionMonitor(MotionParams p = {}) : p_(p) {}

  struct Settled {
    TrackId track;
    double x, y;
  };

  std::vector<Settled> update(double t, const std::vector<std::pair<TrackId, std::pair<double, double>>>& centers) {
    std::vector<Settled> out;
    for (const auto& [id, c] : centers) {
      auto [it, fresh] = anchors_.try_emplace(id, Anchor{c.first, c.second, t, false});
      auto& a = it->second;
      if (fresh) continue;
      if (std::hypot(c.first - a.x, c.second - a.y) > p_.still_px) {
        a = {c.first, c.second, t, true};
      } else if (a.walking && t - a.since >= p_.still_seconds - 1e-9) {
        a.walking = false;
        out.push_back({id, c.first, c.second});
      }
    }
    return out;
  }

  void forget(TrackId id) { anchors_.erase(id); }

 private:
  struct Anchor {
    double x, y, since;
    bool walking;
  };
  MotionParams p_;
  std::map<TrackId, Anchor> anchors_;
};

struct FaceInView {
  TrackId track;
  std::uint64_t face_id;
  BoundingBox box;
};

/// Attached to every SoundDetected event.
struct SoundPayload {
  std::uint64_t utterance;
  double azimuth_estimate;
  AzimuthBin bin;
  std::vector<FaceInView> faces;  // confirmed tracks matched in the latest frame
};

struct Perceived {
  std::vector<game::GameEvent> events;
  std::vector<SoundPayload> payloads;
  std::size_t tracks_created = 0;
};

/// Tracker settings for the session camera: a track survives one second
/// (10 frames) without detections.
inline TrackerParams session_tracker_params() {
  TrackerParams p;
  p.max_misses = 10;
  return p;
}

inline AzimuthBin bin_of_x(double x) { return bin_azimuth(world::x_to_azimuth(x)); }

/// Runs the perception stack over one session's sensor stream.
inline Perceived perceive(const world::World& w, const AzimuthEstimator& sls, const TrackerParams& tp = session_tracker_params(),
                          const MotionParams& mp = {}) {
  const auto& s = w.stream();
  enum Kind { Frame = 0, Timer = 1, UtteranceEnd = 2, UtteranceStart = 3 };
  struct Item {
    double t;
    int kind;
    std::size_t index;
  };
  std::vector<Item> items;
  for (std::size_t i = 0; i < s.frames.size(); ++i) items.push_back({s.frames[i].time, Frame, i});
  for (std::size_t i = 0; i < s.timers.size(); ++i) items.push_back({s.timers[i].time, Timer, i});
  for (std::size_t i = 0; i < s.utterances.size(); ++i) {
    const auto& u = s.utterances[i];
    items.push_back({static_cast<double>(u.start_sample) / s.sample_rate, UtteranceStart, i});
    items.push_back({static_cast<double>(u.start_sample + u.length) / s.sample_rate, UtteranceEnd, i});
  }
  std::stable_sort(items.begin(), items.end(),
                   [](const Item& a, const Item& b) { return a.t != b.t ? a.t < b.t : a.kind < b.kind; });

  Perceived out;
  Tracker tracker(tp);
  MotionMonitor motion(mp);
  std::vector<FaceInView> in_view;
  std::optional<AzimuthBin> last_sound_bin;
  std::map<std::uint64_t, AzimuthBin> heard_bin;
  TrackId max_id = 0;

  for (const auto& it : items) {
    if (it.kind == Frame) {
      const auto& f = s.frames[it.index];
      std::vector<BoundingBox> boxes;
      for (const auto& d : f.detections) boxes.push_back(d.box);
      auto up = tracker.step(boxes);
      for (TrackId id : up.removed_track_ids) motion.forget(id);
      for (TrackId id : up.new_track_ids) max_id = std::max(max_id, id);
      in_view.clear();
      std::vector<std::pair<TrackId, std::pair<double, double>>> centers;
      for (const auto& [id, di] : up.matched) {
        const Track* t = tracker.find(id);
        if (!t || !t->confirmed(tp)) continue;
        const auto& d = f.detections[di];
        in_view.push_back({id, d.id, d.box});
        centers.push_back({id, {d.box.cx(), d.box.cy()}});
      }
      for (const auto& st : motion.update(f.time, centers))
        out.events.push_back({f.time, game::PositionStable{st.track, bin_of_x(st.x)}});
      continue;
    }
    if (it.kind == Timer) {
      out.events.push_back({it.t, game::TimerElapsed{s.timers[it.index].timer}});
      continue;
    }
    const auto& u = s.utterances[it.index];
    using world::UtteranceKind;
    if (it.kind == UtteranceEnd) {
      if (u.kind == UtteranceKind::Name)
        out.events.push_back({it.t, game::NamePresented{heard_bin.at(u.id), u.transcript}});
      else if (u.kind == UtteranceKind::HotWord)
        out.events.push_back({it.t, game::HotWord{u.transcript.value_or("") == "yes"}});
      continue;
    }
    if (u.kind == UtteranceKind::HotWord) continue;
    const double az = estimate_azimuth(w.audio(u), sls);
    const AzimuthBin bin = bin_azimuth(az);
    heard_bin[u.id] = bin;
    if (u.kind == UtteranceKind::Buzzer) {
      out.events.push_back({it.t, game::BuzzerCall{bin}});
    } else {
      out.payloads.push_back({u.id, az, bin, in_view});
      out.events.push_back({it.t, game::SoundDetected{bin}, static_cast<std::int64_t>(out.payloads.size() - 1)});
    }
    if (last_sound_bin != bin) {
      std::vector<TrackId> here;
      for (const auto& t : tracker.tracks())
        if (t.confirmed(tp) && bin_of_x(t.box().cx()) == bin) here.push_back(t.id);
      std::sort(here.begin(), here.end());
      out.events.push_back({it.t, game::FacesDetected{bin, here}});
    }
    last_sound_bin = bin;
  }
  out.tracks_created = static_cast<std::size_t>(max_id);
  return out;
}

}  // namespace egomem::perception
