#pragma once

// Game supervisor: an event-driven state machine that sequences welcome,
// player positioning, presentations and card rounds, and emits the effects
// (gaze, timers, data collection, memory updates) the agent executes.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "egomem/random.hpp"
#include "egomem/sls.hpp"
#include "egomem/spatial_memory.hpp"
#include "egomem/tracker.hpp"

namespace egomem::game {

enum class Timer : std::uint8_t { Prepare, Presentation, Description, AnswerWait, AnswerListen };

constexpr std::string_view to_string(Timer t) noexcept {
  switch (t) {
    case Timer::Prepare: return "prepare";
    case Timer::Presentation: return "presentation";
    case Timer::Description: return "description";
    case Timer::AnswerWait: return "answer_wait";
    case Timer::AnswerListen: return "answer_listen";
  }
  return "?";
}

// ---------------------------------------------------------------- states

struct Idle {
  friend bool operator==(const Idle&, const Idle&) = default;
};
struct Welcome {
  friend bool operator==(const Welcome&, const Welcome&) = default;
};
struct PlayerPositioning {
  Color color;
  friend bool operator==(const PlayerPositioning&, const PlayerPositioning&) = default;
};
struct PlayersPresentation {
  Color color;
  friend bool operator==(const PlayersPresentation&, const PlayersPresentation&) = default;
};
struct StartGame {
  int round;
  friend bool operator==(const StartGame&, const StartGame&) = default;
};
struct CardDescription {
  Color describer;
  friend bool operator==(const CardDescription&, const CardDescription&) = default;
};
struct AnswerWait {
  friend bool operator==(const AnswerWait&, const AnswerWait&) = default;
};
struct AnswerGiven {
  AzimuthBin answerer;
  friend bool operator==(const AnswerGiven&, const AnswerGiven&) = default;
};
struct Verification {
  Color describer;
  friend bool operator==(const Verification&, const Verification&) = default;
};
struct GameEnd {
  friend bool operator==(const GameEnd&, const GameEnd&) = default;
};

using Phase = std::variant<Idle, Welcome, PlayerPositioning, PlayersPresentation, StartGame,
                           CardDescription, AnswerWait, AnswerGiven, Verification, GameEnd>;

/// Bookkeeping carried across phases.
struct Progress {
  std::size_t positioned = 0;
  std::size_t presented = 0;
  int round = 0;  // 1-based once the game starts
  AzimuthBin gaze = AzimuthBin::Center;
  std::optional<AzimuthBin> describer_bin;
  std::size_t descriptions = 0;

  friend bool operator==(const Progress&, const Progress&) = default;
};

struct GameState {
  Phase phase = Idle{};
  Progress progress;

  friend bool operator==(const GameState&, const GameState&) = default;
};

// ---------------------------------------------------------------- events

struct SoundDetected {
  AzimuthBin bin;
};
struct FacesDetected {
  AzimuthBin bin;
  std::vector<TrackId> tracks;
};
struct PositionStable {
  TrackId track;
  AzimuthBin bin;
};
struct TimerElapsed {
  Timer timer;
};
/// Result of name extraction; nullopt when extraction failed.
struct NamePresented {
  AzimuthBin bin;
  std::optional<std::string> name;
};
struct HotWord {
  bool yes;
};
struct BuzzerCall {
  AzimuthBin bin;
};

using EventKind =
    std::variant<SoundDetected, FacesDetected, PositionStable, TimerElapsed, NamePresented, HotWord, BuzzerCall>;

struct GameEvent {
  double time = 0.0;
  EventKind kind;
  std::int64_t payload = -1;  // index into the perception payload table, if any
};

// --------------------------------------------------------------- effects

struct BindOp {
  AzimuthBin bin;
  TrackId track;
};
struct AssignColorOp {
  TrackId track;
  Color color;
};
struct RelocateOp {
  TrackId track;
  AzimuthBin bin;
};
struct SetNameOp {
  TrackId track;
  std::string name;
};
using MemoryOp = std::variant<BindOp, AssignColorOp, RelocateOp, SetNameOp>;

struct OrientGaze {
  AzimuthBin bin;
};
struct StartTimer {
  Timer timer;
  double seconds;
};
/// Collection requests carry the gaze bin and the memory's unique occupant
/// for it (nullopt when the bin is empty or ambiguous).
struct CollectFace {
  AzimuthBin bin;
  std::optional<TrackId> track;
};
struct CollectVoice {
  AzimuthBin bin;
  std::optional<TrackId> track;
};
struct UpdateMemory {
  MemoryOp op;
};
struct Announce {
  std::string text;
};

using Effect = std::variant<OrientGaze, StartTimer, CollectFace, CollectVoice, UpdateMemory, Announce>;

// ---------------------------------------------------------------- config

struct PlayerPlan {
  Color color;
  AzimuthBin target;  // where the agent sends this player during positioning
};

struct GameConfig {
  double presentation_seconds = 20.0;
  double description_seconds = 30.0;
  int cards_per_player = 3;
  std::uint64_t turn_order_seed = 0;
  double prepare_seconds = 3.0;
  double answer_wait_seconds = 10.0;
  double answer_listen_seconds = 4.0;
  std::vector<PlayerPlan> players{{Color::Blue, AzimuthBin::Left},
                                  {Color::Green, AzimuthBin::Center},
                                  {Color::Red, AzimuthBin::Right}};

  int total_rounds() const { return cards_per_player * static_cast<int>(players.size()); }

  void validate() const {
    if (!(presentation_seconds > 0 && description_seconds > 0 && prepare_seconds > 0 &&
          answer_wait_seconds > 0 && answer_listen_seconds > 0))
      throw ConfigError("game timers must be positive");
    if (cards_per_player < 1) throw ConfigError("cards_per_player must be positive");
    if (players.size() < 2 || players.size() > 3) throw ConfigError("game needs 2 or 3 players");
    for (std::size_t i = 0; i < players.size(); ++i)
      for (std::size_t j = i + 1; j < players.size(); ++j)
        if (players[i].color == players[j].color || players[i].target == players[j].target)
          throw ConfigError("player colors and targets must be distinct");
  }

  const PlayerPlan& plan(Color c) const {
    for (const auto& p : players)
      if (p.color == c) return p;
    throw NotFoundError("no player with color " + std::string(to_string(c)));
  }
};

namespace detail {
inline std::vector<Color> seeded_permutation(const GameConfig& cfg, std::string_view tag) {
  std::vector<Color> colors;
  for (const auto& p : cfg.players) colors.push_back(p.color);
  Rng rng(derive_seed(cfg.turn_order_seed, tag));
  std::shuffle(colors.begin(), colors.end(), rng);
  return colors;
}
}  // namespace detail

/// Order in which players are invited to position themselves (and later
/// present themselves).
inline std::vector<Color> positioning_order(const GameConfig& cfg) {
  return detail::seeded_permutation(cfg, "positioning");
}

/// Describer for each round: a seeded permutation of the players, cycled
/// cards_per_player times.
inline std::vector<Color> turn_order(const GameConfig& cfg) {
  auto perm = detail::seeded_permutation(cfg, "turns");
  std::vector<Color> out;
  for (int k = 0; k < cfg.cards_per_player; ++k) out.insert(out.end(), perm.begin(), perm.end());
  return out;
}

// -------------------------------------------------------------- printing

inline std::string to_string(const Phase& p) {
  return std::visit(
      [](const auto& s) -> std::string {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Idle>) return "Idle";
        else if constexpr (std::is_same_v<S, Welcome>) return "Welcome";
        else if constexpr (std::is_same_v<S, PlayerPositioning>)
          return "PlayerPositioning(" + std::string(egomem::to_string(s.color)) + ")";
        else if constexpr (std::is_same_v<S, PlayersPresentation>)
          return "PlayersPresentation(" + std::string(egomem::to_string(s.color)) + ")";
        else if constexpr (std::is_same_v<S, StartGame>) return "StartGame(" + std::to_string(s.round) + ")";
        else if constexpr (std::is_same_v<S, CardDescription>)
          return "CardDescription(" + std::string(egomem::to_string(s.describer)) + ")";
        else if constexpr (std::is_same_v<S, AnswerWait>) return "AnswerWait";
        else if constexpr (std::is_same_v<S, AnswerGiven>)
          return "AnswerGiven(" + std::string(egomem::to_string(s.answerer)) + ")";
        else if constexpr (std::is_same_v<S, Verification>)
          return "Verification(" + std::string(egomem::to_string(s.describer)) + ")";
        else return "GameEnd";
      },
      p);
}

inline std::string to_string(const EventKind& e) {
  return std::visit(
      [](const auto& ev) -> std::string {
        using E = std::decay_t<decltype(ev)>;
        if constexpr (std::is_same_v<E, SoundDetected>)
          return "SoundDetected(" + std::string(egomem::to_string(ev.bin)) + ")";
        else if constexpr (std::is_same_v<E, FacesDetected>) {
          std::string s = "FacesDetected(" + std::string(egomem::to_string(ev.bin)) + "," +
                          std::to_string(ev.tracks.size()) + ":";
          for (std::size_t i = 0; i < ev.tracks.size(); ++i) s += (i ? "," : "") + std::to_string(ev.tracks[i]);
          return s + ")";
        } else if constexpr (std::is_same_v<E, PositionStable>)
          return "PositionStable(" + std::to_string(ev.track) + "," + std::string(egomem::to_string(ev.bin)) + ")";
        else if constexpr (std::is_same_v<E, TimerElapsed>)
          return "TimerElapsed(" + std::string(to_string(ev.timer)) + ")";
        else if constexpr (std::is_same_v<E, NamePresented>)
          return "NamePresented(" + std::string(egomem::to_string(ev.bin)) + "," + ev.name.value_or("<failed>") + ")";
        else if constexpr (std::is_same_v<E, HotWord>) return ev.yes ? "HotWord(yes)" : "HotWord(no)";
        else return "BuzzerCall(" + std::string(egomem::to_string(ev.bin)) + ")";
      },
      e);
}

inline std::string to_string(const MemoryOp& op) {
  return std::visit(
      [](const auto& o) -> std::string {
        using O = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<O, BindOp>)
          return "Bind(" + std::string(egomem::to_string(o.bin)) + "," + std::to_string(o.track) + ")";
        else if constexpr (std::is_same_v<O, AssignColorOp>)
          return "AssignColor(" + std::to_string(o.track) + "," + std::string(egomem::to_string(o.color)) + ")";
        else if constexpr (std::is_same_v<O, RelocateOp>)
          return "Relocate(" + std::to_string(o.track) + "," + std::string(egomem::to_string(o.bin)) + ")";
        else return "SetName(" + std::to_string(o.track) + "," + o.name + ")";
      },
      op);
}

inline std::string to_string(const Effect& e) {
  auto track_str = [](const std::optional<TrackId>& t) { return t ? std::to_string(*t) : std::string("none"); };
  return std::visit(
      [&](const auto& ef) -> std::string {
        using F = std::decay_t<decltype(ef)>;
        if constexpr (std::is_same_v<F, OrientGaze>)
          return "OrientGaze(" + std::string(egomem::to_string(ef.bin)) + ")";
        else if constexpr (std::is_same_v<F, StartTimer>) {
          char buf[32];
          std::snprintf(buf, sizeof buf, "%g", ef.seconds);
          return "StartTimer(" + std::string(to_string(ef.timer)) + "," + buf + ")";
        } else if constexpr (std::is_same_v<F, CollectFace>)
          return "CollectFace(" + std::string(egomem::to_string(ef.bin)) + "," + track_str(ef.track) + ")";
        else if constexpr (std::is_same_v<F, CollectVoice>)
          return "CollectVoice(" + std::string(egomem::to_string(ef.bin)) + "," + track_str(ef.track) + ")";
        else if constexpr (std::is_same_v<F, UpdateMemory>) return "UpdateMemory(" + to_string(ef.op) + ")";
        else return "Announce(\"" + ef.text + "\")";
      },
      e);
}

// ------------------------------------------------------------ transition

struct Transition {
  GameState next;
  std::vector<Effect> effects;
  bool ignored = false;  // event not legal in the current phase
};

namespace detail {

inline std::string cap(Color c) {
  std::string s(egomem::to_string(c));
  s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

inline std::string where(AzimuthBin b) {
  switch (b) {
    case AzimuthBin::Left: return "on my left";
    case AzimuthBin::Center: return "in front of me";
    case AzimuthBin::Right: return "on my right";
  }
  return "";
}

class Builder {
 public:
  Builder(const GameState& s, const SpatialMemory& m, const GameConfig& c) : t_{s, {}, false}, mem_(m), cfg_(c) {}

  Transition ignore() && {
    t_.ignored = true;
    t_.effects.clear();
    return std::move(t_);
  }
  Transition done() && { return std::move(t_); }

  GameState& state() { return t_.next; }
  void emit(Effect e) { t_.effects.push_back(std::move(e)); }

  void gaze(AzimuthBin b, bool force = false) {
    if (force || t_.next.progress.gaze != b) emit(OrientGaze{b});
    t_.next.progress.gaze = b;
  }

  void collect_at(AzimuthBin b) {
    auto who = mem_.unique_track_at(b);
    emit(CollectVoice{b, who});
    emit(CollectFace{b, who});
  }

  void enter_positioning() {
    const Color c = positioning_order(cfg_)[t_.next.progress.positioned];
    t_.next.phase = PlayerPositioning{c};
    emit(Announce{cap(c) + " player, please come to the table, take your cards and stand " +
                  where(cfg_.plan(c).target) + "."});
  }

  void enter_presentation() {
    const Color c = positioning_order(cfg_)[t_.next.progress.presented];
    t_.next.phase = PlayersPresentation{c};
    gaze(cfg_.plan(c).target, true);
    emit(Announce{cap(c) + " player, what is your name? Please introduce yourself."});
    emit(StartTimer{Timer::Presentation, cfg_.presentation_seconds});
  }

  void enter_round(int round) {
    t_.next.progress.round = round;
    t_.next.progress.describer_bin.reset();
    const Color d = turn_order(cfg_)[static_cast<std::size_t>(round - 1)];
    t_.next.phase = StartGame{round};
    emit(Announce{"Round " + std::to_string(round) + ". " + cap(d) + " player, get ready to describe your card."});
    emit(StartTimer{Timer::Prepare, cfg_.prepare_seconds});
  }

  void next_round() {
    const int r = t_.next.progress.round;
    if (r >= cfg_.total_rounds()) {
      t_.next.phase = GameEnd{};
      emit(Announce{"The game is over. Thank you all for playing with me!"});
    } else {
      enter_round(r + 1);
    }
  }

  Color describer() const { return turn_order(cfg_)[static_cast<std::size_t>(t_.next.progress.round - 1)]; }

  const SpatialMemory& memory() const { return mem_; }
  const GameConfig& config() const { return cfg_; }

 private:
  Transition t_;
  const SpatialMemory& mem_;
  const GameConfig& cfg_;
};

}  // namespace detail

/// Pure transition function. Events that are not legal in the current phase
/// leave the state unchanged and are flagged as ignored.
inline Transition advance(const GameState& state, const GameEvent& event, const SpatialMemory& memory,
                          const GameConfig& config) {
  detail::Builder b(state, memory, config);
  auto& prog = b.state().progress;
  const auto& ev = event.kind;

  return std::visit(
      [&](const auto& phase) -> Transition {
        using P = std::decay_t<decltype(phase)>;

        if constexpr (std::is_same_v<P, Idle>) {
          if (auto* s = std::get_if<SoundDetected>(&ev)) {
            b.state().phase = Welcome{};
            b.gaze(s->bin, true);
            return std::move(b).done();
          }
        } else if constexpr (std::is_same_v<P, Welcome>) {
          if (auto* s = std::get_if<SoundDetected>(&ev)) {
            b.gaze(s->bin);
            return std::move(b).done();
          }
          if (auto* f = std::get_if<FacesDetected>(&ev)) {
            if (f->bin != prog.gaze || f->tracks.size() != config.players.size()) return std::move(b).ignore();
            for (TrackId t : f->tracks)
              if (!memory.slot(t)) b.emit(UpdateMemory{BindOp{f->bin, t}});
            b.emit(Announce{"Welcome! Let's play the history taboo game together."});
            b.enter_positioning();
            return std::move(b).done();
          }
        } else if constexpr (std::is_same_v<P, PlayerPositioning>) {
          if (auto* ps = std::get_if<PositionStable>(&ev)) {
            const auto* slot = memory.slot(ps->track);
            if (ps->bin != config.plan(phase.color).target || (slot && slot->color))
              return std::move(b).ignore();
            if (!slot) b.emit(UpdateMemory{BindOp{ps->bin, ps->track}});
            b.emit(UpdateMemory{AssignColorOp{ps->track, phase.color}});
            b.emit(UpdateMemory{RelocateOp{ps->track, ps->bin}});
            b.gaze(ps->bin);
            if (++prog.positioned < config.players.size()) b.enter_positioning();
            else b.enter_presentation();
            return std::move(b).done();
          }
        } else if constexpr (std::is_same_v<P, PlayersPresentation>) {
          if (auto* s = std::get_if<SoundDetected>(&ev)) {
            b.gaze(s->bin);
            b.collect_at(s->bin);
            return std::move(b).done();
          }
          if (auto* n = std::get_if<NamePresented>(&ev)) {
            // The name belongs to the player the agent addressed.
            const PersonSlot* target = memory.by_color(phase.color);
            if (!target) return std::move(b).ignore();
            std::string name = n->name.value_or(unknown_name(phase.color));
            b.emit(UpdateMemory{SetNameOp{target->track_id, name}});
            b.emit(Announce{"Nice to meet you, " + name + "!"});
            return std::move(b).done();
          }
          if (auto* t = std::get_if<TimerElapsed>(&ev); t && t->timer == Timer::Presentation) {
            if (++prog.presented < config.players.size()) b.enter_presentation();
            else b.enter_round(1);
            return std::move(b).done();
          }
        } else if constexpr (std::is_same_v<P, StartGame>) {
          if (auto* t = std::get_if<TimerElapsed>(&ev); t && t->timer == Timer::Prepare) {
            b.state().phase = CardDescription{b.describer()};
            ++prog.descriptions;
            b.emit(StartTimer{Timer::Description, config.description_seconds});
            b.emit(Announce{"Go!"});
            return std::move(b).done();
          }
        } else if constexpr (std::is_same_v<P, CardDescription>) {
          if (auto* s = std::get_if<SoundDetected>(&ev)) {
            b.gaze(s->bin);
            prog.describer_bin = s->bin;
            b.collect_at(s->bin);
            return std::move(b).done();
          }
          if (auto* t = std::get_if<TimerElapsed>(&ev); t && t->timer == Timer::Description) {
            b.state().phase = AnswerWait{};
            b.emit(Announce{"Time's up. I wonder if anyone has figured out what this is all about?"});
            b.emit(StartTimer{Timer::AnswerWait, config.answer_wait_seconds});
            return std::move(b).done();
          }
        } else if constexpr (std::is_same_v<P, AnswerWait>) {
          if (auto* c = std::get_if<BuzzerCall>(&ev)) {
            b.state().phase = AnswerGiven{c->bin};
            b.gaze(c->bin);
            b.emit(Announce{"Yes? What is your answer?"});
            b.emit(StartTimer{Timer::AnswerListen, config.answer_listen_seconds});
            return std::move(b).done();
          }
          if (auto* t = std::get_if<TimerElapsed>(&ev); t && t->timer == Timer::AnswerWait) {
            b.emit(Announce{"Nobody? Let's move on."});
            b.next_round();
            return std::move(b).done();
          }
        } else if constexpr (std::is_same_v<P, AnswerGiven>) {
          if (auto* t = std::get_if<TimerElapsed>(&ev); t && t->timer == Timer::AnswerListen) {
            const Color d = b.describer();
            b.state().phase = Verification{d};
            AzimuthBin back = prog.describer_bin.value_or(config.plan(d).target);
            b.gaze(back);
            b.emit(Announce{"Is that the right answer?"});
            return std::move(b).done();
          }
          if (auto* h = std::get_if<HotWord>(&ev)) {
            b.emit(Announce{h->yes ? "Well done!" : "Sorry, that's not it."});
            b.next_round();
            return std::move(b).done();
          }
        } else if constexpr (std::is_same_v<P, Verification>) {
          if (auto* h = std::get_if<HotWord>(&ev)) {
            b.emit(Announce{h->yes ? "Well done!" : "Sorry, that's not it."});
            b.next_round();
            return std::move(b).done();
          }
        }
        return std::move(b).ignore();
      },
      state.phase);
}

inline void apply(SpatialMemory& memory, const MemoryOp& op) {
  std::visit(
      [&](const auto& o) {
        using O = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<O, BindOp>) memory.bind(o.bin, PersonSlot{o.track, std::nullopt, std::nullopt});
        else if constexpr (std::is_same_v<O, AssignColorOp>) memory.assign_color(o.track, o.color);
        else if constexpr (std::is_same_v<O, RelocateOp>) memory.relocate(o.track, o.bin);
        else memory.set_name(o.track, o.name);
      },
      op);
}

// ----------------------------------------------------------------- trace

struct TraceEntry {
  GameEvent event;
  GameState state;  // after the event
  std::vector<Effect> effects;
  bool ignored = false;
};

struct GameTrace {
  std::vector<TraceEntry> entries;
  GameState final_state;
  SpatialMemory memory;
  bool complete = false;

  /// One line per event: "<t>\t<state>\t<event>\t<effects>"; ignored events
  /// carry the effect list "ignored".
  std::string to_text() const {
    std::ostringstream os;
    char tbuf[32];
    for (const auto& e : entries) {
      std::snprintf(tbuf, sizeof tbuf, "%.3f", e.event.time);
      os << tbuf << '\t' << to_string(e.state.phase) << '\t' << to_string(e.event.kind) << '\t';
      if (e.ignored) {
        os << "ignored";
      } else {
        for (std::size_t i = 0; i < e.effects.size(); ++i) os << (i ? "; " : "") << to_string(e.effects[i]);
      }
      os << '\n';
    }
    os << "# " << (complete ? "complete" : "incomplete") << ' ' << to_string(final_state.phase) << '\n';
    return os.str();
  }
};

/// Receives every non-ignored effect after memory updates for that event
/// have been applied.
using EffectSink = std::function<void(const GameEvent&, const Effect&, const SpatialMemory&)>;

/// Replays an event stream through advance, applying memory updates; the
/// trace is flagged incomplete if the stream ends before GameEnd.
inline GameTrace run_to_completion(const std::vector<GameEvent>& events, const GameConfig& config,
                                   const EffectSink& sink = {}) {
  config.validate();
  GameTrace trace;
  GameState state;
  for (const auto& ev : events) {
    if (std::holds_alternative<GameEnd>(state.phase)) break;
    Transition tr = advance(state, ev, trace.memory, config);
    for (const auto& eff : tr.effects)
      if (auto* u = std::get_if<UpdateMemory>(&eff)) apply(trace.memory, u->op);
    if (sink)
      for (const auto& eff : tr.effects) sink(ev, eff, trace.memory);
    state = tr.next;
    trace.entries.push_back({ev, state, std::move(tr.effects), tr.ignored});
  }
  trace.final_state = state;
  trace.complete = std::holds_alternative<GameEnd>(state.phase);
  return trace;
}

}  // namespace egomem::game
