#include <catch2/catch_amalgamated.hpp>

#include "egomem/game.hpp"

using namespace egomem;
using namespace egomem::game;

namespace {

// A well-behaved session: everyone arrives on the left, moves to the
// assigned bin, presents, then plays every round with a buzzer answer.
std::vector<GameEvent> scripted_stream(const GameConfig& cfg) {
  std::vector<GameEvent> ev;
  double t = 0;
  auto push = [&](EventKind k) { ev.push_back({t += 0.5, std::move(k), -1}); };

  push(SoundDetected{AzimuthBin::Left});
  std::vector<TrackId> tracks;
  for (std::size_t i = 0; i < cfg.players.size(); ++i) tracks.push_back(static_cast<TrackId>(i + 1));
  push(FacesDetected{AzimuthBin::Left, tracks});

  const auto order = positioning_order(cfg);
  for (std::size_t i = 0; i < order.size(); ++i) push(PositionStable{tracks[i], cfg.plan(order[i]).target});
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto bin = cfg.plan(order[i]).target;
    push(SoundDetected{bin});
    push(NamePresented{bin, "P" + std::to_string(i)});
    push(TimerElapsed{Timer::Presentation});
  }
  const auto turns = turn_order(cfg);
  for (Color d : turns) {
    const auto bin = cfg.plan(d).target;
    push(TimerElapsed{Timer::Prepare});
    push(SoundDetected{bin});
    push(SoundDetected{bin});
    push(TimerElapsed{Timer::Description});
    const auto other = cfg.plan(d == turns.front() ? turns[1] : turns.front()).target;
    push(BuzzerCall{other});
    push(TimerElapsed{Timer::AnswerListen});
    push(HotWord{true});
  }
  return ev;
}

std::size_t count_descriptions(const GameTrace& tr) {
  std::size_t n = 0;
  const GameState* prev = nullptr;
  for (const auto& e : tr.entries) {
    const bool now = std::holds_alternative<CardDescription>(e.state.phase);
    const bool before = prev && std::holds_alternative<CardDescription>(prev->phase);
    n += now && !before;
    prev = &e.state;
  }
  return n;
}

template <class E>
bool has_effect(const std::vector<Effect>& effects) {
  for (const auto& e : effects)
    if (std::holds_alternative<E>(e)) return true;
  return false;
}

}  // namespace

TEST_CASE("advance: idle sound starts the welcome") {
  const GameConfig cfg;
  const auto tr = advance({}, {0.0, SoundDetected{AzimuthBin::Left}}, {}, cfg);
  CHECK(std::holds_alternative<Welcome>(tr.next.phase));
  REQUIRE(tr.effects.size() == 1);
  CHECK(std::get<OrientGaze>(tr.effects[0]).bin == AzimuthBin::Left);
}

TEST_CASE("advance: description timeout announces time's up") {
  const GameConfig cfg;
  GameState s{CardDescription{Color::Red}, {}};
  s.progress.round = 1;
  const auto tr = advance(s, {0.0, TimerElapsed{Timer::Description}}, {}, cfg);
  CHECK(std::holds_alternative<AnswerWait>(tr.next.phase));
  bool announced = false;
  for (const auto& e : tr.effects)
    if (auto* a = std::get_if<Announce>(&e)) announced |= a->text.rfind("Time's up", 0) == 0;
  CHECK(announced);
}

TEST_CASE("advance: hot word moves to the next round or ends") {
  const GameConfig cfg;
  GameState s{AnswerGiven{AzimuthBin::Left}, {}};
  s.progress.round = 1;
  auto tr = advance(s, {0.0, HotWord{true}}, {}, cfg);
  CHECK(std::get<StartGame>(tr.next.phase).round == 2);

  s.progress.round = cfg.total_rounds();
  tr = advance(s, {0.0, HotWord{false}}, {}, cfg);
  CHECK(std::holds_alternative<GameEnd>(tr.next.phase));
}

TEST_CASE("advance: illegal events are ignored") {
  const GameConfig cfg;
  const auto tr = advance({}, {0.0, HotWord{true}}, {}, cfg);
  CHECK(tr.ignored);
  CHECK(tr.effects.empty());
  CHECK(tr.next == GameState{});
}

TEST_CASE("advance: no answer times out to the next round") {
  const GameConfig cfg;
  GameState s{AnswerWait{}, {}};
  s.progress.round = 2;
  const auto tr = advance(s, {0.0, TimerElapsed{Timer::AnswerWait}}, {}, cfg);
  CHECK(std::get<StartGame>(tr.next.phase).round == 3);
}

TEST_CASE("turn order: each player describes cards_per_player cards") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    GameConfig cfg;
    cfg.turn_order_seed = seed;
    const auto turns = turn_order(cfg);
    REQUIRE(turns.size() == 9);
    for (Color c : kAllColors) REQUIRE(std::count(turns.begin(), turns.end(), c) == 3);
  }
}

TEST_CASE("run_to_completion: scripted three-player session") {
  GameConfig cfg;
  cfg.turn_order_seed = 42;
  const auto trace = run_to_completion(scripted_stream(cfg), cfg);
  CHECK(trace.complete);
  CHECK(std::holds_alternative<GameEnd>(trace.final_state.phase));
  CHECK(count_descriptions(trace) == 9);
  CHECK(trace.final_state.progress.descriptions == 9);
  for (const auto& e : trace.entries) CHECK_FALSE(e.ignored);

  // Names land on the addressed colors; each bin holds exactly one person.
  const auto order = positioning_order(cfg);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto* s = trace.memory.by_color(order[i]);
    REQUIRE(s);
    CHECK(s->name == "P" + std::to_string(i));
    CHECK(trace.memory.bin_of(s->track_id) == cfg.plan(order[i]).target);
  }
}

TEST_CASE("run_to_completion: two players") {
  GameConfig cfg;
  cfg.players = {{Color::Blue, AzimuthBin::Left}, {Color::Red, AzimuthBin::Right}};
  cfg.turn_order_seed = 3;
  const auto trace = run_to_completion(scripted_stream(cfg), cfg);
  CHECK(trace.complete);
  CHECK(count_descriptions(trace) == 6);
}

TEST_CASE("run_to_completion: empty and truncated streams") {
  const GameConfig cfg;
  auto trace = run_to_completion({}, cfg);
  CHECK_FALSE(trace.complete);
  CHECK(std::holds_alternative<Idle>(trace.final_state.phase));
  CHECK(trace.to_text() == "# incomplete Idle\n");

  auto ev = scripted_stream(cfg);
  ev.resize(ev.size() / 2);
  trace = run_to_completion(ev, cfg);
  CHECK_FALSE(trace.complete);
}

TEST_CASE("run_to_completion: deterministic traces") {
  GameConfig cfg;
  cfg.turn_order_seed = 9;
  const auto ev = scripted_stream(cfg);
  CHECK(run_to_completion(ev, cfg).to_text() == run_to_completion(ev, cfg).to_text());
  GameConfig other = cfg;
  other.turn_order_seed = 10;
  CHECK(run_to_completion(scripted_stream(other), other).complete);
}

TEST_CASE("run_to_completion: collection invariants") {
  GameConfig cfg;
  cfg.turn_order_seed = 5;
  auto ev = scripted_stream(cfg);
  // Spurious events in every phase must not trigger collection in Idle/GameEnd.
  ev.insert(ev.begin(), GameEvent{0.0, HotWord{true}});
  ev.insert(ev.begin(), GameEvent{0.0, BuzzerCall{AzimuthBin::Right}});
  ev.push_back({1e6, SoundDetected{AzimuthBin::Left}});

  std::size_t voice_in_description = 0;
  GameState state;
  SpatialMemory mem;
  for (const auto& e : ev) {
    const auto tr = advance(state, e, mem, cfg);
    for (const auto& eff : tr.effects)
      if (auto* u = std::get_if<UpdateMemory>(&eff)) apply(mem, u->op);
    if (std::holds_alternative<Idle>(state.phase) || std::holds_alternative<GameEnd>(state.phase)) {
      CHECK_FALSE(has_effect<CollectFace>(tr.effects));
      CHECK_FALSE(has_effect<CollectVoice>(tr.effects));
    }
    if (std::holds_alternative<CardDescription>(state.phase)) {
      for (const auto& eff : tr.effects)
        if (auto* cv = std::get_if<CollectVoice>(&eff)) {
          ++voice_in_description;
          const auto occ = mem.identity_at(tr.next.progress.gaze);
          REQUIRE(std::holds_alternative<PersonSlot>(occ));
          CHECK(cv->track == std::get<PersonSlot>(occ).track_id);
          CHECK(cv->bin == tr.next.progress.gaze);
        }
    }
    state = tr.next;
  }
  CHECK(std::holds_alternative<GameEnd>(state.phase));
  CHECK(voice_in_description == 18);
}

TEST_CASE("config validation") {
  GameConfig cfg;
  cfg.description_seconds = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.players.push_back({Color::Blue, AzimuthBin::Left});
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.players[1].target = AzimuthBin::Left;
  CHECK_THROWS_AS(run_to_completion({}, cfg), ConfigError);
}
