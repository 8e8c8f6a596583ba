#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <random>
#include <set>

#include "egomem/spatial_memory.hpp"

using namespace egomem;

TEST_CASE("memory: bind") {
  SpatialMemory m;
  m.bind(AzimuthBin::Left, {1, Color::Blue, std::nullopt});
  REQUIRE(m.occupants(AzimuthBin::Left).size() == 1);
  CHECK(std::get<PersonSlot>(m.identity_at(AzimuthBin::Left)).track_id == 1);

  SpatialMemory welcome;
  for (TrackId t : {1u, 2u, 3u}) welcome.bind(AzimuthBin::Left, {t, std::nullopt, std::nullopt});
  CHECK(welcome.occupants(AzimuthBin::Left).size() == 3);
  CHECK(std::get<Ambiguous>(welcome.identity_at(AzimuthBin::Left)).occupants == 3);

  CHECK_THROWS_AS(m.bind(AzimuthBin::Right, {1, std::nullopt, std::nullopt}), ConsistencyError);
  CHECK_THROWS_AS(m.bind(AzimuthBin::Right, {2, Color::Blue, std::nullopt}), ConsistencyError);
}

TEST_CASE("memory: relocate") {
  SpatialMemory m;
  m.bind(AzimuthBin::Left, {1, Color::Blue, std::nullopt});
  m.bind(AzimuthBin::Left, {2, Color::Red, std::nullopt});
  m.relocate(1, AzimuthBin::Right);
  CHECK(m.occupants(AzimuthBin::Left).size() == 1);
  CHECK(m.occupants(AzimuthBin::Right).front().track_id == 1);

  const SpatialMemory before = m;
  m.relocate(1, AzimuthBin::Right);
  CHECK(m == before);
  CHECK_THROWS_AS(m.relocate(9, AzimuthBin::Left), NotFoundError);
}

TEST_CASE("memory: positioning yields one slot per bin") {
  SpatialMemory m;
  for (TrackId t : {1u, 2u, 3u}) m.bind(AzimuthBin::Left, {t, std::nullopt, std::nullopt});
  const std::map<TrackId, std::pair<AzimuthBin, Color>> plan{
      {1, {AzimuthBin::Center, Color::Green}}, {2, {AzimuthBin::Left, Color::Blue}}, {3, {AzimuthBin::Right, Color::Red}}};
  for (const auto& [t, p] : plan) {
    m.assign_color(t, p.second);
    m.relocate(t, p.first);
  }
  std::set<TrackId> seen;
  for (auto b : kAllBins) {
    auto occ = m.identity_at(b);
    REQUIRE(std::holds_alternative<PersonSlot>(occ));
    const auto& s = std::get<PersonSlot>(occ);
    CHECK(plan.at(s.track_id).first == b);
    seen.insert(s.track_id);
  }
  CHECK(seen.size() == 3);
}

TEST_CASE("memory: identity_at cases") {
  SpatialMemory m;
  CHECK(std::holds_alternative<EmptyBin>(m.identity_at(AzimuthBin::Center)));
  CHECK_FALSE(m.unique_track_at(AzimuthBin::Center));
  m.bind(AzimuthBin::Center, {4, std::nullopt, std::nullopt});
  CHECK(m.unique_track_at(AzimuthBin::Center) == 4u);
  m.bind(AzimuthBin::Center, {5, std::nullopt, std::nullopt});
  CHECK(std::holds_alternative<Ambiguous>(m.identity_at(AzimuthBin::Center)));
  CHECK_FALSE(m.unique_track_at(AzimuthBin::Center));
}

TEST_CASE("memory: names") {
  SpatialMemory m;
  m.bind(AzimuthBin::Left, {1, Color::Blue, std::nullopt});
  m.set_name(1, "Marco");
  CHECK(m.slot(1)->name == "Marco");
  CHECK(m.slot(1)->color == Color::Blue);
  m.set_name(1, unknown_name(Color::Blue));
  CHECK(m.slot(1)->label() == "unknown-blue");
  CHECK_THROWS_AS(m.set_name(2, "x"), NotFoundError);
}

TEST_CASE("memory: random operation sequences conserve slots") {
  std::mt19937_64 rng(77);
  for (int run = 0; run < 200; ++run) {
    SpatialMemory m;
    std::map<TrackId, AzimuthBin> model;
    TrackId next = 1;
    for (int op = 0; op < 60; ++op) {
      const auto bin = kAllBins[rng() % 3];
      if (model.empty() || rng() % 3 == 0) {
        m.bind(bin, {next, std::nullopt, std::nullopt});
        model[next++] = bin;
      } else if (rng() % 4 == 0) {
        // Duplicate binds must fail without side effects.
        auto it = std::next(model.begin(), static_cast<long>(rng() % model.size()));
        const auto size = m.size();
        REQUIRE_THROWS_AS(m.bind(bin, {it->first, std::nullopt, std::nullopt}), ConsistencyError);
        REQUIRE(m.size() == size);
      } else {
        auto it = std::next(model.begin(), static_cast<long>(rng() % model.size()));
        m.relocate(it->first, bin);
        it->second = bin;
      }
      std::size_t total = 0;
      for (auto b : kAllBins) total += m.occupants(b).size();
      REQUIRE(total == model.size());
      REQUIRE(m.size() == model.size());
      for (const auto& [t, b] : model) REQUIRE(m.bin_of(t) == b);
    }
  }
}

TEST_CASE("memory: snapshot round trip") {
  SpatialMemory m;
  m.bind(AzimuthBin::Left, {1, Color::Blue, std::string("Anna Maria")});
  m.bind(AzimuthBin::Left, {7, std::nullopt, std::nullopt});
  m.bind(AzimuthBin::Right, {3, Color::Red, std::string("unknown-red")});
  const auto text = m.snapshot();
  CHECK(text.find("left 1 blue Anna_Maria\n") != std::string::npos);
  CHECK(SpatialMemory::from_snapshot(text) == m);
  CHECK_THROWS_AS(SpatialMemory::from_snapshot("up 1 blue x\n"), DomainError);
  CHECK_THROWS_AS(SpatialMemory::from_snapshot("left one\n"), DomainError);
}
