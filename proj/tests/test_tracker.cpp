#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Eigenvalues>
#include <random>
#include <set>

#include "egomem/tracker.hpp"

using namespace egomem;

namespace {

void check_covariance(const Track& t) {
  const TrackCov& p = t.covariance;
  REQUIRE((p - p.transpose()).cwiseAbs().maxCoeff() <= 1e-9);
  Eigen::SelfAdjointEigenSolver<TrackCov> es(p);
  REQUIRE(es.eigenvalues().minCoeff() >= -1e-9);
  REQUIRE(t.state(2) > 0);
  REQUIRE(t.state(3) > 0);
}

BoundingBox box_at(double cx, double cy, double w = 32, double h = 57) {
  return {cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2};
}

}  // namespace

TEST_CASE("iou: hand values") {
  const BoundingBox a{0, 0, 2, 2}, b{1, 1, 3, 3};
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, BoundingBox{5, 5, 6, 6}) == 0.0);
  CHECK(iou(a, b) == Catch::Approx(1.0 / 7.0).epsilon(1e-12));
  CHECK(iou(a, BoundingBox{2, 0, 4, 2}) == 0.0);  // touching edge
}

TEST_CASE("bounding box validity") {
  CHECK(BoundingBox{0, 0, 1, 1}.valid());
  CHECK_FALSE(BoundingBox{1, 0, 1, 1}.valid());
  CHECK_FALSE(BoundingBox{-1, 0, 1, 1}.valid());
  CHECK_THROWS_AS(BoundingBox({0, 0, std::nan(""), 1}).validate(), DomainError);
}

TEST_CASE("predict: fixed point and linear motion") {
  TrackerParams zero;
  zero.process_noise = 0.0;
  Track t = make_track(1, box_at(100, 100));
  const auto before = t.state;
  t = predict(t, zero);
  CHECK(t.state.isApprox(before));
  CHECK(t.age == 1);

  t.state(4) = 2.0;
  const double cx = t.state(0);
  t = predict(t, zero);
  CHECK(t.state(0) == Catch::Approx(cx + 2.0));
}

TEST_CASE("predict: covariance trace never decreases with positive process noise") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int k = 0; k < 50; ++k) {
    Track t = make_track(1, box_at(200 + 10 * u(rng), 200 + 10 * u(rng)));
    for (int i = 0; i < 7; ++i) t = correct(predict(t, {}), box_at(200 + u(rng), 200 + u(rng)), {});
    t.state(4) = u(rng);
    t.state(5) = u(rng);
    const double before = t.covariance.trace();
    t = predict(t, {});
    REQUIRE(t.covariance.trace() >= before);
    check_covariance(t);
  }
}

TEST_CASE("step: births, matches and crossed order") {
  Tracker tr;
  const std::vector<BoundingBox> three{box_at(50, 50), box_at(200, 50), box_at(400, 50)};
  auto u = tr.step(three);
  CHECK(u.new_track_ids == std::vector<TrackId>{1, 2, 3});
  CHECK(u.matched.empty());

  Tracker one;
  one.step(std::vector<BoundingBox>{box_at(50, 50)});
  u = one.step(std::vector<BoundingBox>{box_at(50, 50)});
  CHECK(u.matched == std::vector<std::pair<TrackId, std::size_t>>{{1, 0}});
  CHECK(u.new_track_ids.empty());
  CHECK(u.removed_track_ids.empty());

  Tracker two;
  two.step(std::vector<BoundingBox>{box_at(50, 50), box_at(300, 50)});
  u = two.step(std::vector<BoundingBox>{box_at(302, 51), box_at(48, 50)});
  std::set<std::pair<TrackId, std::size_t>> m(u.matched.begin(), u.matched.end());
  CHECK(m == std::set<std::pair<TrackId, std::size_t>>{{1, 1}, {2, 0}});
}

TEST_CASE("step: tracks are removed after max_misses and ids are not reused") {
  TrackerParams p;
  p.max_misses = 2;
  Tracker tr(p);
  tr.step(std::vector<BoundingBox>{box_at(50, 50)});
  std::vector<TrackId> removed;
  for (int i = 0; i < 3; ++i) {
    auto u = tr.step(std::vector<BoundingBox>{});
    removed.insert(removed.end(), u.removed_track_ids.begin(), u.removed_track_ids.end());
  }
  CHECK(removed == std::vector<TrackId>{1});
  auto u = tr.step(std::vector<BoundingBox>{box_at(50, 50)});
  CHECK(u.new_track_ids == std::vector<TrackId>{2});
}

TEST_CASE("constant velocity: prediction within 1 px after min_hits frames") {
  Tracker tr;
  const double vx = 3.0, vy = -1.5;
  for (int f = 0; f < 40; ++f) {
    tr.step(std::vector<BoundingBox>{box_at(100 + vx * f, 300 + vy * f)});
    if (f + 1 >= tr.params().min_hits) {
      Track t = predict(tr.tracks().front(), tr.params());
      const double ex = 100 + vx * (f + 1), ey = 300 + vy * (f + 1);
      REQUIRE(std::abs(t.state(0) - ex) < 1.0);
      REQUIRE(std::abs(t.state(1) - ey) < 1.0);
    }
    for (const auto& t : tr.tracks()) check_covariance(t);
  }
}

TEST_CASE("two faces on non-intersecting paths keep their ids") {
  Tracker tr;
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> j(-1, 1);
  for (int f = 0; f < 300; ++f) {
    const BoundingBox a = box_at(100 + 2.0 * f + j(rng), 100 + j(rng));
    const BoundingBox b = box_at(700 - 2.0 * f + j(rng), 300 + j(rng));
    REQUIRE(iou(a, b) == 0.0);
    auto u = tr.step(std::vector<BoundingBox>{a, b});
    if (f == 0) continue;
    REQUIRE(u.new_track_ids.empty());
    std::set<std::pair<TrackId, std::size_t>> m(u.matched.begin(), u.matched.end());
    REQUIRE(m == std::set<std::pair<TrackId, std::size_t>>{{1, 0}, {2, 1}});
    for (const auto& t : tr.tracks()) check_covariance(t);
  }
}

TEST_CASE("tracker params validation") {
  TrackerParams p;
  p.iou_gate = 1.0;
  CHECK_THROWS_AS(Tracker(p), ConfigError);
  p = {};
  p.max_misses = 0;
  CHECK_THROWS_AS(Tracker(p), ConfigError);
  p = {};
  p.min_hits = 0;
  CHECK_THROWS_AS(Tracker(p), ConfigError);
}
