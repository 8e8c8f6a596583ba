#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "egomem/recognition.hpp"

using namespace egomem;
using namespace egomem::recognition;

namespace {

// Relative error that stays meaningful for tiny gradient entries.
double rel_err(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

}  // namespace

TEST_CASE("open set: basic verdicts") {
  EmbeddingDb db;
  db.enroll("a", {0, 0});
  db.enroll("b", {3, 4});
  for (double t : {1e-9, 0.4, 1.7, 100.0}) {
    const auto v = classify_open_set(db, {3, 4}, t);
    REQUIRE(std::get<Known>(v).label == "b");
    REQUIRE(distance_of(v) == 0.0);
  }
  const double t = 0.5;
  const auto far = classify_open_set(db, {-1, 0}, t);
  CHECK(std::holds_alternative<Known>(classify_open_set(db, {-0.5, 0}, t)));  // d == t is Known
  CHECK(std::get<Unknown>(far).distance == 1.0);
  CHECK(std::holds_alternative<Unknown>(classify_open_set(db, {0, 2 * t}, t)));

  CHECK_THROWS_AS(classify_open_set(db, {1, 2, 3}, t), DomainError);
  CHECK_THROWS_AS(classify_open_set(db, {0, 0}, 0.0), DomainError);
  CHECK_THROWS_AS(classify_open_set(EmbeddingDb{}, {0, 0}, t), DomainError);
  CHECK_THROWS_AS(db.enroll("c", {1}), DomainError);
  CHECK_THROWS_AS(db.enroll("c", {1, std::nan("")}), DomainError);
}

TEST_CASE("open set: shipped thresholds") {
  CHECK(kFaceThreshold == 0.4);
  CHECK(kVoiceThreshold == 1.7);
}

TEST_CASE("metrics: arithmetic") {
  OpenSetCounts c{3, 1, 0, 0};
  CHECK(positive_accuracy(c) == 0.75);
  CHECK_FALSE(negative_accuracy(c));
  c = {0, 0, 5, 0};
  CHECK(negative_accuracy(c) == 1.0);
  CHECK_FALSE(positive_accuracy(c));

  const std::vector<OpenSetVerdict> v{Known{"a", 0.1}, Known{"b", 0.1}, Unknown{2.0}, Unknown{3.0}, Known{"a", 0.2}};
  const std::vector<QueryTruth> t{"a", "a", "b", std::nullopt, std::nullopt};
  const auto k = count_outcomes(v, t);
  CHECK(k.tp == 1);
  CHECK(k.fn == 2);  // wrong label and rejected
  CHECK(k.tn == 1);
  CHECK(k.fp == 1);
  CHECK(*positive_accuracy(v, t) == Catch::Approx(1.0 / 3.0));
  CHECK(*negative_accuracy(v, t) == 0.5);
  CHECK_THROWS_AS(count_outcomes(v, {t.begin(), t.begin() + 2}), DomainError);
}

TEST_CASE("open set: monotone in the threshold") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> nd;
  EmbeddingDb db;
  for (int i = 0; i < 30; ++i) db.enroll("id" + std::to_string(i % 5), {nd(rng), nd(rng), nd(rng)});
  for (int q = 0; q < 200; ++q) {
    const Embedding x{nd(rng), nd(rng), nd(rng)};
    bool was_known = false;
    for (int k = 1; k <= 40; ++k) {
      const bool known = std::holds_alternative<Known>(classify_open_set(db, x, 0.05 * k));
      REQUIRE((!was_known || known));
      was_known = known;
    }
  }
}

TEST_CASE("open set: invariant under relabeling") {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> nd;
  const std::vector<std::string> names{"a", "b", "c", "d"};
  std::vector<std::string> perm = names;
  std::shuffle(perm.begin(), perm.end(), rng);
  auto relabel = [&](const std::string& l) {
    return perm[static_cast<std::size_t>(std::find(names.begin(), names.end(), l) - names.begin())];
  };
  EmbeddingDb db, db2;
  for (int i = 0; i < 20; ++i) {
    Embedding e{nd(rng), nd(rng)};
    db.enroll(names[i % 4], e);
    db2.enroll(relabel(names[i % 4]), e);
  }
  for (int q = 0; q < 100; ++q) {
    const Embedding x{nd(rng), nd(rng)};
    const auto a = classify_open_set(db, x, 0.3), b = classify_open_set(db2, x, 0.3);
    REQUIRE(a.index() == b.index());
    REQUIRE(distance_of(a) == distance_of(b));
    if (auto* k = std::get_if<Known>(&a)) REQUIRE(relabel(k->label) == std::get<Known>(b).label);
  }
}

TEST_CASE("oracle embedder: perfect open-set accuracy when separated") {
  const double t = 0.4;
  OracleEmbedder emb(32, 3 * t, t / 2, 5);
  EmbeddingDb db;
  std::vector<Embedding> queries;
  std::vector<QueryTruth> truth;
  for (int id = 0; id < 8; ++id)
    for (std::uint64_t k = 0; k < 10; ++k) db.enroll("p" + std::to_string(id), emb({"p" + std::to_string(id), k}));
  for (int id = 0; id < 8; ++id)
    for (std::uint64_t k = 100; k < 110; ++k) {
      queries.push_back(emb({"p" + std::to_string(id), k}));
      truth.push_back("p" + std::to_string(id));
    }
  for (int id = 0; id < 4; ++id)
    for (std::uint64_t k = 0; k < 10; ++k) {
      const auto q = emb({"impostor" + std::to_string(id), k});
      for (int c = 0; c < 8; ++c) REQUIRE(euclidean(q, emb.centroid("p" + std::to_string(c))) >= 2 * t);
      queries.push_back(q);
      truth.push_back(std::nullopt);
    }
  std::vector<OpenSetVerdict> v;
  for (const auto& q : queries) v.push_back(classify_open_set(db, q, t));
  CHECK(positive_accuracy(v, truth) == 1.0);
  CHECK(negative_accuracy(v, truth) == 1.0);

  // Centroids are exactly `separation` apart; samples stay within jitter.
  CHECK(euclidean(emb.centroid("p0"), emb.centroid("p5")) == Catch::Approx(3 * t));
  CHECK(euclidean(emb({"p1", 77}), emb.centroid("p1")) <= t / 2 + 1e-12);
  CHECK(emb({"p1", 77}) == emb({"p1", 77}));
}

TEST_CASE("threshold sweep: known rate is monotone") {
  OracleEmbedder emb(8, 1.0, 0.6, 2);
  EmbeddingDb db;
  for (std::uint64_t k = 0; k < 5; ++k) db.enroll("x", emb({"x", k}));
  std::vector<Embedding> q;
  std::vector<QueryTruth> truth;
  for (std::uint64_t k = 10; k < 40; ++k) {
    q.push_back(emb({k % 2 ? "x" : "y", k}));
    truth.push_back(k % 2 ? QueryTruth{"x"} : std::nullopt);
  }
  std::vector<double> ts;
  for (int k = 1; k <= 20; ++k) ts.push_back(0.1 * k);
  const auto sweep = threshold_sweep(db, q, truth, ts);
  REQUIRE(sweep.size() == 20);
  for (std::size_t i = 1; i < sweep.size(); ++i) REQUIRE(sweep[i].known_rate >= sweep[i - 1].known_rate);
}

TEST_CASE("embedding db: text round trip") {
  EmbeddingDb db;
  db.enroll("Anna", {0.1, -2.5e-7, 3.0});
  db.enroll("unknown-red", {1.0 / 3.0, 0, -1});
  const auto back = EmbeddingDb::from_text(db.to_text());
  REQUIRE(back.size() == 2);
  CHECK(back.dim() == 3);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back.entries()[i].label == db.entries()[i].label);
    CHECK(back.entries()[i].embedding == db.entries()[i].embedding);
  }
  CHECK(back.labels() == std::vector<std::string>{"Anna", "unknown-red"});
  CHECK_THROWS_AS(EmbeddingDb::from_text("dims 3\n"), DomainError);
}

TEST_CASE("energy embedder: silence and determinism") {
  features::Gammatonegram g{4, 6, std::vector<float>(24, 0.f)};
  CHECK(EnergyEmbedder{}(g) == Embedding(4, 0.0));
  for (std::size_t i = 0; i < g.values.size(); ++i) g.values[i] = static_cast<float>(i % 5);
  CHECK(EnergyEmbedder{}(g) == EnergyEmbedder{}(g));
  const auto n = EnergyEmbedder{true, true}(g);
  double s = 0, ss = 0;
  for (double v : n) {
    s += v;
    ss += v * v;
  }
  CHECK(s == Catch::Approx(0.0).margin(1e-12));
  CHECK(ss == Catch::Approx(1.0));
}

TEST_CASE("pixel embedder: identical input, unit norm") {
  GrayImage a(180, 180);
  for (int y = 0; y < 180; ++y)
    for (int x = 0; x < 180; ++x) a.at(x, y) = static_cast<std::uint8_t>((x * 7 + y * 3) % 256);
  const auto e = PixelEmbedder{}(a);
  CHECK(e.size() == 225);
  CHECK(e == PixelEmbedder{}(a));
  double ss = 0;
  for (double v : e) ss += v * v;
  CHECK(ss == Catch::Approx(1.0));
  CHECK(PixelEmbedder{}(GrayImage(180, 180, 9)) == Embedding(225, 0.0));
}

TEST_CASE("confusion matrix: hand-counted 20-sample fixture") {
  // Nearest centroid in one dimension: a at 0, b at 10, c at 20.
  ClosedSetModel m{{"a", "b", "c"}, NearestCentroid{Matrix{{0.0}, {10.0}, {20.0}}}, {}};
  const std::vector<std::pair<double, std::string>> fixture{
      {0, "a"},  {1, "a"},  {2, "a"},  {3, "a"},  {4, "a"},  {6, "a"},  {16, "a"},
      {10, "b"}, {11, "b"}, {9, "b"},  {12, "b"}, {3, "b"},  {14, "b"}, {8, "b"},
      {20, "c"}, {21, "c"}, {19, "c"}, {22, "c"}, {13, "c"}, {18, "c"}};
  std::vector<Embedding> x;
  std::vector<std::string> y;
  for (const auto& [v, l] : fixture) {
    x.push_back({v});
    y.push_back(l);
  }
  const auto cm = eval_closed_set(m, x, y);
  const std::size_t expected[3][3] = {{5, 1, 1}, {1, 6, 0}, {0, 1, 5}};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(cm(i, j) == expected[i][j]);
  CHECK(cm.total() == 20);
  CHECK(cm.trace() == 16);
  CHECK(cm.accuracy() == 0.8);
  CHECK(cm.to_text() == "truth\\pred\ta\tb\tc\na\t5\t1\t1\nb\t1\t6\t0\nc\t0\t1\t5\n");
  const auto h = cm.heatmap(4);
  CHECK(h.width == 12);
  CHECK(h.at(5, 5) == static_cast<std::uint8_t>(std::lround(255.0 * 6 / 7)));
  CHECK_THROWS_AS(eval_closed_set(m, {{1.0}}, {"z"}), ConfigError);
}

TEST_CASE("confusion matrix: chance level") {
  std::vector<std::string> classes;
  for (int i = 0; i < 12; ++i) classes.push_back("c" + std::to_string(i));
  CHECK(ConfusionMatrix(classes).chance_level() == Catch::Approx(1.0 / 12));
  classes.push_back("background");
  CHECK(ConfusionMatrix(classes).chance_level() == Catch::Approx(1.0 / 13));
}

TEST_CASE("linear softmax: gradient matches finite differences") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> nd;
  const Eigen::Index n = 15, d = 4, k = 3;
  Matrix x(n, d), w(k, d);
  Vector b(k);
  std::vector<std::size_t> y;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = nd(rng);
    y.push_back(static_cast<std::size_t>(i % k));
  }
  for (Eigen::Index i = 0; i < k; ++i) {
    b(i) = nd(rng);
    for (Eigen::Index j = 0; j < d; ++j) w(i, j) = nd(rng);
  }
  const double l2 = 0.01, h = 1e-6;
  const auto lg = LinearSoftmax::loss_and_gradient(w, b, x, y, l2);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      Matrix wp = w, wm = w;
      wp(i, j) += h;
      wm(i, j) -= h;
      const double fd = (LinearSoftmax::loss_and_gradient(wp, b, x, y, l2).loss -
                         LinearSoftmax::loss_and_gradient(wm, b, x, y, l2).loss) / (2 * h);
      REQUIRE(rel_err(lg.grad_w(i, j), fd) < 1e-4);
    }
    Vector bp = b, bm = b;
    bp(i) += h;
    bm(i) -= h;
    const double fd = (LinearSoftmax::loss_and_gradient(w, bp, x, y, l2).loss -
                       LinearSoftmax::loss_and_gradient(w, bm, x, y, l2).loss) / (2 * h);
    REQUIRE(rel_err(lg.grad_b(i), fd) < 1e-4);
  }
}

TEST_CASE("closed set: training on separable data") {
  OracleEmbedder emb(6, 4.0, 1.0, 8);
  std::vector<Embedding> x, xt;
  std::vector<std::string> y, yt;
  for (int id = 0; id < 5; ++id)
    for (std::uint64_t k = 0; k < 30; ++k) {
      const std::string l = "c" + std::to_string(id);
      (k < 20 ? x : xt).push_back(emb({l, k}));
      (k < 20 ? y : yt).push_back(l);
    }
  for (auto kind : {ClassifierKind::Centroid, ClassifierKind::Linear}) {
    TrainOptions opt;
    opt.kind = kind;
    const auto m = train_closed_set(x, y, opt);
    CHECK(m.classes == std::vector<std::string>{"c0", "c1", "c2", "c3", "c4"});
    CHECK(eval_closed_set(m, xt, yt).accuracy() == 1.0);
    if (kind == ClassifierKind::Linear) {
      REQUIRE(m.loss_history.size() == static_cast<std::size_t>(opt.epochs) + 1);
      for (std::size_t i = 1; i < m.loss_history.size(); ++i) REQUIRE(m.loss_history[i] <= m.loss_history[i - 1]);
      CHECK(m.loss_history.back() < 0.5 * m.loss_history.front());
    }
  }
}

TEST_CASE("closed set: configuration errors") {
  const std::vector<Embedding> x{{0.0}, {1.0}};
  CHECK_THROWS_AS(train_closed_set(x, {"a", "a"}), ConfigError);
  CHECK_THROWS_AS(train_closed_set(x, {"a", "b"}, {"a", "b", "c"}), ConfigError);
  CHECK_THROWS_AS(train_closed_set(x, {"a", "z"}, {"a", "b"}), ConfigError);
  CHECK_THROWS_AS(train_closed_set(x, {"a"}), ConfigError);
  CHECK_NOTHROW(train_closed_set(x, {"a", "b"}));
}
