#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "egomem/hungarian.hpp"

using namespace egomem;

namespace {

// Exhaustive minimum over all injective maps from the smaller side.
double brute_force_min(const CostMatrix& c) {
  const bool t = c.rows() > c.cols();
  const std::size_t small = t ? c.cols() : c.rows(), big = t ? c.rows() : c.cols();
  std::vector<std::size_t> perm(big);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0;
    for (std::size_t i = 0; i < small; ++i) s += t ? c(perm[i], i) : c(i, perm[i]);
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

bool is_matching(const Assignment& a, const CostMatrix& c) {
  std::vector<char> r(c.rows(), 0), col(c.cols(), 0);
  for (auto [i, j] : a) {
    if (i >= c.rows() || j >= c.cols() || r[i] || col[j]) return false;
    r[i] = col[j] = 1;
  }
  return a.size() == std::min(c.rows(), c.cols());
}

}  // namespace

TEST_CASE("hungarian: small hand examples") {
  CHECK(hungarian_assign(CostMatrix{{7.0}}) == Assignment{{0, 0}});

  const CostMatrix a{{4, 1, 3}, {2, 0, 5}, {3, 2, 2}};
  const auto ra = hungarian_assign(a);
  CHECK(ra == Assignment{{0, 1}, {1, 0}, {2, 2}});
  CHECK(assignment_cost(a, ra) == 5.0);

  const CostMatrix b{{1, 2}, {2, 1}};
  CHECK(hungarian_assign(b) == Assignment{{0, 0}, {1, 1}});
}

TEST_CASE("hungarian: rectangular matrices match brute force") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> dim(1, 6), val(0, 50);
  for (int trial = 0; trial < 200; ++trial) {
    CostMatrix c(static_cast<std::size_t>(dim(rng)), static_cast<std::size_t>(dim(rng)));
    for (std::size_t i = 0; i < c.rows(); ++i)
      for (std::size_t j = 0; j < c.cols(); ++j) c(i, j) = val(rng);
    const auto a = hungarian_assign(c);
    REQUIRE(is_matching(a, c));
    REQUIRE(assignment_cost(c, a) == brute_force_min(c));
  }
}

TEST_CASE("hungarian: real-valued costs are optimal within rounding") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> val(-3.0, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    CostMatrix c(5, 4);
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 4; ++j) c(i, j) = val(rng);
    CHECK(assignment_cost(c, hungarian_assign(c)) == Catch::Approx(brute_force_min(c)).margin(1e-12));
  }
}

TEST_CASE("hungarian: errors and degenerate input") {
  CHECK(hungarian_assign(CostMatrix{}).empty());
  CHECK_THROWS_AS(hungarian_assign(CostMatrix{{1.0, std::nan("")}}), DomainError);
  CHECK_THROWS_AS(hungarian_assign(CostMatrix{{std::numeric_limits<double>::infinity()}}), DomainError);
  CHECK_THROWS_AS((CostMatrix{{1.0, 2.0}, {3.0}}), DomainError);
}
