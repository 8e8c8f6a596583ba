#pragma once

// Minimum-cost bipartite assignment (Hungarian method, shortest augmenting
// path formulation with row/column potentials). O(n^2 m) for n <= m.

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "egomem/errors.hpp"

namespace egomem {

/// Dense row-major cost matrix.
class CostMatrix {
 public:
  CostMatrix() = default;
  CostMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  CostMatrix(std::initializer_list<std::initializer_list<double>> init) {
    rows_ = init.size();
    cols_ = rows_ ? init.begin()->size() : 0;
    for (const auto& row : init) {
      if (row.size() != cols_) throw DomainError("ragged cost matrix");
      data_.insert(data_.end(), row.begin(), row.end());
    }
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

using Assignment = std::vector<std::pair<std::size_t, std::size_t>>;

namespace detail {

// Requires rows <= cols. Returns, for each row, its assigned column.
inline std::vector<std::size_t> hungarian_rows_le_cols(const CostMatrix& a) {
  const std::size_t n = a.rows(), m = a.cols();
  constexpr double inf = std::numeric_limits<double>::infinity();
  // 1-based working arrays; column 0 is the virtual root of each search.
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_to_col(n);
  for (std::size_t j = 1; j <= m; ++j)
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

}  // namespace detail

/// Optimal min(m, n)-cardinality matching. Pairs are (row, col), sorted by
/// row. Non-finite entries are rejected.
inline Assignment hungarian_assign(const CostMatrix& cost) {
  if (cost.rows() == 0 || cost.cols() == 0) return {};
  for (std::size_t r = 0; r < cost.rows(); ++r)
    for (std::size_t c = 0; c < cost.cols(); ++c)
      if (!std::isfinite(cost(r, c))) throw DomainError("cost matrix has non-finite entry");

  Assignment out;
  if (cost.rows() <= cost.cols()) {
    auto r2c = detail::hungarian_rows_le_cols(cost);
    for (std::size_t r = 0; r < r2c.size(); ++r) out.emplace_back(r, r2c[r]);
  } else {
    CostMatrix t(cost.cols(), cost.rows());
    for (std::size_t r = 0; r < cost.rows(); ++r)
      for (std::size_t c = 0; c < cost.cols(); ++c) t(c, r) = cost(r, c);
    auto c2r = detail::hungarian_rows_le_cols(t);
    for (std::size_t c = 0; c < c2r.size(); ++c) out.emplace_back(c2r[c], c);
    std::sort(out.begin(), out.end());
  }
  return out;
}

inline double assignment_cost(const CostMatrix& cost, const Assignment& a) {
  double total = 0.0;
  for (auto [r, c] : a) total += cost(r, c);
  return total;
}

}  // namespace egomem
