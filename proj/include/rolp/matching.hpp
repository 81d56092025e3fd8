#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

namespace rolp {

/// Dense bipartite weight matrix; weight(bin, item) == 0 means "no edge".
class WeightMatrix {
 public:
  WeightMatrix() = default;
  WeightMatrix(std::size_t bins, std::size_t items) : bins_(bins), items_(items), w_(bins * items, 0.0) {}

  std::size_t bins() const noexcept { return bins_; }
  std::size_t items() const noexcept { return items_; }
  double& operator()(std::size_t bin, std::size_t item) { return w_[bin * items_ + item]; }
  double operator()(std::size_t bin, std::size_t item) const { return w_[bin * items_ + item]; }

 private:
  std::size_t bins_ = 0;
  std::size_t items_ = 0;
  std::vector<double> w_;
};

struct Matching {
  /// (bin, item) pairs in increasing order.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  double weight = 0.0;
};

namespace detail {

struct AssignmentResult {
  std::vector<std::size_t> row_to_col;
  std::vector<double> u;
  std::vector<double> v;
};

/// Min-cost perfect assignment on an n x n matrix (Hungarian method with
/// potentials, O(n^3)). Reduced costs cost[i][j] - u[i] - v[j] are >= 0 and
/// vanish on the assignment.
inline AssignmentResult hungarian_min_cost(const std::vector<double>& cost, std::size_t n) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      const double* row = &cost[(i0 - 1) * n];
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = row[j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
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
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  AssignmentResult out;
  out.row_to_col.assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j)
    if (p[j] != 0) out.row_to_col[p[j] - 1] = j - 1;
  out.u.assign(u.begin() + 1, u.end());
  out.v.assign(v.begin() + 1, v.end());
  return out;
}

/// Optimal weight of a max-weight matching restricted to the given bins and
/// items (flags), plus the dual potentials of the padded square problem.
struct RestrictedOptimum {
  double weight = 0.0;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  AssignmentResult assignment;
  std::vector<std::size_t> bin_ids;
  std::vector<std::size_t> item_ids;
};

inline RestrictedOptimum restricted_max_matching(const WeightMatrix& w, const std::vector<char>& bin_on,
                                                 const std::vector<char>& item_on) {
  RestrictedOptimum out;
  for (std::size_t i = 0; i < w.bins(); ++i)
    if (bin_on[i]) out.bin_ids.push_back(i);
  for (std::size_t j = 0; j < w.items(); ++j)
    if (item_on[j]) out.item_ids.push_back(j);
  const std::size_t n = std::max(out.bin_ids.size(), out.item_ids.size());
  if (n == 0) return out;
  std::vector<double> cost(n * n, 0.0);
  for (std::size_t a = 0; a < out.bin_ids.size(); ++a)
    for (std::size_t b = 0; b < out.item_ids.size(); ++b)
      cost[a * n + b] = -std::max(0.0, w(out.bin_ids[a], out.item_ids[b]));
  out.assignment = hungarian_min_cost(cost, n);
  for (std::size_t a = 0; a < out.bin_ids.size(); ++a) {
    const std::size_t b = out.assignment.row_to_col[a];
    if (b >= out.item_ids.size()) continue;
    const double weight = w(out.bin_ids[a], out.item_ids[b]);
    if (weight > 0.0) {
      out.pairs.emplace_back(out.bin_ids[a], out.item_ids[b]);
      out.weight += weight;
    }
  }
  return out;
}

/// Min-cost assignment that grows one row at a time. Columns are `real`
/// columns followed by `spare` zero-cost columns, so that every row can stay
/// unassigned. Each add_row() costs O(rows * columns) and keeps the optimal
/// potentials of all rows added so far.
class IncrementalAssignment {
 public:
  IncrementalAssignment(std::size_t real, std::size_t spare)
      : real_(real), cols_(real + spare), v_(cols_ + 1, 0.0), p_(cols_ + 1, 0), way_(cols_ + 1, 0),
        minv_(cols_ + 1), used_(cols_ + 1) {
    u_.push_back(0.0);
  }

  /// Adds a row with the given costs on the real columns (spare columns cost
  /// 0) and re-optimizes. Returns the row index.
  std::size_t add_row(std::vector<double> real_costs) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    real_costs.resize(real_, 0.0);
    cost_.push_back(std::move(real_costs));
    u_.push_back(0.0);
    const std::size_t i = cost_.size();
    if (i > cols_) throw std::length_error("IncrementalAssignment: more rows than columns");
    p_[0] = i;
    std::size_t j0 = 0;
    std::fill(minv_.begin(), minv_.end(), inf);
    std::fill(used_.begin(), used_.end(), 0);
    do {
      used_[j0] = 1;
      const std::size_t i0 = p_[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= cols_; ++j) {
        if (used_[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u_[i0] - v_[j];
        if (cur < minv_[j]) {
          minv_[j] = cur;
          way_[j] = j0;
        }
        if (minv_[j] < delta) {
          delta = minv_[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= cols_; ++j) {
        if (used_[j]) {
          u_[p_[j]] += delta;
          v_[j] -= delta;
        } else {
          minv_[j] -= delta;
        }
      }
      j0 = j1;
    } while (p_[j0] != 0);
    do {
      const std::size_t j1 = way_[j0];
      p_[j0] = p_[j1];
      j0 = j1;
    } while (j0 != 0);
    return i - 1;
  }

  std::size_t rows() const noexcept { return cost_.size(); }
  double cost(std::size_t row, std::size_t col) const { return col < real_ ? cost_[row][col] : 0.0; }
  double reduced_cost(std::size_t row, std::size_t col) const { return cost(row, col) - u_[row + 1] - v_[col + 1]; }

  /// Column assigned to `row`.
  std::size_t column_of(std::size_t row) const {
    for (std::size_t j = 1; j <= cols_; ++j)
      if (p_[j] == row + 1) return j - 1;
    return cols_;
  }

  /// Row assigned to real column `col`, or rows() if none.
  std::size_t row_of(std::size_t col) const { return p_[col + 1] == 0 ? rows() : p_[col + 1] - 1; }

 private:
  std::size_t real_;
  std::size_t cols_;
  std::vector<std::vector<double>> cost_;
  std::vector<double> u_, v_;
  std::vector<std::size_t> p_, way_;
  std::vector<double> minv_;
  std::vector<char> used_;
};

}  // namespace detail

/// Maximum-weight bipartite matching. Zero-weight edges are never used and
/// among all optimal matchings the lexicographically smallest list of
/// (bin, item) pairs is returned.
inline Matching max_weight_bipartite_matching(const WeightMatrix& w) {
  Matching result;
  const std::size_t nb = w.bins();
  const std::size_t ni = w.items();
  if (nb == 0 || ni == 0) return result;

  std::vector<char> bin_on(nb, 1), item_on(ni, 1);
  const auto full = detail::restricted_max_matching(w, bin_on, item_on);
  if (full.pairs.empty()) return result;
  const double best = full.weight;
  const double tol = 1e-9 * std::max(1.0, best);

  // Every optimal matching uses only edges that are tight under the optimal
  // potentials. If the tight edges already form a matching the optimum is
  // unique.
  const auto& asg = full.assignment;
  auto tight = [&](std::size_t i, std::size_t j) {
    const double weight = w(i, j);
    if (weight <= 0.0) return false;
    const double reduced = -weight - asg.u[i] - asg.v[j];
    return reduced <= tol;
  };
  std::vector<std::size_t> bin_degree(nb, 0), item_degree(ni, 0);
  bool unique = true;
  for (std::size_t i = 0; i < nb && unique; ++i)
    for (std::size_t j = 0; j < ni; ++j)
      if (tight(i, j) && (++bin_degree[i] > 1 || ++item_degree[j] > 1)) {
        unique = false;
        break;
      }
  if (unique) {
    result.pairs = full.pairs;
    std::sort(result.pairs.begin(), result.pairs.end());
    result.weight = best;
    return result;
  }

  // Greedy lexicographic minimum: match every bin, in order, to the smallest
  // item that still admits an optimal completion; leave it unmatched if none.
  double fixed_weight = 0.0;
  for (std::size_t i = 0; i < nb; ++i) {
    bin_on[i] = 0;
    for (std::size_t j = 0; j < ni; ++j) {
      if (!item_on[j] || !tight(i, j)) continue;
      item_on[j] = 0;
      const double rest = detail::restricted_max_matching(w, bin_on, item_on).weight;
      if (fixed_weight + w(i, j) + rest >= best - tol) {
        result.pairs.emplace_back(i, j);
        fixed_weight += w(i, j);
        break;
      }
      item_on[j] = 1;
    }
  }
  result.weight = fixed_weight;
  return result;
}

/// Sparse-input overload: weights keyed by (bin, item).
inline Matching max_weight_bipartite_matching(const std::map<std::pair<std::size_t, std::size_t>, double>& weights) {
  std::size_t nb = 0, ni = 0;
  for (const auto& [edge, weight] : weights) {
    nb = std::max(nb, edge.first + 1);
    ni = std::max(ni, edge.second + 1);
  }
  WeightMatrix w(nb, ni);
  for (const auto& [edge, weight] : weights) w(edge.first, edge.second) = weight;
  return max_weight_bipartite_matching(w);
}

}  // namespace rolp
