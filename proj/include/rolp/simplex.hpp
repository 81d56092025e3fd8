#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "rolp/errors.hpp"
#include "rolp/instance.hpp"

namespace rolp {

/// Primal optimum of a scaled LP P(f, S). values[j][k] is zero for j outside S.
struct FractionalSolution {
  std::vector<std::vector<double>> values;
  double objective = 0.0;

  double value(std::size_t j, std::size_t k) const { return values[j][k]; }
};

/// Dual solution: prices u_i >= 0 for resources and v_j >= 0 for requests in S.
struct DualCertificate {
  std::vector<double> resource_prices;
  std::vector<double> request_prices;
  double dual_objective = 0.0;
};

/// excluded[j][k] == true removes option k of request j from the LP.
using OptionMask = std::vector<std::vector<bool>>;

struct SolverOptions {
  /// 0 selects a budget proportional to the tableau size.
  std::size_t pivot_limit = 0;
  const OptionMask* excluded = nullptr;
};

struct PackingSolution {
  FractionalSolution primal;
  DualCertificate dual;
  std::size_t pivots = 0;
};

namespace detail {

inline bool is_excluded(const OptionMask* mask, std::size_t j, std::size_t k) {
  return mask != nullptr && j < mask->size() && k < (*mask)[j].size() && (*mask)[j][k];
}

inline std::vector<std::size_t> sorted_subset(std::span<const std::size_t> subset, std::size_t n) {
  std::vector<std::size_t> s(subset.begin(), subset.end());
  std::sort(s.begin(), s.end());
  if (std::adjacent_find(s.begin(), s.end()) != s.end())
    throw std::invalid_argument("solve_packing: request subset contains duplicates");
  if (!s.empty() && s.back() >= n) throw std::invalid_argument("solve_packing: request index out of range");
  return s;
}

/// Dense simplex tableau for the standard-form packing LP.
///
/// Rows: m capacity rows, then one row per request in S. Columns: one per
/// (request, option) in (request id, option index) order, then one slack per
/// row; the right-hand side sits in the last column. Every right-hand side
/// is non-negative, so the slack basis is feasible and no phase 1 is needed.
/// Entering and leaving variables follow Bland's rule, which fixes one
/// optimal vertex reproducibly.
class PackingTableau {
 public:
  PackingTableau(const PackingInstance& inst, double f, const std::vector<std::size_t>& subset,
                 const OptionMask* excluded)
      : m_(inst.resource_count()), s_(subset.size()) {
    for (std::size_t p = 0; p < s_; ++p) {
      const std::size_t j = subset[p];
      const auto& options = inst.requests[j].options;
      for (std::size_t k = 0; k < options.size(); ++k)
        if (!is_excluded(excluded, j, k)) columns_.push_back({j, k, p});
    }
    rows_ = m_ + s_;
    structural_ = columns_.size();
    cols_ = structural_ + rows_;
    width_ = cols_ + 1;
    table_.assign(rows_ * width_, 0.0);
    cost_.assign(width_, 0.0);
    basis_.resize(rows_);

    double cmax = 0.0;
    for (std::size_t c = 0; c < structural_; ++c) {
      const Option& opt = inst.requests[columns_[c].request].options[columns_[c].option];
      for (const Entry& e : opt.consumption) at(e.resource, c) = e.amount;
      at(m_ + columns_[c].position, c) = 1.0;
      cost_[c] = opt.profit;
      cmax = std::max(cmax, std::abs(opt.profit));
    }
    for (std::size_t r = 0; r < rows_; ++r) {
      at(r, structural_ + r) = 1.0;
      at(r, cols_) = r < m_ ? f * inst.capacities[r] : 1.0;
      basis_[r] = structural_ + r;
    }
    // Thresholds scale with the profits so that multiplying c by a power of
    // two replays the identical pivot sequence.
    cost_eps_ = 1e-11 * cmax;
    cost_flush_ = 1e-14 * cmax;
  }

  std::size_t solve(std::size_t pivot_limit) {
    if (pivot_limit == 0) pivot_limit = 50 * (rows_ + cols_) + 1000;
    std::size_t pivots = 0;
    for (;;) {
      const std::size_t enter = entering_column();
      if (enter == npos) return pivots;
      if (pivots == pivot_limit) throw SolverError("simplex pivot budget exhausted", pivot_limit, objective());
      const std::size_t leave = leaving_row(enter);
      if (leave == npos) throw SolverError("packing LP reported unbounded", pivot_limit, objective());
      pivot(leave, enter);
      ++pivots;
    }
  }

  double objective() const { return -cost_[cols_]; }

  PackingSolution extract(const PackingInstance& inst, double f, const std::vector<std::size_t>& subset) const {
    PackingSolution out;
    auto& primal = out.primal;
    primal.values.resize(inst.request_count());
    for (std::size_t j : subset) primal.values[j].assign(inst.requests[j].options.size(), 0.0);
    for (std::size_t j = 0; j < inst.request_count(); ++j)
      if (primal.values[j].empty()) primal.values[j].assign(inst.requests[j].options.size(), 0.0);
    for (std::size_t r = 0; r < rows_; ++r) {
      if (basis_[r] >= structural_) continue;
      const Column& col = columns_[basis_[r]];
      primal.values[col.request][col.option] = std::clamp(at(r, cols_), 0.0, 1.0);
    }
    primal.objective = 0.0;
    for (std::size_t j : subset)
      for (std::size_t k = 0; k < primal.values[j].size(); ++k)
        primal.objective += inst.requests[j].options[k].profit * primal.values[j][k];

    auto& dual = out.dual;
    dual.resource_prices.assign(m_, 0.0);
    dual.request_prices.assign(inst.request_count(), 0.0);
    for (std::size_t i = 0; i < m_; ++i) dual.resource_prices[i] = std::max(0.0, -cost_[structural_ + i]);
    for (std::size_t p = 0; p < s_; ++p)
      dual.request_prices[subset[p]] = std::max(0.0, -cost_[structural_ + m_ + p]);
    dual.dual_objective = 0.0;
    for (std::size_t i = 0; i < m_; ++i) dual.dual_objective += f * inst.capacities[i] * dual.resource_prices[i];
    for (std::size_t j : subset) dual.dual_objective += dual.request_prices[j];
    return out;
  }

 private:
  struct Column {
    std::size_t request;
    std::size_t option;
    std::size_t position;
  };

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  static constexpr double kPivotEps = 1e-11;
  static constexpr double kTieEps = 1e-12;
  static constexpr double kFlush = 1e-14;

  double& at(std::size_t r, std::size_t c) { return table_[r * width_ + c]; }
  double at(std::size_t r, std::size_t c) const { return table_[r * width_ + c]; }

  std::size_t entering_column() const {
    for (std::size_t c = 0; c < cols_; ++c)
      if (cost_[c] > cost_eps_) return c;
    return npos;
  }

  std::size_t leaving_row(std::size_t enter) const {
    std::size_t leave = npos;
    double best = 0.0;
    for (std::size_t r = 0; r < rows_; ++r) {
      const double a = at(r, enter);
      if (a <= kPivotEps) continue;
      const double ratio = std::max(0.0, at(r, cols_)) / a;
      if (leave == npos || ratio < best - kTieEps) {
        leave = r;
        best = ratio;
      } else if (ratio <= best + kTieEps && basis_[r] < basis_[leave]) {
        leave = r;
        best = std::min(best, ratio);
      }
    }
    return leave;
  }

  void pivot(std::size_t leave, std::size_t enter) {
    double* prow = &table_[leave * width_];
    const double inv = 1.0 / prow[enter];
    nonzero_.clear();
    for (std::size_t c = 0; c < width_; ++c) {
      if (prow[c] == 0.0) continue;
      prow[c] *= inv;
      if (std::abs(prow[c]) < kFlush) {
        prow[c] = 0.0;
        continue;
      }
      nonzero_.push_back(c);
    }
    prow[enter] = 1.0;

    for (std::size_t r = 0; r < rows_; ++r) {
      if (r == leave) continue;
      double* row = &table_[r * width_];
      const double factor = row[enter];
      if (factor == 0.0) continue;
      for (std::size_t c : nonzero_) {
        const double v = row[c] - factor * prow[c];
        row[c] = std::abs(v) < kFlush ? 0.0 : v;
      }
      row[enter] = 0.0;
    }
    const double factor = cost_[enter];
    for (std::size_t c : nonzero_) {
      const double v = cost_[c] - factor * prow[c];
      cost_[c] = (c != cols_ && std::abs(v) < cost_flush_) ? 0.0 : v;
    }
    cost_[enter] = 0.0;
    basis_[leave] = enter;
  }

  std::size_t m_;
  std::size_t s_;
  std::size_t rows_ = 0;
  std::size_t structural_ = 0;
  std::size_t cols_ = 0;
  std::size_t width_ = 0;
  std::vector<Column> columns_;
  std::vector<double> table_;
  std::vector<double> cost_;
  std::vector<std::size_t> basis_;
  std::vector<std::size_t> nonzero_;
  double cost_eps_ = 0.0;
  double cost_flush_ = 0.0;
};

}  // namespace detail

/// Optimal solution of  max c^T x  over P(f, S) together with a dual
/// certificate. Identical inputs always return the identical vertex.
inline PackingSolution solve_packing(const PackingInstance& inst, double f, std::span<const std::size_t> subset,
                                     const SolverOptions& options = {}) {
  if (!(f > 0.0)) throw std::invalid_argument("solve_packing: scaling factor must be positive");
  const auto s = detail::sorted_subset(subset, inst.request_count());
  detail::PackingTableau tableau(inst, f, s, options.excluded);
  const std::size_t pivots = tableau.solve(options.pivot_limit);
  auto out = tableau.extract(inst, f, s);
  out.pivots = pivots;
  return out;
}

/// Convenience overload solving over all requests.
inline PackingSolution solve_packing(const PackingInstance& inst, double f = 1.0, const SolverOptions& options = {}) {
  std::vector<std::size_t> all(inst.request_count());
  for (std::size_t j = 0; j < all.size(); ++j) all[j] = j;
  return solve_packing(inst, f, all, options);
}

/// Largest violation among primal feasibility, dual feasibility and the
/// relative objective gap |c^T x - dual| / max(1, |c^T x|). Zero (up to
/// round-off) certifies that both solutions are optimal.
inline double verify_duality(const PackingInstance& inst, double f, std::span<const std::size_t> subset,
                             const FractionalSolution& primal, const DualCertificate& dual,
                             const OptionMask* excluded = nullptr) {
  const std::size_t m = inst.resource_count();
  const std::size_t n = inst.request_count();
  std::vector<bool> in_subset(n, false);
  for (std::size_t j : subset) in_subset.at(j) = true;

  double violation = 0.0;
  std::vector<double> load(m, 0.0);
  double objective = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const auto& options = inst.requests[j].options;
    double row_sum = 0.0;
    for (std::size_t k = 0; k < options.size(); ++k) {
      const double x = j < primal.values.size() && k < primal.values[j].size() ? primal.values[j][k] : 0.0;
      violation = std::max(violation, -x);
      if ((!in_subset[j] || detail::is_excluded(excluded, j, k)) && x != 0.0) violation = std::max(violation, std::abs(x));
      row_sum += x;
      objective += options[k].profit * x;
      for (const Entry& e : options[k].consumption) load[e.resource] += e.amount * x;
    }
    violation = std::max(violation, row_sum - 1.0);
  }
  for (std::size_t i = 0; i < m; ++i) violation = std::max(violation, load[i] - f * inst.capacities[i]);

  double dual_objective = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double u = i < dual.resource_prices.size() ? dual.resource_prices[i] : 0.0;
    violation = std::max(violation, -u);
    dual_objective += f * inst.capacities[i] * u;
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (!in_subset[j]) continue;
    const double v = j < dual.request_prices.size() ? dual.request_prices[j] : 0.0;
    violation = std::max(violation, -v);
    dual_objective += v;
    const auto& options = inst.requests[j].options;
    for (std::size_t k = 0; k < options.size(); ++k) {
      if (detail::is_excluded(excluded, j, k)) continue;
      double reduced = v - options[k].profit;
      for (const Entry& e : options[k].consumption)
        reduced += e.amount * (e.resource < dual.resource_prices.size() ? dual.resource_prices[e.resource] : 0.0);
      violation = std::max(violation, -reduced);
    }
  }
  const double gap = std::abs(objective - dual_objective) / std::max(1.0, std::abs(objective));
  return std::max(violation, gap);
}

/// Re-solves P(f, S) while requests join S one at a time, warm-starting from
/// the previous optimal tableau (dual simplex for the new right-hand side,
/// then primal simplex for the new columns). A warm result is used only when
/// every nonbasic reduced cost is strictly negative, i.e. the optimum is
/// unique and therefore the vertex solve_packing would return, and when it
/// passes verify_duality. Otherwise the call falls back to solve_packing, so
/// solve(f) always agrees with solve_packing(inst, f, S) up to round-off.
class IncrementalPackingSolver {
 public:
  explicit IncrementalPackingSolver(const PackingInstance& inst) : inst_(inst), m_(inst.resource_count()) {
    for (const Request& r : inst.requests)
      for (const Option& o : r.options) cmax_ = std::max(cmax_, std::abs(o.profit));
    reset();
  }

  /// Adds request j to S; takes effect at the next solve().
  void add_request(std::size_t j) {
    if (j >= inst_.request_count()) throw std::invalid_argument("IncrementalPackingSolver: request index out of range");
    if (std::find(subset_.begin(), subset_.end(), j) != subset_.end())
      throw std::invalid_argument("IncrementalPackingSolver: request added twice");
    subset_.push_back(j);
  }

  const std::vector<std::size_t>& subset() const noexcept { return subset_; }

  /// Number of solve() calls answered by solve_packing instead of the warm tableau.
  std::size_t fallbacks() const noexcept { return fallbacks_; }

  PackingSolution solve(double f) {
    if (!(f > 0.0)) throw std::invalid_argument("solve_packing: scaling factor must be positive");
    if (broken_) reset();
    while (added_ < subset_.size()) append_request(subset_[added_++]);
    std::size_t pivots = 0;
    Status status = reoptimize(f, pivots);
    if (status == Status::kUnique) {
      PackingSolution out = extract(f);
      out.pivots = pivots;
      if (verify_duality(inst_, f, subset_, out.primal, out.dual) <= kVerifyTol) return out;
      status = Status::kFailed;
    }
    if (status == Status::kFailed) broken_ = true;
    ++fallbacks_;
    return solve_packing(inst_, f, subset_);
  }

 private:
  enum class Status { kUnique, kTied, kFailed };
  struct Column {
    bool slack;
    std::size_t request;  // structural: request id; slack: row index
    std::size_t option;
  };

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  static constexpr double kPivotEps = 1e-11;
  static constexpr double kFlush = 1e-14;
  static constexpr double kFeasTol = 1e-9;
  static constexpr double kVerifyTol = 1e-9;

  void reset() {
    rows_.clear();
    rhs_.clear();
    cost_.clear();
    columns_.clear();
    basis_.clear();
    slack_of_row_.clear();
    added_ = 0;
    broken_ = false;
    for (std::size_t i = 0; i < m_; ++i) add_row();
  }

  double cost_eps() const { return 1e-11 * cmax_; }
  double unique_eps() const { return 1e-9 * std::max(1.0, cmax_); }

  std::size_t add_column(Column c, double reduced) {
    for (auto& row : rows_) row.push_back(0.0);
    columns_.push_back(c);
    cost_.push_back(reduced);
    return columns_.size() - 1;
  }

  // New constraint row with its own slack basic.
  std::size_t add_row() {
    const std::size_t r = rows_.size();
    rows_.emplace_back(columns_.size(), 0.0);
    rhs_.push_back(0.0);
    const std::size_t c = add_column({true, r, 0}, 0.0);
    rows_[r][c] = 1.0;
    basis_.push_back(c);
    slack_of_row_.push_back(c);
    return r;
  }

  // Column B^-1 a for a structural column, read off the slack block.
  void append_request(std::size_t j) {
    const std::size_t r = add_row();
    const auto& options = inst_.requests[j].options;
    for (std::size_t k = 0; k < options.size(); ++k) {
      const Option& opt = options[k];
      double reduced = opt.profit;
      const std::size_t c = add_column({false, j, k}, 0.0);
      for (std::size_t q = 0; q < rows_.size(); ++q) {
        double v = rows_[q][slack_of_row_[r]];
        for (const Entry& e : opt.consumption) v += rows_[q][slack_of_row_[e.resource]] * e.amount;
        rows_[q][c] = v;
      }
      reduced += cost_[slack_of_row_[r]];
      for (const Entry& e : opt.consumption) reduced += cost_[slack_of_row_[e.resource]] * e.amount;
      cost_[c] = reduced;
    }
  }

  double row_bound(std::size_t q, double f) const { return q < m_ ? f * inst_.capacities[q] : 1.0; }

  void pivot(std::size_t leave, std::size_t enter) {
    std::vector<double>& prow = rows_[leave];
    const double inv = 1.0 / prow[enter];
    nonzero_.clear();
    for (std::size_t c = 0; c < prow.size(); ++c) {
      if (prow[c] == 0.0) continue;
      prow[c] *= inv;
      if (std::abs(prow[c]) < kFlush) {
        prow[c] = 0.0;
        continue;
      }
      nonzero_.push_back(c);
    }
    prow[enter] = 1.0;
    rhs_[leave] *= inv;
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      if (r == leave) continue;
      std::vector<double>& row = rows_[r];
      const double factor = row[enter];
      if (factor == 0.0) continue;
      for (std::size_t c : nonzero_) {
        const double v = row[c] - factor * prow[c];
        row[c] = std::abs(v) < kFlush ? 0.0 : v;
      }
      row[enter] = 0.0;
      rhs_[r] -= factor * rhs_[leave];
    }
    const double factor = cost_[enter];
    for (std::size_t c : nonzero_) cost_[c] -= factor * prow[c];
    cost_[enter] = 0.0;
    basis_[leave] = enter;
  }

  Status reoptimize(double f, std::size_t& pivots) {
    const std::size_t nr = rows_.size();
    const std::size_t nc = columns_.size();
    for (std::size_t r = 0; r < nr; ++r) {
      double v = 0.0;
      for (std::size_t q = 0; q < nr; ++q) v += rows_[r][slack_of_row_[q]] * row_bound(q, f);
      rhs_[r] = v;
    }
    const std::size_t limit = 20 * (nr + nc) + 1000;
    is_basic_.assign(nc, 0);
    for (std::size_t c : basis_) is_basic_[c] = 1;

    // Dual simplex over the dual-feasible columns.
    for (;;) {
      std::size_t leave = npos;
      for (std::size_t r = 0; r < nr; ++r)
        if (rhs_[r] < -kFeasTol && (leave == npos || rhs_[r] < rhs_[leave])) leave = r;
      if (leave == npos) break;
      std::size_t enter = npos;
      double best = 0.0;
      for (std::size_t c = 0; c < nc; ++c) {
        const double a = rows_[leave][c];
        if (is_basic_[c] || a >= -kPivotEps || cost_[c] > cost_eps()) continue;
        const double ratio = std::min(0.0, cost_[c]) / a;
        if (enter == npos || ratio < best) {
          enter = c;
          best = ratio;
        }
      }
      if (enter == npos || pivots == limit) return Status::kFailed;
      is_basic_[basis_[leave]] = 0;
      is_basic_[enter] = 1;
      pivot(leave, enter);
      ++pivots;
    }

    // Primal simplex: Dantzig pricing, Bland after a run of degenerate pivots.
    std::size_t degenerate = 0;
    for (;;) {
      std::size_t enter = npos;
      for (std::size_t c = 0; c < nc; ++c) {
        if (is_basic_[c] || cost_[c] <= cost_eps()) continue;
        if (enter == npos || (degenerate < 50 && cost_[c] > cost_[enter])) enter = c;
        if (degenerate >= 50) break;
      }
      if (enter == npos) break;
      std::size_t leave = npos;
      double best = 0.0;
      for (std::size_t r = 0; r < nr; ++r) {
        const double a = rows_[r][enter];
        if (a <= kPivotEps) continue;
        const double ratio = std::max(0.0, rhs_[r]) / a;
        if (leave == npos || ratio < best - 1e-12) {
          leave = r;
          best = ratio;
        } else if (ratio <= best + 1e-12 && basis_[r] < basis_[leave]) {
          leave = r;
          best = std::min(best, ratio);
        }
      }
      if (leave == npos || pivots == limit) return Status::kFailed;
      degenerate = best <= 1e-12 ? degenerate + 1 : 0;
      is_basic_[basis_[leave]] = 0;
      is_basic_[enter] = 1;
      pivot(leave, enter);
      ++pivots;
    }

    for (std::size_t c = 0; c < nc; ++c)
      if (!is_basic_[c] && cost_[c] > -unique_eps()) return Status::kTied;
    return Status::kUnique;
  }

  PackingSolution extract(double f) const {
    PackingSolution out;
    auto& primal = out.primal;
    primal.values.resize(inst_.request_count());
    for (std::size_t j = 0; j < inst_.request_count(); ++j) primal.values[j].assign(inst_.requests[j].options.size(), 0.0);
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      const Column& col = columns_[basis_[r]];
      if (!col.slack) primal.values[col.request][col.option] = std::clamp(rhs_[r], 0.0, 1.0);
    }
    for (std::size_t j : subset_)
      for (std::size_t k = 0; k < primal.values[j].size(); ++k)
        primal.objective += inst_.requests[j].options[k].profit * primal.values[j][k];

    auto& dual = out.dual;
    dual.resource_prices.assign(m_, 0.0);
    dual.request_prices.assign(inst_.request_count(), 0.0);
    for (std::size_t i = 0; i < m_; ++i) dual.resource_prices[i] = std::max(0.0, -cost_[slack_of_row_[i]]);
    for (std::size_t p = 0; p < subset_.size(); ++p)
      dual.request_prices[subset_[p]] = std::max(0.0, -cost_[slack_of_row_[m_ + p]]);
    for (std::size_t i = 0; i < m_; ++i) dual.dual_objective += f * inst_.capacities[i] * dual.resource_prices[i];
    for (std::size_t j : subset_) dual.dual_objective += dual.request_prices[j];
    return out;
  }

  const PackingInstance& inst_;
  std::size_t m_;
  double cmax_ = 0.0;
  std::vector<std::size_t> subset_;
  std::size_t added_ = 0;
  bool broken_ = false;
  std::size_t fallbacks_ = 0;
  std::vector<std::vector<double>> rows_;
  std::vector<double> rhs_;
  std::vector<double> cost_;
  std::vector<Column> columns_;
  std::vector<std::size_t> basis_;
  std::vector<std::size_t> slack_of_row_;
  std::vector<char> is_basic_;
  std::vector<std::size_t> nonzero_;
};

}  // namespace rolp
