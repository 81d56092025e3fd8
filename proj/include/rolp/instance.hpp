#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "rolp/errors.hpp"

namespace rolp {

/// One nonzero coefficient a_{i,j,k} of an option column.
struct Entry {
  std::size_t resource = 0;
  double amount = 0.0;

  friend bool operator==(const Entry&, const Entry&) = default;
};

/// One column of a request: a profit and a sparse consumption vector.
/// Entries are kept sorted by resource index.
struct Option {
  double profit = 0.0;
  std::vector<Entry> consumption;

  friend bool operator==(const Option&, const Option&) = default;
};

/// An online request; at most one of its options may be chosen.
struct Request {
  std::vector<Option> options;

  friend bool operator==(const Request&, const Request&) = default;
};

/// A packing LP  max c^T x  s.t.  Ax <= b,  sum_k x_{j,k} <= 1,  x >= 0.
struct PackingInstance {
  std::string name;
  std::vector<double> capacities;
  std::vector<Request> requests;

  std::size_t resource_count() const noexcept { return capacities.size(); }
  std::size_t request_count() const noexcept { return requests.size(); }

  friend bool operator==(const PackingInstance&, const PackingInstance&) = default;
};

/// Profit and size of an item in one bin.
struct GapEntry {
  std::size_t bin = 0;
  double profit = 0.0;
  double size = 0.0;

  friend bool operator==(const GapEntry&, const GapEntry&) = default;
};

/// An item of a generalized assignment instance; entries sorted by bin.
struct GapItem {
  std::vector<GapEntry> bins;

  friend bool operator==(const GapItem&, const GapItem&) = default;
};

struct GapInstance {
  std::string name;
  std::vector<double> bin_capacities;
  std::vector<GapItem> items;

  std::size_t bin_count() const noexcept { return bin_capacities.size(); }
  std::size_t item_count() const noexcept { return items.size(); }

  friend bool operator==(const GapInstance&, const GapInstance&) = default;
};

struct ValidationReport {
  std::vector<std::string> issues;

  bool ok() const noexcept { return issues.empty(); }
};

inline ValidationReport validate(const PackingInstance& inst) {
  ValidationReport report;
  auto flag = [&](std::string msg) { report.issues.push_back(std::move(msg)); };
  const std::size_t m = inst.resource_count();
  if (m == 0) flag("no resources (m = 0)");
  for (std::size_t i = 0; i < m; ++i) {
    if (!(inst.capacities[i] >= 0.0) || !std::isfinite(inst.capacities[i]))
      flag("capacity < 0 at resource " + std::to_string(i));
  }
  for (std::size_t j = 0; j < inst.request_count(); ++j) {
    const auto& options = inst.requests[j].options;
    for (std::size_t k = 0; k < options.size(); ++k) {
      const auto where = "request " + std::to_string(j) + " option " + std::to_string(k);
      const Option& opt = options[k];
      if (!(opt.profit >= 0.0) || !std::isfinite(opt.profit)) flag("profit < 0 at " + where);
      for (std::size_t e = 0; e < opt.consumption.size(); ++e) {
        const Entry& entry = opt.consumption[e];
        if (entry.resource >= m)
          flag("index out of range at " + where + ": resource " + std::to_string(entry.resource));
        if (!(entry.amount > 0.0) || !std::isfinite(entry.amount))
          flag("consumption <= 0 at " + where + ", resource " + std::to_string(entry.resource));
        if (e > 0 && opt.consumption[e - 1].resource >= entry.resource)
          flag("duplicate or unsorted resource index at " + where);
      }
    }
  }
  return report;
}

inline ValidationReport validate(const GapInstance& gap) {
  ValidationReport report;
  auto flag = [&](std::string msg) { report.issues.push_back(std::move(msg)); };
  const std::size_t m = gap.bin_count();
  if (m == 0) flag("no bins (m = 0)");
  for (std::size_t i = 0; i < m; ++i) {
    if (!(gap.bin_capacities[i] >= 0.0) || !std::isfinite(gap.bin_capacities[i]))
      flag("capacity < 0 at bin " + std::to_string(i));
  }
  for (std::size_t j = 0; j < gap.item_count(); ++j) {
    const auto& bins = gap.items[j].bins;
    for (std::size_t e = 0; e < bins.size(); ++e) {
      const auto where = "item " + std::to_string(j) + " bin " + std::to_string(bins[e].bin);
      if (bins[e].bin >= m) flag("index out of range at " + where);
      if (!(bins[e].profit >= 0.0) || !std::isfinite(bins[e].profit)) flag("profit < 0 at " + where);
      if (!(bins[e].size >= 0.0) || !std::isfinite(bins[e].size)) flag("size < 0 at " + where);
      if (e > 0 && bins[e - 1].bin >= bins[e].bin) flag("duplicate or unsorted bin index at " + where);
    }
  }
  return report;
}

/// Throws DomainError listing every issue if the instance is malformed.
template <typename Instance>
void require_valid(const Instance& inst) {
  const auto report = validate(inst);
  if (report.ok()) return;
  std::string msg = "invalid instance '" + inst.name + "':";
  for (const auto& issue : report.issues) msg += "\n  " + issue;
  throw DomainError(msg);
}

/// Column sparsity d: the largest number of resources a single option touches.
inline std::size_t column_sparsity(const PackingInstance& inst) noexcept {
  std::size_t d = 0;
  for (const auto& req : inst.requests)
    for (const auto& opt : req.options) d = std::max(d, opt.consumption.size());
  return d;
}

/// max_{j,k} a_{i,j,k} for every row; 0 for rows no option touches.
inline std::vector<double> row_maxima(const PackingInstance& inst) {
  std::vector<double> maxima(inst.resource_count(), 0.0);
  for (const auto& req : inst.requests)
    for (const auto& opt : req.options)
      for (const auto& e : opt.consumption)
        if (e.resource < maxima.size()) maxima[e.resource] = std::max(maxima[e.resource], e.amount);
  return maxima;
}

/// Capacity ratio B = min_i b_i / max_{j,k} a_{i,j,k} over rows with a positive entry.
inline double capacity_ratio(const PackingInstance& inst) {
  const auto maxima = row_maxima(inst);
  double ratio = std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t i = 0; i < maxima.size(); ++i) {
    if (maxima[i] <= 0.0) continue;
    ratio = std::min(ratio, inst.capacities[i] / maxima[i]);
    any = true;
  }
  if (!any) throw DomainError("capacity ratio undefined: no resource has a positive consumption");
  return ratio;
}

/// Divides every row (and its capacity) by its largest entry. Rows without a
/// positive entry are left untouched and reported through `untouched_rows`.
/// Integral feasibility is unchanged.
inline PackingInstance normalize_rows(const PackingInstance& inst,
                                      std::vector<std::size_t>* untouched_rows = nullptr) {
  const auto maxima = row_maxima(inst);
  PackingInstance out = inst;
  if (untouched_rows) untouched_rows->clear();
  for (std::size_t i = 0; i < maxima.size(); ++i) {
    if (maxima[i] > 0.0) {
      out.capacities[i] = inst.capacities[i] / maxima[i];
    } else if (untouched_rows) {
      untouched_rows->push_back(i);
    }
  }
  for (auto& req : out.requests)
    for (auto& opt : req.options)
      for (auto& e : opt.consumption) e.amount /= maxima[e.resource];
  return out;
}

/// Packing embedding of a GAP instance: one option per eligible bin with a
/// single consumption entry on that bin. Option k of item j corresponds to
/// gap.items[j].bins[k].
inline PackingInstance gap_to_packing(const GapInstance& gap) {
  PackingInstance out;
  out.name = gap.name;
  out.capacities = gap.bin_capacities;
  out.requests.reserve(gap.item_count());
  for (const auto& item : gap.items) {
    Request req;
    req.options.reserve(item.bins.size());
    for (const auto& e : item.bins) {
      Option opt;
      opt.profit = e.profit;
      if (e.size > 0.0) opt.consumption.push_back({e.bin, e.size});
      req.options.push_back(std::move(opt));
    }
    out.requests.push_back(std::move(req));
  }
  return out;
}

/// True iff the 0/1 allocation `choice` (one option index or npos per
/// request) satisfies every capacity within `tol`.
inline bool integral_feasible(const PackingInstance& inst, const std::vector<std::size_t>& choice,
                              double tol = 1e-9) {
  std::vector<double> load(inst.resource_count(), 0.0);
  for (std::size_t j = 0; j < choice.size(); ++j) {
    if (choice[j] == static_cast<std::size_t>(-1)) continue;
    for (const auto& e : inst.requests[j].options[choice[j]].consumption) load[e.resource] += e.amount;
  }
  for (std::size_t i = 0; i < load.size(); ++i)
    if (load[i] > inst.capacities[i] + tol) return false;
  return true;
}

}  // namespace rolp
