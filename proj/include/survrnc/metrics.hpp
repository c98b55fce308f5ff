#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "survrnc/core.hpp"
#include "survrnc/loss.hpp"
#include "survrnc/matrix.hpp"

namespace survrnc {

namespace detail {

class Fenwick {
 public:
  explicit Fenwick(std::size_t n) : tree_(n + 1, 0) {}
  void add(std::size_t i) {
    for (++i; i < tree_.size(); i += i & (~i + 1)) ++tree_[i];
  }
  // Count of inserted entries with index < i.
  std::int64_t prefix(std::size_t i) const {
    std::int64_t s = 0;
    for (; i > 0; i -= i & (~i + 1)) s += tree_[i];
    return s;
  }

 private:
  std::vector<std::int64_t> tree_;
};

// Dense ranks 0..u-1 of `values`; equal values share a rank.
inline std::vector<std::size_t> dense_ranks(std::span<const double> values, std::size_t* unique_count) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<std::size_t> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    out[i] = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), values[i]) - sorted.begin());
  *unique_count = sorted.size();
  return out;
}

// Average (mid) ranks, 1-based, as used by Spearman's coefficient.
inline std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && values[idx[j]] == values[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[idx[k]] = r;
    i = j;
  }
  return ranks;
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace detail

inline double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "spearman inputs differ in length");
  const auto rx = detail::average_ranks(x);
  const auto ry = detail::average_ranks(y);
  return detail::pearson(rx, ry);
}

/// Harrell's concordance index. A pair (i, j) is comparable when i has an event
/// and T_i < T_j, or T_i == T_j with j censored. Risk ties count one half.
/// O(n log n); exact, since all counts are integers until the final division.
inline double concordance_index(std::span<const double> risks, std::span<const Label> labels) {
  if (risks.size() != labels.size()) throw Error(ErrorCode::LengthMismatch, "risks and labels differ in length");
  const std::size_t n = risks.size();
  std::size_t unique = 0;
  const auto rank = detail::dense_ranks(risks, &unique);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return labels[a].time > labels[b].time; });

  // Sweep from the latest time; the tree holds every patient known to outlive the current group.
  detail::Fenwick later(unique);
  std::int64_t comparable = 0, concordant2 = 0, inserted = 0;
  for (std::size_t g = 0; g < n;) {
    std::size_t end = g;
    while (end < n && labels[order[end]].time == labels[order[g]].time) ++end;
    for (std::size_t k = g; k < end; ++k)
      if (!labels[order[k]].event) later.add(rank[order[k]]), ++inserted;
    for (std::size_t k = g; k < end; ++k) {
      const std::size_t i = order[k];
      if (!labels[i].event) continue;
      const std::int64_t below = later.prefix(rank[i]);
      const std::int64_t equal = later.prefix(rank[i] + 1) - below;
      comparable += inserted;
      concordant2 += 2 * below + equal;
    }
    for (std::size_t k = g; k < end; ++k)
      if (labels[order[k]].event) later.add(rank[order[k]]), ++inserted;
    g = end;
  }
  if (comparable == 0) throw Error(ErrorCode::NoComparablePairs, "no comparable pair for the concordance index");
  return static_cast<double>(concordant2) / (2.0 * static_cast<double>(comparable));
}

/// Cumulative/dynamic AUC: events by `horizon` against patients still event-free after it.
inline double cumulative_dynamic_auc(std::span<const double> risks, std::span<const Label> labels, double horizon) {
  if (risks.size() != labels.size()) throw Error(ErrorCode::LengthMismatch, "risks and labels differ in length");
  std::vector<double> cases, controls;
  for (std::size_t i = 0; i < risks.size(); ++i) {
    if (labels[i].time <= horizon && labels[i].event) cases.push_back(risks[i]);
    else if (labels[i].time > horizon) controls.push_back(risks[i]);
  }
  if (cases.empty() || controls.empty())
    throw Error(ErrorCode::UndefinedAtHorizon, "no cases or no controls at horizon " + std::to_string(horizon));
  std::sort(controls.begin(), controls.end());
  std::int64_t wins2 = 0;
  for (double r : cases) {
    const auto lo = std::lower_bound(controls.begin(), controls.end(), r);
    const auto hi = std::upper_bound(lo, controls.end(), r);
    wins2 += 2 * (lo - controls.begin()) + (hi - lo);
  }
  return static_cast<double>(wins2) /
         (2.0 * static_cast<double>(cases.size()) * static_cast<double>(controls.size()));
}

/// Spearman correlation between embedding distances and |dT| over all pairs of uncensored patients.
inline double embedding_ordinality(const Matrix& embeddings, std::span<const Label> labels) {
  if (embeddings.rows() != labels.size()) throw Error(ErrorCode::LengthMismatch, "embedding rows and labels differ");
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i].event) idx.push_back(i);
  if (idx.size() < 3) throw Error(ErrorCode::TooFewUncensored, "need at least 3 uncensored patients");
  std::vector<double> dist, dt;
  dist.reserve(idx.size() * (idx.size() - 1) / 2);
  dt.reserve(dist.capacity());
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = a + 1; b < idx.size(); ++b) {
      dist.push_back(-similarity(embeddings.row(idx[a]), embeddings.row(idx[b])));
      dt.push_back(std::abs(labels[idx[a]].time - labels[idx[b]].time));
    }
  return spearman(dist, dt);
}

inline double horizon_from_fraction(std::span<const Label> labels, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw Error(ErrorCode::InvalidArgument, "fraction must be in (0, 1]");
  if (labels.empty()) throw Error(ErrorCode::InvalidArgument, "horizon of an empty dataset");
  double mx = 0.0;
  for (const auto& y : labels) mx = std::max(mx, y.time);
  return fraction * mx;
}

inline double horizon_from_fraction(const Dataset& dataset, double fraction) {
  return horizon_from_fraction(dataset.labels(), fraction);
}

inline constexpr double kDefaultHorizons[] = {0.25, 0.5, 0.75};

struct EvalReport {
  std::optional<double> ci;
  std::map<double, std::optional<double>> auc_at;  // horizon fraction -> AUC, empty when undefined
  std::optional<double> ordinality;

  bool operator==(const EvalReport&) const = default;
};

/// Computes every metric, leaving undefined ones empty rather than throwing.
inline EvalReport evaluate_risks(std::span<const double> risks, std::span<const Label> labels,
                                 const Matrix* embeddings = nullptr) {
  EvalReport r;
  try {
    r.ci = concordance_index(risks, labels);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoComparablePairs) throw;
  }
  for (double f : kDefaultHorizons) {
    std::optional<double> v;
    try {
      v = cumulative_dynamic_auc(risks, labels, horizon_from_fraction(labels, f));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::UndefinedAtHorizon) throw;
    }
    r.auc_at[f] = v;
  }
  if (embeddings) {
    try {
      r.ordinality = embedding_ordinality(*embeddings, labels);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::TooFewUncensored) throw;
    }
  }
  return r;
}

}  // namespace survrnc
