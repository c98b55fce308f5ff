#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <span>
#include <vector>

#include "survrnc/core.hpp"

namespace survrnc {

/// Closed range [lo, hi] of a non-negative quantity; hi may be +inf.
struct TimeInterval {
  double lo = 0.0;
  double hi = 0.0;

  bool operator==(const TimeInterval&) const = default;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Range of the unobserved true event time: exact for events, [T, inf) when censored.
inline TimeInterval true_time_interval(const Label& x) {
  return x.event ? TimeInterval{x.time, x.time} : TimeInterval{x.time, kInf};
}

/// Exact range of |T*_a - T*_k| over all true times consistent with both labels.
inline TimeInterval delta_interval(const Label& a, const Label& k) {
  if (a.event && k.event) {
    const double d = std::abs(a.time - k.time);
    return {d, d};
  }
  if (a.event != k.event) {
    const Label& censored = a.event ? k : a;
    const Label& exact = a.event ? a : k;
    if (censored.time >= exact.time) return {censored.time - exact.time, kInf};
    return {0.0, kInf};
  }
  return {0.0, kInf};
}

/// Observed |T_a - T_p|, ignoring censoring status.
inline double pair_threshold(const Label& a, const Label& p) { return std::abs(a.time - p.time); }

enum class PairClass { Negative, Uncertain, Disregard };

inline PairClass classify_against(double threshold, const Label& a, const Label& k) {
  const TimeInterval d = delta_interval(a, k);
  if (d.lo >= threshold) return PairClass::Negative;
  if (d.hi < threshold) return PairClass::Disregard;
  return PairClass::Uncertain;
}

inline PairClass classify(const Label& a, const Label& p, const Label& k) {
  return classify_against(pair_threshold(a, p), a, k);
}

struct PairSets {
  std::vector<std::size_t> negatives;
  std::vector<std::size_t> uncertains;
};

/// Classifies every k != a of the batch against the (a, p) threshold.
/// p itself always ends up in `negatives`: an uncertain self-pair is promoted
/// so that the likelihood denominator dominates its numerator.
inline PairSets build_pair_sets(std::span<const Label> batch, std::size_t a, std::size_t p) {
  if (a >= batch.size() || p >= batch.size() || a == p)
    throw Error(ErrorCode::InvalidArgument, "build_pair_sets needs distinct in-range anchor and positive");
  const double theta = pair_threshold(batch[a], batch[p]);
  PairSets sets;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    if (k == a) continue;
    switch (classify_against(theta, batch[a], batch[k])) {
      case PairClass::Negative: sets.negatives.push_back(k); break;
      case PairClass::Uncertain:
        (k == p ? sets.negatives : sets.uncertains).push_back(k);
        break;
      case PairClass::Disregard: break;
    }
  }
  return sets;
}

inline char class_symbol(PairClass c) {
  switch (c) {
    case PairClass::Negative: return 'N';
    case PairClass::Uncertain: return 'U';
    case PairClass::Disregard: return 'D';
  }
  return '?';
}

/// One row per ordered (anchor, positive) pair: ids, threshold, then the
/// membership of every batch member ('N', 'U', 'D', or '-' for the anchor).
inline void write_pairsets_matrix(std::ostream& out, const Dataset& batch) {
  const auto labels = batch.labels();
  out << "anchor,positive,theta";
  for (const auto& p : batch.patients) out << ',' << p.id;
  out << '\n';
  std::vector<char> cell(labels.size());
  for (std::size_t a = 0; a < labels.size(); ++a) {
    for (std::size_t p = 0; p < labels.size(); ++p) {
      if (p == a) continue;
      const PairSets sets = build_pair_sets(labels, a, p);
      std::fill(cell.begin(), cell.end(), 'D');
      cell[a] = '-';
      for (auto k : sets.negatives) cell[k] = 'N';
      for (auto k : sets.uncertains) cell[k] = 'U';
      out << batch.patients[a].id << ',' << batch.patients[p].id << ',' << pair_threshold(labels[a], labels[p]);
      for (char c : cell) out << ',' << c;
      out << '\n';
    }
  }
}

}  // namespace survrnc
