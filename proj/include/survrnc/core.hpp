#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <set>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "survrnc/error.hpp"

namespace survrnc {

/// Censoring-aware outcome of one patient: `event` is true when the event was
/// observed at `time`, false when the patient was right-censored at `time`.
struct Label {
  bool event = true;
  double time = 0.0;

  bool operator==(const Label&) const = default;
};

struct Patient {
  std::string id;
  std::vector<double> features;
  int event = 1;  // kept as int so malformed input survives until validation
  double time = 0.0;

  Label label() const { return {event == 1, time}; }
  bool operator==(const Patient&) const = default;
};

struct Dataset {
  std::vector<Patient> patients;
  std::vector<std::string> feature_names;

  std::size_t size() const noexcept { return patients.size(); }
  std::size_t num_features() const noexcept { return feature_names.size(); }

  std::vector<Label> labels() const {
    std::vector<Label> out;
    out.reserve(patients.size());
    for (const auto& p : patients) out.push_back(p.label());
    return out;
  }

  Dataset subset(std::span<const std::size_t> indices) const {
    Dataset out;
    out.feature_names = feature_names;
    out.patients.reserve(indices.size());
    for (auto i : indices) out.patients.push_back(patients.at(i));
    return out;
  }

  bool operator==(const Dataset&) const = default;
};

struct Violation {
  ErrorCode kind;
  std::string patient_id;  // empty for dataset-level violations
  std::string detail;
};

/// Thrown by validate_dataset; carries every violation found, not just the first.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Violation> violations)
      : Error(violations.front().kind, summarize(violations)), violations_(std::move(violations)) {}

  const std::vector<Violation>& violations() const noexcept { return violations_; }

 private:
  static std::string summarize(const std::vector<Violation>& vs) {
    std::string out = std::to_string(vs.size()) + " violation(s)";
    for (const auto& v : vs) {
      out += "; ";
      out += to_string(v.kind);
      if (!v.patient_id.empty()) out += "(" + v.patient_id + ")";
      if (!v.detail.empty()) out += " " + v.detail;
    }
    return out;
  }

  std::vector<Violation> violations_;
};

/// Collects all invariant violations of a dataset. Empty result means valid.
inline std::vector<Violation> find_violations(const Dataset& d) {
  std::vector<Violation> out;
  std::unordered_set<std::string> seen;
  bool any_event = false;
  for (const auto& p : d.patients) {
    if (p.features.size() != d.feature_names.size()) {
      out.push_back({ErrorCode::RaggedFeatures, p.id,
                     "has " + std::to_string(p.features.size()) + " features, expected " +
                         std::to_string(d.feature_names.size())});
    }
    if (std::any_of(p.features.begin(), p.features.end(), [](double x) { return !std::isfinite(x); })) {
      out.push_back({ErrorCode::NonFiniteFeature, p.id, ""});
    }
    if (!std::isfinite(p.time) || p.time < 0.0) {
      out.push_back({ErrorCode::NegativeTime, p.id, "time must be finite and >= 0"});
    }
    if (p.event != 0 && p.event != 1) {
      out.push_back({ErrorCode::BadEventFlag, p.id, "event=" + std::to_string(p.event)});
    }
    if (!seen.insert(p.id).second) out.push_back({ErrorCode::DuplicateId, p.id, ""});
    any_event = any_event || p.event == 1;
  }
  if (!any_event) out.push_back({ErrorCode::AllCensored, "", "no uncensored patient"});
  return out;
}

/// Returns the dataset unchanged when valid, otherwise throws ValidationError.
inline const Dataset& validate_dataset(const Dataset& raw) {
  auto violations = find_violations(raw);
  if (!violations.empty()) throw ValidationError(std::move(violations));
  return raw;
}

/// Discrete time axis. K cut points c_1 < ... < c_K define K+1 half-open bins:
/// [0, c_1), [c_1, c_2), ..., [c_K, inf). A time exactly on a cut falls in the later bin.
class TimeGrid {
 public:
  TimeGrid() = default;
  explicit TimeGrid(std::vector<double> cut_points) : cuts_(std::move(cut_points)) {
    if (cuts_.empty()) throw Error(ErrorCode::InvalidArgument, "time grid needs at least one cut point");
    for (std::size_t i = 0; i < cuts_.size(); ++i) {
      if (!(cuts_[i] > 0.0) || !std::isfinite(cuts_[i]))
        throw Error(ErrorCode::InvalidArgument, "cut points must be positive and finite");
      if (i > 0 && !(cuts_[i] > cuts_[i - 1]))
        throw Error(ErrorCode::InvalidArgument, "cut points must be strictly increasing");
    }
  }

  std::span<const double> cut_points() const noexcept { return cuts_; }
  /// Number of cut-defined bins, K.
  std::size_t num_intervals() const noexcept { return cuts_.size(); }
  /// K + 1, including the open terminal bin.
  std::size_t num_bins() const noexcept { return cuts_.size() + 1; }

  /// Bin holding time t, in [0, K].
  std::size_t bin_index(double t) const {
    return static_cast<std::size_t>(std::upper_bound(cuts_.begin(), cuts_.end(), t) - cuts_.begin());
  }

  /// Upper edge of bin k; +inf for the terminal bin.
  double upper_edge(std::size_t k) const {
    return k < cuts_.size() ? cuts_[k] : std::numeric_limits<double>::infinity();
  }

  bool operator==(const TimeGrid&) const = default;

 private:
  std::vector<double> cuts_;
};

struct Discretization {
  TimeGrid grid;
  bool degenerate = false;  // fewer than the requested bins could be formed
};

/// Nearest-rank quantiles of uncensored times at k/num_bins, k = 1..num_bins.
/// Falls back to the distinct uncensored times when there are fewer than num_bins of them.
inline Discretization discretize_time(const Dataset& dataset, std::size_t num_bins) {
  if (num_bins < 1) throw Error(ErrorCode::InvalidArgument, "num_bins must be >= 1");
  std::vector<double> times;
  for (const auto& p : dataset.patients)
    if (p.event == 1) times.push_back(p.time);
  std::sort(times.begin(), times.end());

  std::set<double> distinct;
  for (double t : times)
    if (t > 0.0) distinct.insert(t);
  if (distinct.empty())
    throw Error(ErrorCode::DegenerateTimes, "no positive uncensored event time to place a cut");

  std::vector<double> cuts;
  bool degenerate = false;
  if (distinct.size() < num_bins) {
    cuts.assign(distinct.begin(), distinct.end());
    degenerate = true;
  } else {
    const std::size_t n = times.size();
    for (std::size_t k = 1; k <= num_bins; ++k) {
      const std::size_t rank = (k * n + num_bins - 1) / num_bins;  // ceil(k n / num_bins)
      const double q = times[rank - 1];
      if (q > 0.0 && (cuts.empty() || q > cuts.back())) cuts.push_back(q);
    }
    degenerate = cuts.size() < num_bins;
  }
  return {TimeGrid(std::move(cuts)), degenerate};
}

/// Hyperparameters of the ranked contrastive regularizer and its weight in the total loss.
struct LossConfig {
  double temperature = 2.0;
  double lambda = 0.5;
  double beta = 1.0;

  void validate() const {
    if (!(temperature > 0.0)) throw Error(ErrorCode::InvalidArgument, "temperature must be > 0");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error(ErrorCode::InvalidArgument, "lambda must be in [0, 1]");
    if (!(beta >= 0.0)) throw Error(ErrorCode::InvalidArgument, "beta must be >= 0");
  }
};

}  // namespace survrnc
