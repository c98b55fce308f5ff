#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "survrnc/core.hpp"
#include "survrnc/matrix.hpp"

namespace survrnc {

/// Seeded generator for an independent stream identified by (seed, stream, step).
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t step = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(step),
                    static_cast<std::uint32_t>(step >> 32)};
  return std::mt19937_64(seq);
}

// ---------------------------------------------------------------------------
// Synthetic data

enum class RiskModel { Linear, Quadratic };

inline std::string_view to_string(RiskModel m) { return m == RiskModel::Linear ? "linear" : "quadratic"; }

inline RiskModel parse_risk_model(std::string_view s) {
  if (s == "linear") return RiskModel::Linear;
  if (s == "quadratic") return RiskModel::Quadratic;
  throw Error(ErrorCode::InvalidArgument, "unknown risk model '" + std::string(s) + "'");
}

struct SynthConfig {
  std::size_t n = 2000;
  std::size_t d_in = 8;
  RiskModel risk_model = RiskModel::Linear;
  double base_rate = 0.01;
  double target_censoring = 0.3;
  std::uint64_t seed = 0;

  void validate() const {
    if (n < 4) throw Error(ErrorCode::InvalidArgument, "synthetic n must be >= 4");
    if (d_in < 1) throw Error(ErrorCode::InvalidArgument, "synthetic d_in must be >= 1");
    if (risk_model == RiskModel::Quadratic && d_in < 2)
      throw Error(ErrorCode::InvalidArgument, "quadratic risk needs d_in >= 2");
    if (!(base_rate > 0.0)) throw Error(ErrorCode::InvalidArgument, "base_rate must be > 0");
    if (!(target_censoring >= 0.0 && target_censoring < 1.0))
      throw Error(ErrorCode::InvalidArgument, "target_censoring must be in [0, 1)");
  }
};

struct SyntheticData {
  Dataset dataset;
  std::vector<double> true_risk;
  std::vector<double> coefficients;  // unit-norm w
  double censor_rate = 0.0;          // 0 when censoring is disabled
};

/// Expected censored fraction under exponential event rates `rates` and censoring rate c.
inline double expected_censoring(std::span<const double> rates, double c) {
  double s = 0.0;
  for (double r : rates) s += c / (c + r);
  return s / static_cast<double>(rates.size());
}

/// Censoring rate whose expected censored fraction equals `target`, by bisection in log space.
/// A zero target means no censoring and yields rate 0.
inline double calibrate_censor_rate(std::span<const double> rates, double target) {
  if (target == 0.0) return 0.0;
  const auto [mn, mx] = std::minmax_element(rates.begin(), rates.end());
  double lo = std::log(*mn) - 40.0, hi = std::log(*mx) + 40.0;
  if (!(expected_censoring(rates, std::exp(lo)) < target && expected_censoring(rates, std::exp(hi)) > target))
    throw Error(ErrorCode::CalibrationFailed, "censoring target not bracketed");
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (expected_censoring(rates, std::exp(mid)) < target ? lo : hi) = mid;
  }
  return std::exp(0.5 * (lo + hi));
}

inline SyntheticData generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  SyntheticData out;
  std::normal_distribution<double> normal(0.0, 1.0);

  auto wrng = make_rng(cfg.seed, 1);
  out.coefficients.resize(cfg.d_in);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& w : out.coefficients) {
      w = normal(wrng);
      norm += w * w;
    }
  } while (norm == 0.0);
  for (double& w : out.coefficients) w /= std::sqrt(norm);

  auto xrng = make_rng(cfg.seed, 2);
  std::vector<std::vector<double>> features(cfg.n, std::vector<double>(cfg.d_in));
  std::vector<double> rates(cfg.n);
  out.true_risk.resize(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    double r = 0.0;
    for (std::size_t j = 0; j < cfg.d_in; ++j) r += out.coefficients[j] * (features[i][j] = normal(xrng));
    if (cfg.risk_model == RiskModel::Quadratic) r += 0.5 * features[i][0] * features[i][1];
    out.true_risk[i] = r;
    rates[i] = cfg.base_rate * std::exp(r);
  }
  out.censor_rate = cfg.target_censoring > 0.0 ? calibrate_censor_rate(rates, cfg.target_censoring) : 0.0;

  auto trng = make_rng(cfg.seed, 3);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto draw_exp = [&](double rate) {
    double t = 0.0;
    while (!(t > 0.0 && std::isfinite(t))) t = -std::log1p(-unif(trng)) / rate;
    return t;
  };
  for (std::size_t j = 0; j < cfg.d_in; ++j) out.dataset.feature_names.push_back("x" + std::to_string(j + 1));
  for (std::size_t i = 0; i < cfg.n; ++i) {
    const double event_time = draw_exp(rates[i]);
    const double censor_time = out.censor_rate > 0.0 ? draw_exp(out.censor_rate) : INFINITY;
    Patient p;
    p.id = "P" + std::to_string(i);
    p.features = std::move(features[i]);
    p.event = event_time <= censor_time ? 1 : 0;
    p.time = std::min(event_time, censor_time);
    out.dataset.patients.push_back(std::move(p));
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV: id,time,event,<features...>

namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view text, std::size_t row, std::string_view column) {
  text = trim(text);
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty())
    throw Error(ErrorCode::ParseError, "row " + std::to_string(row) + ", column '" + std::string(column) +
                                           "': cannot parse '" + std::string(text) + "'");
  return value;
}

}  // namespace detail

/// Shortest text that parses back to exactly `x`.
inline std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

inline Dataset parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "empty CSV: header required");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const std::string header_line = line;
  const auto header = detail::split_csv_line(header_line);
  auto column_of = [&](std::string_view name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (detail::trim(header[i]) == name) return i;
    throw Error(ErrorCode::ParseError, "row 1: missing required column '" + std::string(name) + "'");
  };
  const std::size_t id_col = column_of("id"), time_col = column_of("time"), event_col = column_of("event");

  Dataset d;
  std::vector<std::size_t> feature_cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i == id_col || i == time_col || i == event_col) continue;
    feature_cols.push_back(i);
    d.feature_names.emplace_back(detail::trim(header[i]));
  }
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw Error(ErrorCode::ParseError, "row " + std::to_string(row) + ": expected " +
                                             std::to_string(header.size()) + " columns, got " +
                                             std::to_string(cells.size()));
    Patient p;
    p.id = std::string(detail::trim(cells[id_col]));
    p.time = detail::parse_number<double>(cells[time_col], row, "time");
    p.event = detail::parse_number<int>(cells[event_col], row, "event");
    for (auto c : feature_cols) p.features.push_back(detail::parse_number<double>(cells[c], row, header[c]));
    d.patients.push_back(std::move(p));
  }
  return d;
}

/// Parses and validates a dataset file.
inline Dataset load_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  Dataset d = parse_csv(in);
  validate_dataset(d);
  return d;
}

inline void write_csv(std::ostream& out, const Dataset& d) {
  out << "id,time,event";
  for (const auto& name : d.feature_names) out << ',' << name;
  out << '\n';
  for (const auto& p : d.patients) {
    out << p.id << ',' << format_double(p.time) << ',' << p.event;
    for (double x : p.features) out << ',' << format_double(x);
    out << '\n';
  }
}

inline void save_csv(const std::string& path, const Dataset& d) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
  write_csv(out, d);
  if (!out) throw Error(ErrorCode::Io, "write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// Two-view augmentation

struct AugmentConfig {
  double noise_std = 0.1;
  double feature_dropout_prob = 0.1;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(noise_std >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise_std must be >= 0");
    if (!(feature_dropout_prob >= 0.0 && feature_dropout_prob < 1.0))
      throw Error(ErrorCode::InvalidArgument, "feature_dropout_prob must be in [0, 1)");
  }
};

struct ViewBatch {
  Matrix features;  // 2M rows; rows 2i and 2i+1 are the two views of patient i
  std::vector<Label> labels;
};

/// Stacks the rows of `patients` as an unaugmented feature matrix.
inline Matrix feature_matrix(std::span<const Patient> patients) {
  const std::size_t d = patients.empty() ? 0 : patients.front().features.size();
  Matrix x(patients.size(), d);
  for (std::size_t i = 0; i < patients.size(); ++i) std::copy(patients[i].features.begin(), patients[i].features.end(), x.row(i).begin());
  return x;
}

inline ViewBatch two_view_augment(std::span<const Patient> patients, const AugmentConfig& cfg) {
  cfg.validate();
  if (patients.empty()) throw Error(ErrorCode::InvalidArgument, "cannot augment an empty batch");
  const std::size_t d = patients.front().features.size();
  auto rng = make_rng(cfg.seed, 4);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::bernoulli_distribution drop(cfg.feature_dropout_prob);
  ViewBatch out{Matrix(2 * patients.size(), d), {}};
  out.labels.reserve(2 * patients.size());
  for (std::size_t i = 0; i < patients.size(); ++i) {
    if (patients[i].features.size() != d) throw Error(ErrorCode::RaggedFeatures, "ragged feature rows in batch");
    for (std::size_t v = 0; v < 2; ++v) {
      auto row = out.features.row(2 * i + v);
      for (std::size_t j = 0; j < d; ++j) {
        double x = patients[i].features[j];
        if (cfg.noise_std > 0.0) x += cfg.noise_std * noise(rng);
        if (cfg.feature_dropout_prob > 0.0 && drop(rng)) x = 0.0;
        row[j] = x;
      }
      out.labels.push_back(patients[i].label());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Batch sampling

enum class SamplerMode { Uniform, EventBalanced };

inline std::string_view to_string(SamplerMode m) { return m == SamplerMode::Uniform ? "uniform" : "event_balanced"; }

inline SamplerMode parse_sampler(std::string_view s) {
  if (s == "uniform") return SamplerMode::Uniform;
  if (s == "event_balanced") return SamplerMode::EventBalanced;
  throw Error(ErrorCode::InvalidArgument, "unknown sampler mode '" + std::string(s) + "'");
}

/// Per-patient sampling weights, normalized to sum to 1. Event-balanced weights
/// are inversely proportional to the size of each patient's event class.
inline std::vector<double> sampling_weights(std::span<const Label> labels, SamplerMode mode) {
  const std::size_t n = labels.size();
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  if (mode == SamplerMode::EventBalanced) {
    const auto events = static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), [](const Label& y) { return y.event; }));
    const std::size_t censored = n - events;
    const double classes = (events > 0 ? 1.0 : 0.0) + (censored > 0 ? 1.0 : 0.0);
    for (std::size_t i = 0; i < n; ++i)
      w[i] = 1.0 / (classes * static_cast<double>(labels[i].event ? events : censored));
  }
  return w;
}

/// Weighted sampling without replacement (exponential-key method). Returns sorted indices.
inline std::vector<std::size_t> sample_batch(std::span<const Label> labels, std::size_t batch_size, SamplerMode mode,
                                             std::uint64_t seed, std::uint64_t step) {
  const std::size_t n = labels.size();
  if (batch_size > n) throw Error(ErrorCode::InvalidArgument, "batch_size exceeds dataset size");
  const auto w = sampling_weights(labels, mode);
  auto rng = make_rng(seed, 5, step);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::pair<double, std::size_t>> keys(n);
  for (std::size_t i = 0; i < n; ++i) {
    // key = u^(1/w); compare logs to stay in range
    double u = 0.0;
    while (u == 0.0) u = unif(rng);
    keys[i] = {std::log(u) / w[i], i};
  }
  std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(batch_size), keys.end(),
                    [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
  std::vector<std::size_t> out(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) out[i] = keys[i].second;
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<std::size_t> sample_batch(const Dataset& d, std::size_t batch_size, SamplerMode mode,
                                             std::uint64_t seed, std::uint64_t step) {
  const auto labels = d.labels();
  return sample_batch(labels, batch_size, mode, seed, step);
}

}  // namespace survrnc
