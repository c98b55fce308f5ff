#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "survrnc/core.hpp"
#include "survrnc/matrix.hpp"

namespace survrnc {

// Both heads map an embedding to K+1 logits over the bins of a TimeGrid and
// share the softmax PMF parameterization; they differ only in their native loss.

enum class HeadKind { Mtlr, DeepHit };

inline std::string_view to_string(HeadKind h) { return h == HeadKind::Mtlr ? "mtlr" : "deephit"; }

inline HeadKind parse_head(std::string_view s) {
  if (s == "mtlr") return HeadKind::Mtlr;
  if (s == "deephit") return HeadKind::DeepHit;
  throw Error(ErrorCode::InvalidArgument, "unknown head '" + std::string(s) + "'");
}

struct DeepHitConfig {
  double sigma = 0.1;
  double rank_weight = 0.5;
};

namespace detail {

inline double log_sum_exp(std::span<const double> z) {
  if (z.empty()) return -INFINITY;
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double x : z) s += std::exp(x - m);
  return m + std::log(s);
}

inline void softmax_row(std::span<const double> z, std::span<double> out) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) s += (out[j] = std::exp(z[j] - m));
  for (double& x : out) x /= s;
}

inline void check_widths(const Matrix& logits, std::size_t num_labels, const TimeGrid& grid) {
  if (logits.cols() != grid.num_bins())
    throw Error(ErrorCode::BinWidthMismatch, "logit width " + std::to_string(logits.cols()) + " but grid has " +
                                                 std::to_string(grid.num_bins()) + " bins");
  if (logits.rows() != num_labels) throw Error(ErrorCode::ShapeMismatch, "logit rows do not match label count");
}

}  // namespace detail

/// Row-wise softmax.
inline Matrix pmf_from_logits(const Matrix& logits) {
  Matrix pmf(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) detail::softmax_row(logits.row(r), pmf.row(r));
  return pmf;
}

/// S(t_k) = mass strictly beyond bin k, for each of the K cuts. Rows are non-increasing.
inline Matrix survival_curve(const Matrix& pmf) {
  if (pmf.cols() < 2) throw Error(ErrorCode::BinWidthMismatch, "pmf needs at least two bins");
  const std::size_t k = pmf.cols() - 1;
  Matrix s(pmf.rows(), k);
  for (std::size_t r = 0; r < pmf.rows(); ++r) {
    double tail = 0.0;
    for (std::size_t j = k; j-- > 0;) {
      tail += pmf(r, j + 1);
      s(r, j) = std::min(tail, 1.0);
    }
  }
  return s;
}

/// First bin a label is consistent with. Events occupy exactly their bin; a
/// censored patient may have its event in its own bin or any later one.
inline std::size_t first_consistent_bin(const Label& y, const TimeGrid& grid) { return grid.bin_index(y.time); }

/// Mean censored negative log-likelihood over the batch, with gradient w.r.t. the logits.
inline LossWithGrad mtlr_loss_with_grad(const Matrix& logits, std::span<const Label> labels, const TimeGrid& grid) {
  detail::check_widths(logits, labels.size(), grid);
  const std::size_t n = labels.size(), w = logits.cols();
  LossWithGrad out{0.0, Matrix(n, w)};
  if (n == 0) return out;
  std::vector<double> full(w), tail(w);
  for (std::size_t i = 0; i < n; ++i) {
    const auto z = logits.row(i);
    const std::size_t b = first_consistent_bin(labels[i], grid);
    const double lse = detail::log_sum_exp(z);
    detail::softmax_row(z, full);
    auto g = out.grad.row(i);
    if (labels[i].event) {
      out.value += lse - z[b];
      for (std::size_t j = 0; j < w; ++j) g[j] = full[j] - (j == b ? 1.0 : 0.0);
    } else {
      const auto zt = z.subspan(b);
      out.value += lse - detail::log_sum_exp(zt);
      detail::softmax_row(zt, std::span<double>(tail).subspan(0, zt.size()));
      for (std::size_t j = 0; j < w; ++j) g[j] = full[j] - (j >= b ? tail[j - b] : 0.0);
    }
  }
  const double inv = 1.0 / static_cast<double>(n);
  out.value *= inv;
  for (double& x : out.grad.flat()) x *= inv;
  return out;
}

inline double mtlr_loss(const Matrix& logits, std::span<const Label> labels, const TimeGrid& grid) {
  return mtlr_loss_with_grad(logits, labels, grid).value;
}

/// Exponential pairwise ranking penalty on cumulative incidence, averaged over
/// pairs (i, j) with an observed event for i and T_i < T_j. Zero when no pair qualifies.
inline LossWithGrad deephit_rank_loss_with_grad(const Matrix& logits, std::span<const Label> labels,
                                                const TimeGrid& grid, double sigma) {
  detail::check_widths(logits, labels.size(), grid);
  if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma must be > 0");
  const std::size_t n = labels.size(), w = logits.cols();
  const Matrix pmf = pmf_from_logits(logits);
  // cif(i, b) = sum_{m <= b} pmf(i, m)
  Matrix cif(n, w);
  for (std::size_t i = 0; i < n; ++i) {
    double c = 0.0;
    for (std::size_t m = 0; m < w; ++m) cif(i, m) = (c += pmf(i, m));
  }
  Matrix dpmf(n, w);
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!labels[i].event) continue;
    const std::size_t b = grid.bin_index(labels[i].time);
    for (std::size_t j = 0; j < n; ++j) {
      if (!(labels[i].time < labels[j].time)) continue;
      const double eta = std::exp(-(cif(i, b) - cif(j, b)) / sigma);
      sum += eta;
      ++pairs;
      for (std::size_t m = 0; m <= b; ++m) {
        dpmf(i, m) -= eta / sigma;
        dpmf(j, m) += eta / sigma;
      }
    }
  }
  LossWithGrad out{0.0, Matrix(n, w)};
  if (pairs == 0) return out;
  const double inv = 1.0 / static_cast<double>(pairs);
  out.value = sum * inv;
  for (std::size_t i = 0; i < n; ++i) {
    double dot = 0.0;
    for (std::size_t m = 0; m < w; ++m) dot += pmf(i, m) * dpmf(i, m);
    for (std::size_t m = 0; m < w; ++m) out.grad(i, m) = inv * pmf(i, m) * (dpmf(i, m) - dot);
  }
  return out;
}

/// Likelihood term plus rank_weight times the ranking term.
inline LossWithGrad deephit_loss_with_grad(const Matrix& logits, std::span<const Label> labels, const TimeGrid& grid,
                                           const DeepHitConfig& cfg) {
  if (!(cfg.rank_weight >= 0.0)) throw Error(ErrorCode::InvalidArgument, "rank_weight must be >= 0");
  LossWithGrad out = mtlr_loss_with_grad(logits, labels, grid);
  const LossWithGrad rank = deephit_rank_loss_with_grad(logits, labels, grid, cfg.sigma);
  out.value += cfg.rank_weight * rank.value;
  for (std::size_t k = 0; k < out.grad.size(); ++k) out.grad.flat()[k] += cfg.rank_weight * rank.grad.flat()[k];
  return out;
}

inline double deephit_loss(const Matrix& logits, std::span<const Label> labels, const TimeGrid& grid,
                           const DeepHitConfig& cfg) {
  return deephit_loss_with_grad(logits, labels, grid, cfg).value;
}

inline LossWithGrad prognosis_loss_with_grad(HeadKind head, const Matrix& logits, std::span<const Label> labels,
                                             const TimeGrid& grid, const DeepHitConfig& deephit) {
  return head == HeadKind::Mtlr ? mtlr_loss_with_grad(logits, labels, grid)
                                : deephit_loss_with_grad(logits, labels, grid, deephit);
}

/// Negative restricted mean survival time over the grid; higher means higher risk.
inline double risk_score(std::span<const double> survival, const TimeGrid& grid) {
  if (survival.size() != grid.num_intervals())
    throw Error(ErrorCode::BinWidthMismatch, "survival curve length does not match grid");
  const auto cuts = grid.cut_points();
  double area = 0.0, prev = 0.0;
  for (std::size_t k = 0; k < cuts.size(); ++k) {
    area += survival[k] * (cuts[k] - prev);
    prev = cuts[k];
  }
  return -area;
}

inline std::vector<double> risk_scores(const Matrix& logits, const TimeGrid& grid) {
  const Matrix s = survival_curve(pmf_from_logits(logits));
  std::vector<double> out(s.rows());
  for (std::size_t r = 0; r < s.rows(); ++r) out[r] = risk_score(s.row(r), grid);
  return out;
}

}  // namespace survrnc
