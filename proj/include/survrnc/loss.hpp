#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "survrnc/core.hpp"
#include "survrnc/matrix.hpp"
#include "survrnc/pairsets.hpp"

namespace survrnc {

/// Rows of `embeddings` are latent vectors aligned with `labels`.
struct EmbeddingBatch {
  Matrix embeddings;
  std::vector<Label> labels;

  std::size_t size() const noexcept { return labels.size(); }

  void validate() const {
    if (labels.size() != embeddings.rows())
      throw Error(ErrorCode::ShapeMismatch, "label count does not match embedding rows");
    if (labels.size() < 2) throw Error(ErrorCode::InvalidArgument, "embedding batch needs at least 2 rows");
    for (double x : embeddings.flat())
      if (!std::isfinite(x)) throw Error(ErrorCode::NonFiniteFeature, "non-finite embedding entry");
  }
};

/// Negative Euclidean distance; larger means more similar.
inline double similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw Error(ErrorCode::LengthMismatch, "similarity of vectors with different lengths");
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = u[i] - v[i];
    s += d * d;
  }
  return -std::sqrt(s);
}

/// Normalized likelihood of p for anchor a given precomputed pair sets. In (0, 1].
inline double pair_likelihood(const EmbeddingBatch& batch, std::size_t a, std::size_t p, const PairSets& sets,
                              const LossConfig& cfg) {
  const auto& v = batch.embeddings;
  auto scaled = [&](std::size_t k) { return similarity(v.row(a), v.row(k)) / cfg.temperature; };

  double m = scaled(p);
  for (auto k : sets.negatives) m = std::max(m, scaled(k));
  if (cfg.lambda > 0.0)
    for (auto k : sets.uncertains) m = std::max(m, scaled(k));

  double neg = 0.0, unc = 0.0;
  for (auto k : sets.negatives) neg += std::exp(scaled(k) - m);
  if (cfg.lambda > 0.0)
    for (auto k : sets.uncertains) unc += std::exp(scaled(k) - m);
  return std::exp(scaled(p) - m) / (neg + cfg.lambda * unc);
}

namespace detail {

// Loss value and, when `grad` is non-null, its gradient with respect to every row.
// Reductions run in fixed (a, p, k) order so results do not depend on scheduling.
inline double survrnc_evaluate(const EmbeddingBatch& batch, const LossConfig& cfg, Matrix* grad) {
  batch.validate();
  cfg.validate();
  const std::size_t n = batch.size();
  const std::size_t dim = batch.embeddings.cols();
  const auto& v = batch.embeddings;
  const double tau = cfg.temperature;
  const double norm = 1.0 / (static_cast<double>(n) * static_cast<double>(n - 1));

  // Pairwise distances, computed once.
  Matrix dist(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) dist(i, j) = dist(j, i) = -similarity(v.row(i), v.row(j));

  if (grad) *grad = Matrix(n, dim);
  enum : unsigned char { kOut, kNeg, kUnc };
  std::vector<unsigned char> member(n);
  std::vector<TimeInterval> delta(n);
  std::vector<double> scaled(n), expo(n), coeff(n);
  double total = 0.0;

  for (std::size_t a = 0; a < n; ++a) {
    std::fill(coeff.begin(), coeff.end(), 0.0);
    // Per-anchor quantities shared by every positive p.
    double shift = -INFINITY;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == a) continue;
      delta[k] = delta_interval(batch.labels[a], batch.labels[k]);
      scaled[k] = -dist(a, k) / tau;
      shift = std::max(shift, scaled[k]);
    }
    for (std::size_t k = 0; k < n; ++k) expo[k] = k == a ? 0.0 : std::exp(scaled[k] - shift);

    for (std::size_t p = 0; p < n; ++p) {
      if (p == a) continue;
      const double theta = pair_threshold(batch.labels[a], batch.labels[p]);
      for (std::size_t k = 0; k < n; ++k) {
        member[k] = kOut;
        if (k == a) continue;
        if (delta[k].lo >= theta) member[k] = kNeg;
        else if (!(delta[k].hi < theta)) member[k] = (k == p) ? kNeg : kUnc;
      }
      // Negatives and uncertains are summed separately so an empty uncertain set
      // leaves the result bit-for-bit independent of lambda.
      double m = shift;
      auto accumulate = [&](double& neg, double& unc) {
        neg = unc = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          if (k == p) continue;
          if (member[k] == kNeg) neg += expo[k];
          else if (member[k] == kUnc && cfg.lambda > 0.0) unc += expo[k];
        }
      };
      double neg, unc;
      accumulate(neg, unc);
      if (expo[p] < 1e-250) {
        // The anchor-wide shift underflowed this pair's terms; rescale to its own maximum.
        m = scaled[p];
        for (std::size_t k = 0; k < n; ++k)
          if (member[k] == kNeg || (member[k] == kUnc && cfg.lambda > 0.0)) m = std::max(m, scaled[k]);
        for (std::size_t k = 0; k < n; ++k) expo[k] = k == a ? 0.0 : std::exp(scaled[k] - m);
        accumulate(neg, unc);
      }
      // neg excludes p: -log l = log(1 + rest / e_p) >= 0.
      const double rest = neg + cfg.lambda * unc;
      const double denom = expo[p] + rest;
      total += expo[p] > 0.0 ? std::log1p(rest / expo[p]) : std::log(denom) - (scaled[p] - m);

      if (grad) {
        // d(-log l)/d s_ak = (w_k e_k / denom - [k == p]) / tau, with s = -dist.
        for (std::size_t k = 0; k < n; ++k) {
          if (k == a) continue;
          const double w = member[k] == kNeg ? 1.0 : member[k] == kUnc ? cfg.lambda : 0.0;
          double c = w == 0.0 ? 0.0 : w * expo[k] / denom;
          if (k == p) c -= 1.0;
          coeff[k] += c / tau;
        }
      }
      if (m != shift)
        for (std::size_t k = 0; k < n; ++k) expo[k] = k == a ? 0.0 : std::exp(scaled[k] - shift);
    }
    if (grad) {
      for (std::size_t k = 0; k < n; ++k) {
        if (k == a || coeff[k] == 0.0 || dist(a, k) == 0.0) continue;
        // s_ak = -|v_a - v_k|: ds/dv_a = -(v_a - v_k)/|.|, ds/dv_k = +(v_a - v_k)/|.|
        const double scale = norm * coeff[k] / dist(a, k);
        auto ga = grad->row(a);
        auto gk = grad->row(k);
        for (std::size_t j = 0; j < dim; ++j) {
          const double diff = v(a, j) - v(k, j);
          ga[j] -= scale * diff;
          gk[j] += scale * diff;
        }
      }
    }
  }
  return total * norm;
}

}  // namespace detail

/// Mean over ordered (anchor, positive) pairs of -log of the censoring-aware
/// ranked likelihood. Non-negative.
inline double survrnc_loss(const EmbeddingBatch& batch, const LossConfig& cfg) {
  return detail::survrnc_evaluate(batch, cfg, nullptr);
}

/// Gradient of survrnc_loss with respect to each embedding row. Pairs at zero
/// distance contribute the zero subgradient.
inline Matrix survrnc_loss_grad(const EmbeddingBatch& batch, const LossConfig& cfg) {
  Matrix g;
  detail::survrnc_evaluate(batch, cfg, &g);
  return g;
}

inline LossWithGrad survrnc_loss_with_grad(const EmbeddingBatch& batch, const LossConfig& cfg) {
  LossWithGrad out;
  out.value = detail::survrnc_evaluate(batch, cfg, &out.grad);
  return out;
}

inline double total_loss(double prognosis, double survrnc, const LossConfig& cfg) {
  return prognosis + cfg.beta * survrnc;
}

}  // namespace survrnc
