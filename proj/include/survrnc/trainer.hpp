#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "survrnc/core.hpp"
#include "survrnc/data.hpp"
#include "survrnc/heads.hpp"
#include "survrnc/loss.hpp"
#include "survrnc/metrics.hpp"
#include "survrnc/nn.hpp"

namespace survrnc {

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  double lr = 1e-4;
  double weight_decay = 1e-5;
  HeadKind head = HeadKind::Mtlr;
  LossConfig loss_cfg{};
  std::size_t num_bins = 20;
  AugmentConfig augment{};
  SamplerMode sampler = SamplerMode::EventBalanced;
  std::uint64_t seed = 0;

  std::vector<std::size_t> hidden_widths{64};
  std::size_t embedding_dim = 32;
  Activation activation = Activation::Relu;
  DeepHitConfig deephit{};
  double validation_fraction = 0.2;
  // false removes the contrastive term from the graph entirely (not just beta = 0)
  bool use_survrnc = true;

  void validate() const {
    if (epochs == 0 || batch_size == 0 || num_bins == 0 || embedding_dim == 0)
      throw Error(ErrorCode::InvalidArgument, "epochs, batch_size, num_bins and embedding_dim must be positive");
    if (!(lr > 0.0) || !(weight_decay >= 0.0)) throw Error(ErrorCode::InvalidArgument, "bad lr or weight_decay");
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
      throw Error(ErrorCode::InvalidArgument, "validation_fraction must be in (0, 1)");
    loss_cfg.validate();
    augment.validate();
  }
};

/// Encoder, survival head and the time grid the head's bins refer to.
struct Model {
  ModelParams encoder;
  ModelParams head;
  HeadKind head_kind = HeadKind::Mtlr;
  TimeGrid grid;

  bool operator==(const Model&) const = default;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double prognosis = 0.0;
  double survrnc = 0.0;
  double total = 0.0;
  std::optional<double> val_ci;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;  // by validation CI; 0 if never defined
  std::optional<double> best_val_ci;
};

struct StepRecord {
  std::size_t step = 0;
  double prognosis = 0.0;
  double survrnc = 0.0;
  double total = 0.0;
};

struct DataSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

struct TrainResult {
  Model model;
  TrainHistory history;
  DataSplit split;
};

/// Split stratified by event status; each stratum contributes round(fraction * size) to validation.
inline DataSplit stratified_split(const Dataset& d, double validation_fraction, std::uint64_t seed) {
  std::vector<std::size_t> strata[2];
  for (std::size_t i = 0; i < d.size(); ++i) strata[d.patients[i].event == 1].push_back(i);
  auto rng = make_rng(seed, 6);
  DataSplit split;
  for (auto& s : strata) {
    std::shuffle(s.begin(), s.end(), rng);
    const auto nval = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(s.size())));
    split.validation.insert(split.validation.end(), s.begin(), s.begin() + static_cast<std::ptrdiff_t>(nval));
    split.train.insert(split.train.end(), s.begin() + static_cast<std::ptrdiff_t>(nval), s.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.validation.begin(), split.validation.end());
  return split;
}

inline Matrix embed(const Model& model, const Matrix& features) { return forward(model.encoder, features).output; }

inline Matrix embed(const Model& model, const Dataset& d) { return embed(model, feature_matrix(d.patients)); }

inline std::vector<double> predict_risk(const Model& model, const Matrix& embeddings) {
  return risk_scores(forward(model.head, embeddings).output, model.grid);
}

/// CI, AUC at 25/50/75% of the maximum observed time, and embedding ordinality.
inline EvalReport evaluate(const Model& model, const Dataset& d) {
  const Matrix emb = embed(model, d);
  const auto risks = predict_risk(model, emb);
  const auto labels = d.labels();
  return evaluate_risks(risks, labels, &emb);
}

using StepObserver = std::function<void(const StepRecord&)>;

inline TrainResult train(const Dataset& dataset, const TrainConfig& cfg, const StepObserver& on_step = {}) {
  validate_dataset(dataset);
  cfg.validate();
  TrainResult res;
  res.split = stratified_split(dataset, cfg.validation_fraction, cfg.seed);
  if (res.split.train.empty() || res.split.validation.empty())
    throw Error(ErrorCode::InvalidArgument, "dataset too small for a train/validation split");
  const Dataset train_set = dataset.subset(res.split.train);
  const Dataset val_set = dataset.subset(res.split.validation);
  if (std::none_of(train_set.patients.begin(), train_set.patients.end(), [](const Patient& p) { return p.event == 1; }))
    throw Error(ErrorCode::AllCensored, "training split has no uncensored patient");

  Model& model = res.model;
  model.head_kind = cfg.head;
  model.grid = discretize_time(train_set, cfg.num_bins).grid;

  MlpSpec enc_spec{{dataset.num_features()}, cfg.activation, cfg.seed * 2 + 1};
  for (auto w : cfg.hidden_widths) enc_spec.layer_widths.push_back(w);
  enc_spec.layer_widths.push_back(cfg.embedding_dim);
  model.encoder = init_params(enc_spec);
  model.head = init_params(MlpSpec{{cfg.embedding_dim, model.grid.num_bins()}, cfg.activation, cfg.seed * 2 + 2});

  const AdamConfig adam{cfg.lr, cfg.weight_decay};
  AdamState enc_state = init_adam(model.encoder), head_state = init_adam(model.head);

  const auto train_labels = train_set.labels();
  const auto val_labels = val_set.labels();
  const Matrix val_features = feature_matrix(val_set.patients);
  const std::size_t batch = std::min(cfg.batch_size, train_set.size());
  const std::size_t steps_per_epoch = std::max<std::size_t>(1, train_set.size() / batch);

  std::size_t step = 0;
  std::vector<Patient> picked;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double sum_prog = 0.0, sum_rnc = 0.0;
    for (std::size_t s = 0; s < steps_per_epoch; ++s, ++step) {
      const auto idx = sample_batch(train_labels, batch, cfg.sampler, cfg.seed, step);
      picked.clear();
      for (auto i : idx) picked.push_back(train_set.patients[i]);
      AugmentConfig aug = cfg.augment;
      aug.seed = cfg.augment.seed ^ (cfg.seed * 0x9E3779B97F4A7C15ull) ^ (step + 1);
      const ViewBatch views = two_view_augment(picked, aug);

      auto enc = forward(model.encoder, views.features);
      std::optional<LossWithGrad> rnc;
      if (cfg.use_survrnc) rnc = survrnc_loss_with_grad({enc.output, views.labels}, cfg.loss_cfg);
      auto head = forward(model.head, enc.output);
      const LossWithGrad prog = prognosis_loss_with_grad(cfg.head, head.output, views.labels, model.grid, cfg.deephit);

      const double rnc_value = rnc ? rnc->value : 0.0;
      const double total = total_loss(prog.value, rnc_value, cfg.loss_cfg);
      if (!std::isfinite(total)) {
        std::ostringstream msg;
        msg << "step " << step << ": prognosis=" << prog.value << " survrnc=" << rnc_value << " total=" << total;
        throw Error(ErrorCode::NonFiniteLoss, msg.str());
      }
      if (on_step) on_step({step, prog.value, rnc_value, total});

      const Gradients head_grads = backward(model.head, head.tape, prog.grad);
      Matrix d_emb = head_grads.inputs;
      if (rnc)
        for (std::size_t k = 0; k < d_emb.size(); ++k) d_emb.flat()[k] += cfg.loss_cfg.beta * rnc->grad.flat()[k];
      const Gradients enc_grads = backward(model.encoder, enc.tape, d_emb);
      adam_step(model.head, head_grads.params, head_state, adam);
      adam_step(model.encoder, enc_grads.params, enc_state, adam);

      sum_prog += prog.value;
      sum_rnc += rnc_value;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.prognosis = sum_prog / static_cast<double>(steps_per_epoch);
    rec.survrnc = sum_rnc / static_cast<double>(steps_per_epoch);
    rec.total = total_loss(rec.prognosis, rec.survrnc, cfg.loss_cfg);
    try {
      rec.val_ci = concordance_index(predict_risk(model, embed(model, val_features)), val_labels);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoComparablePairs) throw;
    }
    if (rec.val_ci && (!res.history.best_val_ci || *rec.val_ci > *res.history.best_val_ci)) {
      res.history.best_val_ci = rec.val_ci;
      res.history.best_epoch = epoch;
    }
    res.history.epochs.push_back(rec);
  }
  return res;
}

inline void write_embeddings_csv(std::ostream& out, const Model& model, const Dataset& d) {
  const Matrix emb = embed(model, d);
  out << "id,time,event";
  for (std::size_t j = 0; j < emb.cols(); ++j) out << ",v_" << (j + 1);
  out << '\n';
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& p = d.patients[i];
    out << p.id << ',' << format_double(p.time) << ',' << p.event;
    for (double x : emb.row(i)) out << ',' << format_double(x);
    out << '\n';
  }
}

/// Writes id, time, event, v_1..v_d for every patient.
inline void export_embeddings(const Model& model, const Dataset& d, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
  write_embeddings_csv(out, model, d);
  if (!out) throw Error(ErrorCode::Io, "write failed for '" + path + "'");
}

struct SweepRow {
  double lambda = 0.0;
  std::optional<double> ci;  // final-epoch validation CI
};

/// One training run per lambda with the same seed and split.
inline std::vector<SweepRow> lambda_sweep(const Dataset& d, const TrainConfig& cfg, std::span<const double> lambdas) {
  if (lambdas.empty()) throw Error(ErrorCode::InvalidArgument, "lambda sweep needs at least one value");
  std::vector<SweepRow> rows;
  for (double lam : lambdas) {
    TrainConfig c = cfg;
    c.loss_cfg.lambda = lam;
    const TrainResult r = train(d, c);
    rows.push_back({lam, r.history.epochs.back().val_ci});
  }
  return rows;
}

}  // namespace survrnc
