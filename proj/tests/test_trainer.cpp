#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "survrnc/survrnc.hpp"

using namespace survrnc;

namespace {

Dataset synthetic(std::size_t n, double censoring, std::uint64_t seed = 0) {
  SynthConfig cfg;
  cfg.n = n;
  cfg.target_censoring = censoring;
  cfg.seed = seed;
  return generate_synthetic(cfg).dataset;
}

TrainConfig quick(std::size_t epochs = 2) {
  TrainConfig c;
  c.epochs = epochs;
  c.lr = 1e-3;
  c.num_bins = 8;
  c.seed = 3;
  return c;
}

std::vector<double> trace(const std::vector<StepRecord>& steps, double StepRecord::*field) {
  std::vector<double> out;
  for (const auto& s : steps) out.push_back(s.*field);
  return out;
}

}  // namespace

TEST(StratifiedSplit, PreservesEventShareAndPartitions) {
  const Dataset d = synthetic(500, 0.8);
  const auto s = stratified_split(d, 0.2, 1);
  EXPECT_EQ(s.train.size() + s.validation.size(), d.size());
  std::vector<int> seen(d.size(), 0);
  for (auto i : s.train) ++seen[i];
  for (auto i : s.validation) ++seen[i];
  for (int c : seen) EXPECT_EQ(c, 1);
  auto share = [&](const std::vector<std::size_t>& idx) {
    double e = 0.0;
    for (auto i : idx) e += d.patients[i].event;
    return e / static_cast<double>(idx.size());
  };
  EXPECT_NEAR(share(s.validation), share(s.train), 0.01);
  EXPECT_EQ(stratified_split(d, 0.2, 1).validation, s.validation);
}

TEST(Train, SmokeOnTinyDataset) {
  const Dataset d = synthetic(8, 0.3, 2);
  TrainConfig c = quick(1);
  c.batch_size = 32;  // clamped to the training-set size
  const auto r = train(d, c);
  ASSERT_EQ(r.history.epochs.size(), 1u);
  const auto& e = r.history.epochs[0];
  EXPECT_TRUE(std::isfinite(e.prognosis));
  EXPECT_TRUE(std::isfinite(e.survrnc));
  EXPECT_TRUE(std::isfinite(e.total));
}

TEST(Train, BetaZeroMatchesStructurallyRemovedTerm) {
  const Dataset d = synthetic(200, 0.3);
  TrainConfig with = quick(2);
  with.loss_cfg.beta = 0.0;
  TrainConfig without = with;
  without.use_survrnc = false;
  std::vector<StepRecord> a, b;
  const auto ra = train(d, with, [&](const StepRecord& s) { a.push_back(s); });
  const auto rb = train(d, without, [&](const StepRecord& s) { b.push_back(s); });
  EXPECT_EQ(trace(a, &StepRecord::prognosis), trace(b, &StepRecord::prognosis));
  EXPECT_EQ(ra.model, rb.model);
  for (const auto& s : a) EXPECT_GT(s.survrnc, 0.0);
  for (const auto& s : b) EXPECT_EQ(s.survrnc, 0.0);
}

TEST(Train, TotalIsAdditiveAndSurvrncNonNegativeAtEveryStep) {
  const Dataset d = synthetic(200, 0.5);
  TrainConfig c = quick(2);
  c.loss_cfg.beta = 0.7;
  c.head = HeadKind::DeepHit;
  std::vector<StepRecord> steps;
  const auto r = train(d, c, [&](const StepRecord& s) { steps.push_back(s); });
  ASSERT_FALSE(steps.empty());
  for (const auto& s : steps) {
    EXPECT_EQ(s.total, s.prognosis + 0.7 * s.survrnc);
    EXPECT_GE(s.survrnc, 0.0);
  }
  for (const auto& e : r.history.epochs) EXPECT_EQ(e.total, e.prognosis + 0.7 * e.survrnc);
}

TEST(Train, DeterministicGivenSeed) {
  const Dataset d = synthetic(200, 0.3);
  const auto a = train(d, quick(2)), b = train(d, quick(2));
  EXPECT_EQ(a.model, b.model);
  EXPECT_EQ(to_json(a.history).dump(), to_json(b.history).dump());
  TrainConfig other = quick(2);
  other.seed = 4;
  EXPECT_NE(train(d, other).model, a.model);
}

TEST(Train, BestEpochTracksValidationCi) {
  const Dataset d = synthetic(300, 0.3);
  const auto r = train(d, quick(4));
  ASSERT_TRUE(r.history.best_val_ci.has_value());
  double best = -1.0;
  std::size_t at = 0;
  for (const auto& e : r.history.epochs)
    if (e.val_ci && *e.val_ci > best) best = *e.val_ci, at = e.epoch;
  EXPECT_EQ(r.history.best_epoch, at);
  EXPECT_EQ(*r.history.best_val_ci, best);
}

TEST(Train, LambdaIrrelevantWithoutCensoring) {
  const Dataset d = synthetic(200, 0.0);
  const std::vector<double> lambdas{0.3, 0.5, 0.7, 1.0};
  const auto rows = lambda_sweep(d, quick(2), lambdas);
  ASSERT_EQ(rows.size(), 4u);
  for (const auto& r : rows) {
    ASSERT_TRUE(r.ci.has_value());
    EXPECT_EQ(*r.ci, *rows[0].ci);
  }
  for (auto head : {HeadKind::Mtlr, HeadKind::DeepHit}) {
    TrainConfig a = quick(1), b = quick(1);
    a.head = b.head = head;
    a.loss_cfg.lambda = 0.0;
    b.loss_cfg.lambda = 1.0;
    EXPECT_EQ(train(d, a).model, train(d, b).model);
  }
}

TEST(Train, SingleLambdaSweep) {
  const std::vector<double> one{0.5};
  EXPECT_EQ(lambda_sweep(synthetic(100, 0.3), quick(1), one).size(), 1u);
  EXPECT_THROW(lambda_sweep(synthetic(100, 0.3), quick(1), std::vector<double>{}), Error);
}

TEST(Train, RejectsInvalidInput) {
  Dataset d = synthetic(50, 0.3);
  d.patients[3].time = -2.0;
  EXPECT_THROW(train(d, quick(1)), ValidationError);
  TrainConfig bad = quick(1);
  bad.loss_cfg.temperature = 0.0;
  EXPECT_THROW(train(synthetic(50, 0.3), bad), Error);
}

TEST(Evaluate, UntrainedModelIsNearChance) {
  const Dataset d = synthetic(2000, 0.3, 9);
  TrainConfig c = quick(1);
  const auto r = train(d, c);
  Model untrained = r.model;
  MlpSpec enc = untrained.encoder.spec, head = untrained.head.spec;
  untrained.encoder = init_params(enc);
  untrained.head = init_params(head);
  const auto rep = evaluate(untrained, d);
  ASSERT_TRUE(rep.ci.has_value());
  EXPECT_GE(*rep.ci, 0.35);
  EXPECT_LE(*rep.ci, 0.65);
  EXPECT_EQ(evaluate(untrained, d), rep);
}

TEST(Evaluate, ConsistentWithDirectMetricComputation) {
  const Dataset d = synthetic(300, 0.3, 1);
  const auto r = train(d, quick(1));
  const auto rep = evaluate(r.model, d);
  const auto risks = predict_risk(r.model, embed(r.model, d));
  EXPECT_EQ(*rep.ci, concordance_index(risks, d.labels()));
  EXPECT_EQ(*rep.ordinality, embedding_ordinality(embed(r.model, d), d.labels()));
  const auto labels = d.labels();
  EXPECT_EQ(*rep.auc_at.at(0.5), cumulative_dynamic_auc(risks, labels, horizon_from_fraction(d, 0.5)));
}

TEST(ExportEmbeddings, ColumnsRowsAndDeterminism) {
  const Dataset d = synthetic(60, 0.3);
  const auto r = train(d, quick(1));
  std::ostringstream a, b;
  write_embeddings_csv(a, r.model, d);
  write_embeddings_csv(b, r.model, d);
  EXPECT_EQ(a.str(), b.str());
  std::istringstream in(a.str());
  const Dataset back = parse_csv(in);
  EXPECT_EQ(back.size(), d.size());
  EXPECT_EQ(back.num_features(), 32u);
  const Matrix emb = embed(r.model, d);
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(back.patients[i].id, d.patients[i].id);
    for (std::size_t j = 0; j < 32; ++j) EXPECT_EQ(back.patients[i].features[j], emb(i, j));
  }
}

TEST(Checkpoint, JsonRoundTripIsExact) {
  const auto r = train(synthetic(60, 0.3), quick(1));
  const Model back = model_from_json(Json::parse(to_json(r.model).dump(2)));
  EXPECT_EQ(back, r.model);
  Json broken = to_json(r.model);
  broken["version"] = 99;
  EXPECT_THROW(model_from_json(broken), Error);
}

TEST(TrainConfigJson, DefaultsOverridesAndUnknownKeys) {
  Json j = Json::object();
  apply_override(j, "lambda", "0.7");
  apply_override(j, "head", "deephit");
  apply_override(j, "loss_cfg.temperature", "0.5");
  apply_override(j, "epochs", "3");
  const TrainConfig c = train_config_from_json(j);
  EXPECT_EQ(c.loss_cfg.lambda, 0.7);
  EXPECT_EQ(c.loss_cfg.temperature, 0.5);
  EXPECT_EQ(c.head, HeadKind::DeepHit);
  EXPECT_EQ(c.epochs, 3u);
  EXPECT_EQ(c.batch_size, 32u);
  EXPECT_EQ(c.lr, 1e-4);
  EXPECT_EQ(to_json(train_config_from_json(to_json(c))), to_json(c));
  Json bad = Json::object();
  bad["no_such_field"] = 1;
  EXPECT_THROW(train_config_from_json(bad), Error);
}
