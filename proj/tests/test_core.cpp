#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "survrnc/core.hpp"

using namespace survrnc;

namespace {

Dataset three_patients() {
  Dataset d;
  d.feature_names = {"a", "b"};
  d.patients = {{"p1", {0.1, 0.2}, 1, 10.0}, {"p2", {1.0, -1.0}, 0, 20.0}, {"p3", {0.0, 0.0}, 1, 5.0}};
  return d;
}

Dataset with_event_times(std::vector<double> times) {
  Dataset d;
  d.feature_names = {"x"};
  for (std::size_t i = 0; i < times.size(); ++i) d.patients.push_back({"p" + std::to_string(i), {0.0}, 1, times[i]});
  return d;
}

std::vector<ErrorCode> kinds(const ValidationError& e) {
  std::vector<ErrorCode> out;
  for (const auto& v : e.violations()) out.push_back(v.kind);
  return out;
}

}  // namespace

TEST(ValidateDataset, ValidInputIsReturnedUnchanged) {
  const Dataset d = three_patients();
  EXPECT_EQ(validate_dataset(d), d);
  EXPECT_EQ(validate_dataset(validate_dataset(d)), validate_dataset(d));
}

TEST(ValidateDataset, NegativeTimeNamesThePatient) {
  Dataset d = three_patients();
  d.patients[1].time = -1.0;
  try {
    validate_dataset(d);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    ASSERT_EQ(e.violations().size(), 1u);
    EXPECT_EQ(e.violations()[0].kind, ErrorCode::NegativeTime);
    EXPECT_EQ(e.violations()[0].patient_id, "p2");
  }
}

TEST(ValidateDataset, AllCensored) {
  Dataset d = three_patients();
  for (auto& p : d.patients) p.event = 0;
  try {
    validate_dataset(d);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(kinds(e), std::vector<ErrorCode>{ErrorCode::AllCensored});
  }
}

TEST(ValidateDataset, ReportsEveryViolation) {
  Dataset d = three_patients();
  d.patients[0].features[0] = NAN;
  d.patients[1].event = 2;
  d.patients[2].features.push_back(1.0);
  d.patients.push_back(d.patients[0]);
  d.patients.back().features[0] = 0.0;
  try {
    validate_dataset(d);
    FAIL();
  } catch (const ValidationError& e) {
    const auto k = kinds(e);
    for (auto want : {ErrorCode::NonFiniteFeature, ErrorCode::BadEventFlag, ErrorCode::RaggedFeatures,
                      ErrorCode::DuplicateId})
      EXPECT_NE(std::find(k.begin(), k.end(), want), k.end()) << to_string(want);
  }
}

TEST(DiscretizeTime, NearestRankQuantiles) {
  const auto r = discretize_time(with_event_times({10, 20, 30, 40}), 2);
  EXPECT_EQ(std::vector<double>(r.grid.cut_points().begin(), r.grid.cut_points().end()), (std::vector<double>{20, 40}));
  EXPECT_FALSE(r.degenerate);

  std::vector<double> hundred;
  for (int i = 1; i <= 100; ++i) hundred.push_back(i);
  const auto q = discretize_time(with_event_times(hundred), 4);
  EXPECT_EQ(std::vector<double>(q.grid.cut_points().begin(), q.grid.cut_points().end()),
            (std::vector<double>{25, 50, 75, 100}));
}

TEST(DiscretizeTime, CensoredTimesAreIgnored) {
  Dataset d = with_event_times({10, 20, 30, 40});
  d.patients.push_back({"c", {0.0}, 0, 1000.0});
  d.patients.push_back({"c2", {0.0}, 0, 1.0});
  const auto r = discretize_time(d, 2);
  EXPECT_EQ(r.grid.cut_points().back(), 40.0);
}

TEST(DiscretizeTime, DegenerateFallsBackToDistinctTimes) {
  Dataset d = with_event_times({7});
  d.patients.push_back({"c", {0.0}, 0, 3.0});
  const auto r = discretize_time(d, 3);
  EXPECT_TRUE(r.degenerate);
  ASSERT_EQ(r.grid.num_intervals(), 1u);
  EXPECT_EQ(r.grid.cut_points()[0], 7.0);
}

TEST(DiscretizeTime, InvariantToPatientOrder) {
  std::mt19937_64 rng(3);
  std::vector<double> t(60);
  for (auto& x : t) x = std::uniform_int_distribution<int>(1, 40)(rng);
  Dataset d = with_event_times(t);
  const auto before = discretize_time(d, 7).grid;
  std::shuffle(d.patients.begin(), d.patients.end(), rng);
  EXPECT_EQ(discretize_time(d, 7).grid, before);
}

TEST(TimeGrid, BinIndexIsMonotoneAndCoversAllBins) {
  const TimeGrid g({1.0, 2.5, 4.0});
  EXPECT_EQ(g.bin_index(0.0), 0u);
  EXPECT_EQ(g.bin_index(0.99), 0u);
  EXPECT_EQ(g.bin_index(1.0), 1u);  // a cut belongs to the later bin
  EXPECT_EQ(g.bin_index(4.0), 3u);
  EXPECT_EQ(g.bin_index(1e9), 3u);
  std::size_t prev = 0;
  std::vector<bool> seen(g.num_bins(), false);
  for (double t = 0.0; t < 6.0; t += 0.01) {
    const auto b = g.bin_index(t);
    EXPECT_GE(b, prev);
    ASSERT_LE(b, g.num_intervals());
    seen[b] = true;
    prev = b;
  }
  EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](bool s) { return s; }));
}

TEST(TimeGrid, RejectsNonIncreasingCuts) {
  EXPECT_THROW(TimeGrid({2.0, 2.0}), Error);
  EXPECT_THROW(TimeGrid({0.0, 1.0}), Error);
  EXPECT_THROW(TimeGrid(std::vector<double>{}), Error);
}

TEST(LossConfig, Validation) {
  EXPECT_NO_THROW((LossConfig{2.0, 0.5, 1.0}.validate()));
  EXPECT_THROW((LossConfig{0.0, 0.5, 1.0}.validate()), Error);
  EXPECT_THROW((LossConfig{1.0, 1.5, 1.0}.validate()), Error);
  EXPECT_THROW((LossConfig{1.0, 0.5, -1.0}.validate()), Error);
}
