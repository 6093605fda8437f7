#include <gtest/gtest.h>

#include <algorithm>

#include "pomdp_dm/fuzzy_emotion.hpp"

using namespace pdm;

namespace {

const std::array<double, 3> kRowPeak{-1.0, 0.0, 1.0};
const std::array<double, 4> kColPeak{0.125, 0.375, 0.625, 0.875};

std::size_t cell(int row, int col) { return static_cast<std::size_t>(row * 4 + col); }

}  // namespace

TEST(Famm, FilledCellsVerbatim) {
  const FammTable f;
  using S = SentimentClass;
  using M = ControlMode;
  EXPECT_EQ(f.at(S::Negative, M::Strategic), Emotion::Disgust);
  EXPECT_EQ(f.at(S::Negative, M::Tactical), Emotion::Anger);
  EXPECT_EQ(f.at(S::Negative, M::Scrambled), Emotion::Fear);
  EXPECT_EQ(f.at(S::Neutral, M::Strategic), Emotion::Fear);
  EXPECT_EQ(f.at(S::Neutral, M::Tactical), Emotion::Sad);
  EXPECT_EQ(f.at(S::Neutral, M::Opportunistic), Emotion::Surprise);
  EXPECT_EQ(f.at(S::Neutral, M::Scrambled), Emotion::Sad);
  EXPECT_EQ(f.at(S::Positive, M::Strategic), Emotion::Happy);
  EXPECT_EQ(f.at(S::Positive, M::Opportunistic), Emotion::Surprise);
  // blank cells
  EXPECT_EQ(f.at(S::Negative, M::Opportunistic), Emotion::Neutral);
  EXPECT_EQ(f.at(S::Positive, M::Tactical), Emotion::Neutral);
  EXPECT_EQ(f.at(S::Positive, M::Scrambled), Emotion::Neutral);
}

TEST(Fuzzify, PeaksFireSingleCells) {
  auto w = fuzzify(-1.0, 0.125);
  EXPECT_EQ(w[cell(0, 0)], 1.0);
  EXPECT_EQ(std::count_if(w.begin(), w.end(), [](double x) { return x > 0; }), 1);
  w = fuzzify(0.0, 0.875);
  EXPECT_EQ(w[cell(1, 3)], 1.0);
  EXPECT_EQ(std::count_if(w.begin(), w.end(), [](double x) { return x > 0; }), 1);
}

TEST(Fuzzify, HandEvaluatedHalfPositive) {
  const auto w = fuzzify(0.5, 0.375);
  EXPECT_DOUBLE_EQ(w[cell(2, 1)], 0.5);
  EXPECT_EQ(w[cell(1, 1)], 0.0);
  for (int r = 0; r < 3; ++r)
    for (int c : {0, 2, 3}) EXPECT_EQ(w[cell(r, c)], 0.0);
}

TEST(Fuzzify, ShoulderedEdgesAndRange) {
  const auto mu = mode_memberships(0.0);
  EXPECT_EQ(mu[0], 1.0);
  EXPECT_EQ(mode_memberships(1.0)[3], 1.0);
  EXPECT_THROW(fuzzify(1.5, 0.5), OutOfRange);
  EXPECT_THROW(fuzzify(0.0, -0.1), OutOfRange);
}

TEST(Defuzzify, Examples) {
  const FammTable f;
  FuzzyWeights w{};
  w[cell(2, 0)] = 1.0;
  EXPECT_EQ(defuzzify(w, f), 5.0);
  w = {};
  w[cell(0, 3)] = 0.5;  // Fear, centroid 2
  w[cell(1, 2)] = 0.5;  // Surprise, centroid 4
  EXPECT_DOUBLE_EQ(defuzzify(w, f), 3.0);
  w = {};
  w[cell(1, 3)] = 0.3;
  w[cell(1, 1)] = 0.3;
  EXPECT_DOUBLE_EQ(defuzzify(w, f), 3.0);
  EXPECT_THROW(defuzzify(FuzzyWeights{}, f), AllZeroWeights);
}

TEST(CrispEmotion, NearestWithLowerTieBreak) {
  EXPECT_EQ(crisp_emotion(3.0), Emotion::Sad);
  EXPECT_EQ(crisp_emotion(2.2), Emotion::Fear);
  EXPECT_EQ(crisp_emotion(3.25), Emotion::Sad);
  EXPECT_EQ(crisp_emotion(3.75), Emotion::Neutral);
  EXPECT_EQ(crisp_emotion(0.5), Emotion::Disgust);
  EXPECT_EQ(crisp_emotion(5.0), Emotion::Happy);
  EXPECT_THROW(crisp_emotion(5.1), OutOfRange);
  EXPECT_THROW(crisp_emotion(-0.1), OutOfRange);
}

TEST(FuzzyPipeline, PeakInputsRoundTripEveryCell) {
  const FammTable f;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) {
      const auto x = defuzzify(fuzzify(kRowPeak[r], kColPeak[c]), f);
      EXPECT_EQ(crisp_emotion(x), f.cells[cell(r, c)]) << r << ',' << c;
    }
}

TEST(FuzzyProperty, TotalAndConvexOnGrid) {
  const FammTable f;
  for (int i = 0; i <= 100; ++i)
    for (int j = 0; j <= 100; ++j) {
      const double compound = -1.0 + 2.0 * i / 100.0, ratio = j / 100.0;
      const auto w = fuzzify(compound, ratio);
      double lo = 10, hi = -10, total = 0;
      for (std::size_t n = 0; n < kFammCells; ++n) {
        EXPECT_GE(w[n], 0.0);
        total += w[n];
        if (w[n] > 0) {
          lo = std::min(lo, centroid(f.cells[n]));
          hi = std::max(hi, centroid(f.cells[n]));
        }
      }
      ASSERT_GT(total, 0.0) << compound << ' ' << ratio;
      const double x = defuzzify(w, f);
      EXPECT_GE(x, lo - 1e-12);
      EXPECT_LE(x, hi + 1e-12);
      EXPECT_NO_THROW(crisp_emotion(x));
    }
}

TEST(Emotion, NeutralOrPositiveSet) {
  EXPECT_TRUE(is_neutral_or_positive(Emotion::Neutral));
  EXPECT_TRUE(is_neutral_or_positive(Emotion::Surprise));
  EXPECT_TRUE(is_neutral_or_positive(Emotion::Happy));
  EXPECT_FALSE(is_neutral_or_positive(Emotion::Sad));
  EXPECT_FALSE(is_neutral_or_positive(Emotion::Fear));
  EXPECT_EQ(to_string(Emotion::Surprise), "surprise");
}
