// Copyright 2026 The adlab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "adlab/simulator.h"

#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "adlab/errors.h"
#include "oracles.h"
#include "test_util.h"

namespace adlab {
namespace {

using testing::Ad;

std::vector<RankedSlot> OneSlot(double true_ctr, double true_cvr) {
  AdCandidate c = Ad(0, true_ctr, true_cvr, 2.0, 10.0);
  return {RankedSlot{c, 0, 1.0, 0.7}};
}

TEST(SimulateUserTest, NearCertainClick) {
  const double p = 1.0 - 1e-4;
  const auto slots = OneSlot(p, 0.5);
  const std::vector<double> bias = {1.0};
  Rng rng(2);
  long clicks = 0;
  const long n = 10000;
  for (long i = 0; i < n; ++i) clicks += SimulateUser(slots, bias, rng).totals.clicks;
  EXPECT_TRUE(oracle::WithinBinomial(clicks, n, p)) << clicks;
}

TEST(SimulateUserTest, ClampMinimumRateClicksRarely) {
  const double p = 1e-4;
  const auto slots = OneSlot(p, 0.5);
  const std::vector<double> bias = {1.0};
  Rng rng(3);
  long clicks = 0;
  const long n = 200000;
  for (long i = 0; i < n; ++i) clicks += SimulateUser(slots, bias, rng).totals.clicks;
  EXPECT_TRUE(oracle::WithinBinomial(clicks, n, p)) << clicks;
}

TEST(SimulateUserTest, NoClickMeansNoRevenueOrConversion) {
  const auto slots = OneSlot(0.05, 0.9);
  const std::vector<double> bias = {1.0};
  Rng rng(4);
  int quiet = 0;
  for (int i = 0; i < 2000; ++i) {
    const PageFeedback f = SimulateUser(slots, bias, rng);
    if (f.totals.clicks == 0) {
      ++quiet;
      EXPECT_EQ(f.totals.revenue, 0.0);
      EXPECT_EQ(f.totals.conversions, 0);
      EXPECT_EQ(f.totals.gmv, 0.0);
      EXPECT_FALSE(f.slots[0].converted);
    }
  }
  EXPECT_GT(quiet, 0);
}

TEST(SimulateUserTest, RevenueIsSumOfPaidPrices) {
  const Market m = GenerateMarket(MarketConfig{});
  const auto slots = RunAuction(RankingParams{}, m.candidates(0), 5, 0.05);
  Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    const PageFeedback f = SimulateUser(slots, m.position_bias(), rng);
    double revenue = 0.0, gmv = 0.0;
    long clicks = 0, conversions = 0;
    for (std::size_t s = 0; s < slots.size(); ++s) {
      if (f.slots[s].clicked) {
        revenue += slots[s].click_price;
        ++clicks;
      }
      if (f.slots[s].converted) {
        EXPECT_TRUE(f.slots[s].clicked);
        gmv += slots[s].candidate.price;
        ++conversions;
      }
    }
    EXPECT_EQ(f.totals.revenue, revenue);
    EXPECT_EQ(f.totals.gmv, gmv);
    EXPECT_EQ(f.totals.clicks, clicks);
    EXPECT_EQ(f.totals.conversions, conversions);
    EXPECT_EQ(f.totals.impressions, 5);
  }
}

class SessionTest : public ::testing::Test {
 protected:
  Market market_ = GenerateMarket(MarketConfig{});
  SessionConfig cfg_;
  RewardConfig reward_;
};

TEST_F(SessionTest, LengthOneIsSingleTerminalTransition) {
  cfg_.session_len = 1;
  SessionRng rng(1);
  const Episode ep =
      SimulateSession(market_, ConstantPolicy(RankingParams{}), cfg_, reward_, rng);
  ASSERT_EQ(ep.transitions.size(), 1u);
  EXPECT_TRUE(ep.transitions[0].terminal());
}

TEST_F(SessionTest, LastTransitionTerminalAndChained) {
  SessionRng rng(2);
  const Episode ep =
      SimulateSession(market_, ConstantPolicy(RankingParams{}), cfg_, reward_, rng);
  ASSERT_EQ(ep.transitions.size(), 5u);
  for (int t = 0; t < 5; ++t) {
    EXPECT_EQ(ep.transitions[t].state.session_pos, t);
    EXPECT_EQ(ep.transitions[t].terminal(), t == 4);
    if (t < 4) {
      EXPECT_EQ(*ep.transitions[t].next_state, ep.transitions[t + 1].state);
    }
  }
}

TEST_F(SessionTest, DeterministicUnderSeed) {
  const Policy p = ConstantPolicy({1.2, 0.4, 0.8, 0.3, 1.5});
  SessionRng a(3), b(3);
  const Episode x = SimulateSession(market_, p, cfg_, reward_, a);
  const Episode y = SimulateSession(market_, p, cfg_, reward_, b);
  EXPECT_EQ(x.transitions, y.transitions);
  EXPECT_EQ(x.feedback.clicks, y.feedback.clicks);
  EXPECT_EQ(x.feedback.revenue, y.feedback.revenue);
  EXPECT_EQ(x.total_reward, y.total_reward);
}

TEST_F(SessionTest, RewardsSumToEpisodeReward) {
  SessionRng rng(4);
  const Episode ep =
      SimulateSession(market_, UniformRandomPolicy(ActionBox{}, 9), cfg_, reward_, rng);
  double sum = 0.0;
  for (const auto& t : ep.transitions) sum += t.reward;
  EXPECT_EQ(sum, ep.total_reward);
}

TEST_F(SessionTest, OutOfBoxActionThrows) {
  SessionRng rng(5);
  EXPECT_THROW(SimulateSession(market_, ConstantPolicy({1, 0, 1, 0, 0.2}), cfg_, reward_, rng),
               ActionBoundsError);
}

TEST_F(SessionTest, TransitionRewardRecomputesFromSlots) {
  std::vector<double> page_rewards;
  const PageObserver obs = [&](const SearchContext&, std::span<const RankedSlot> slots,
                               const PageFeedback&) {
    page_rewards.push_back(PageReward(slots, market_.position_bias(), reward_));
  };
  SessionRng rng(6);
  const Episode ep =
      SimulateSession(market_, UniformRandomPolicy(ActionBox{}, 1), cfg_, reward_, rng, &obs);
  ASSERT_EQ(page_rewards.size(), ep.transitions.size());
  for (std::size_t t = 0; t < page_rewards.size(); ++t) {
    EXPECT_EQ(ep.transitions[t].reward, page_rewards[t]);
  }
}

TEST_F(SessionTest, PositionCtrMatchesBiasTimesTrueCtr) {
  const int k = market_.positions_k();
  std::vector<long> clicks(k, 0);
  std::vector<double> expected(k, 0.0), var(k, 0.0);
  const PageObserver obs = [&](const SearchContext&, std::span<const RankedSlot> slots,
                               const PageFeedback& f) {
    for (int p = 0; p < k; ++p) {
      const double q = market_.position_bias()[p] * slots[p].candidate.true_ctr;
      expected[p] += q;
      var[p] += q * (1.0 - q);
      clicks[p] += f.slots[p].clicked;
    }
  };
  const Policy policy = UniformRandomPolicy(ActionBox{}, 2);
  for (int i = 0; i < 4000; ++i) {
    SessionRng rng(DeriveSeed(77, "s", i));
    SimulateSession(market_, policy, cfg_, reward_, rng, &obs);
  }
  for (int p = 0; p < k; ++p) {
    EXPECT_LE(std::abs(clicks[p] - expected[p]), 5.0 * std::sqrt(var[p])) << "position " << p;
  }
}

TEST_F(SessionTest, SharedSeedSharesContextsAcrossPolicies) {
  std::vector<int> qa, qb;
  const PageObserver oa = [&](const SearchContext& c, auto, const auto&) {
    qa.push_back(c.query_id);
  };
  const PageObserver ob = [&](const SearchContext& c, auto, const auto&) {
    qb.push_back(c.query_id);
  };
  SessionRng ra(8), rb(8);
  SimulateSession(market_, ConstantPolicy({2, 2, 2, 2, 2}), cfg_, reward_, ra, &oa);
  SimulateSession(market_, ConstantPolicy({0.5, 0, 0.5, 0, 0.5}), cfg_, reward_, rb, &ob);
  EXPECT_EQ(qa, qb);
}

TEST_F(SessionTest, DatasetHasRequestedSize) {
  Rng rng(1);
  const auto data =
      GenerateDataset(market_, UniformRandomPolicy(ActionBox{}, 3), 1000, cfg_, reward_, rng);
  EXPECT_EQ(data.size(), 1000u);
  Rng rng2(1);
  const auto odd =
      GenerateDataset(market_, UniformRandomPolicy(ActionBox{}, 3), 1003, cfg_, reward_, rng2);
  EXPECT_EQ(odd.size(), 1003u);
  EXPECT_TRUE(std::equal(data.begin(), data.end(), odd.begin()));
}

TEST_F(SessionTest, DatasetActionMarginalsAreUniform) {
  Rng rng(2);
  const ActionBox box;
  const auto data =
      GenerateDataset(market_, UniformRandomPolicy(box, 4), 10000, cfg_, reward_, rng);
  for (int d = 0; d < kNumRankingParams; ++d) {
    std::vector<double> xs;
    for (const auto& t : data) xs.push_back(t.action.ToArray()[d]);
    EXPECT_LT(oracle::KsUniform(xs, box.lower[d], box.upper[d]),
              oracle::KsCritical(xs.size()))
        << "dimension " << d;
  }
}

TEST_F(SessionTest, DatasetReproducible) {
  Rng a(3), b(3);
  EXPECT_EQ(
      GenerateDataset(market_, UniformRandomPolicy(ActionBox{}, 5), 500, cfg_, reward_, a),
      GenerateDataset(market_, UniformRandomPolicy(ActionBox{}, 5), 500, cfg_, reward_, b));
}

TEST_F(SessionTest, EvaluationDeterministic) {
  const Policy p = ConstantPolicy({1.0, 0.5, 1.0, 0.5, 1.0});
  const Evaluation a = EvaluatePolicy(market_, p, cfg_, reward_);
  const Evaluation b = EvaluatePolicy(market_, p, cfg_, reward_);
  EXPECT_EQ(a.mean_reward, b.mean_reward);
  EXPECT_EQ(a.metrics.revenue, b.metrics.revenue);
  EXPECT_EQ(a.episodes, cfg_.episodes_per_eval);
  EXPECT_EQ(a.metrics.impressions, cfg_.episodes_per_eval * cfg_.session_len * 5L);
}

TEST_F(SessionTest, GmvTermRaisesGmv) {
  const Evaluation plain = EvaluatePolicy(market_, ConstantPolicy({1, 0, 1, 0, 1}), cfg_, reward_);
  const Evaluation gmv = EvaluatePolicy(market_, ConstantPolicy({1, 0, 1, 2, 1}), cfg_, reward_);
  EXPECT_GT(gmv.metrics.gmv, plain.metrics.gmv);
}

TEST_F(SessionTest, DoublingEpisodesShrinksStderrBySqrtTwo) {
  const Policy p = UniformRandomPolicy(ActionBox{}, 6);
  double small = 0.0, large = 0.0;
  for (int r = 0; r < 20; ++r) {
    SessionConfig a = cfg_;
    a.seed = DeriveSeed(99, "repeat", r);
    a.episodes_per_eval = 100;
    SessionConfig b = a;
    b.episodes_per_eval = 200;
    small += EvaluatePolicy(market_, p, a, reward_).reward_stderr;
    large += EvaluatePolicy(market_, p, b, reward_).reward_stderr;
  }
  const double ratio = large / small;
  EXPECT_NEAR(ratio, 1.0 / std::sqrt(2.0), 0.3 / std::sqrt(2.0));
}

TEST_F(SessionTest, TransitionsCsvRoundTrip) {
  testing::TempDir dir("transitions");
  Rng rng(7);
  const auto data =
      GenerateDataset(market_, UniformRandomPolicy(ActionBox{}, 7), 23, cfg_, reward_, rng);
  WriteTransitionsCsv(dir.File("t.csv"), data);
  EXPECT_EQ(ReadTransitionsCsv(dir.File("t.csv")), data);

  std::ostringstream os;
  WriteTransitionsCsv(os, std::span(data).first(1));
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')),
            "query_id,a1,a2,a3,a4,a5,r,next_query_id,terminal");
}

TEST_F(SessionTest, MissingTransitionsFileIsMissingArtifact) {
  EXPECT_THROW(ReadTransitionsCsv("/nonexistent/t.csv"), MissingArtifactError);
}

}  // namespace
}  // namespace adlab
