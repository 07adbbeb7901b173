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

#include "adlab/es.h"

#include <cmath>

#include <gtest/gtest.h>

#include "adlab/errors.h"
#include "adlab/oracle.h"
#include "test_util.h"

namespace adlab {
namespace {

ParamVector Scalar(double x) {
  auto layout = std::make_shared<ParamLayout>();
  layout->Add("x", 1, 1);
  ParamVector p(std::move(layout));
  p.values[0] = x;
  return p;
}

std::vector<Perturbation> WithFitness(std::vector<Perturbation> ps, auto fitness) {
  for (auto& p : ps) p.fitness = fitness(p);
  return ps;
}

// Independent evaluation of theta + eta / (n sigma) * sum_i R_i eps_i.
Eigen::VectorXd ByHand(const ParamVector& theta, const std::vector<Perturbation>& ps,
                       std::span<const double> r, double eta, double sigma) {
  Eigen::VectorXd out = theta.values;
  const double c = eta / (static_cast<double>(ps.size()) * sigma);
  for (Eigen::Index j = 0; j < out.size(); ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < ps.size(); ++i) acc += r[i] * ps[i].epsilon.values[j];
    out[j] += c * acc;
  }
  return out;
}

TEST(EsConfigTest, Validation) {
  EXPECT_NO_THROW(EsConfig{}.Validate());
  EsConfig c;
  c.population = 1;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = EsConfig{};
  c.sigma = 0.0;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = EsConfig{};
  c.learning_rate = -0.1;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = EsConfig{};
  c.mirrored = true;
  c.population = 7;
  EXPECT_THROW(c.Validate(), ConfigError);
  Rng rng(1);
  EXPECT_THROW(Perturb(Scalar(0), c, rng), ConfigError);
}

TEST(PerturbTest, TinySigmaLeavesThetaInPlace) {
  const Actor actor(NetworkSpec{}, 10);
  Rng rng(2);
  const ParamVector theta = actor.Init(rng);
  EsConfig cfg;
  cfg.sigma = 1e-12;
  for (const auto& p : Perturb(theta, cfg, rng)) {
    EXPECT_LT(p.epsilon.values.cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_EQ(*p.epsilon.layout, *theta.layout);
  }
}

TEST(PerturbTest, NoiseMeanWithinCltBound) {
  EsConfig cfg;
  cfg.population = 10000;
  cfg.sigma = 0.05;
  Rng rng(3);
  const auto ps = Perturb(Scalar(0.0), cfg, rng);
  ASSERT_EQ(ps.size(), 10000u);
  double mean = 0.0, sq = 0.0;
  for (const auto& p : ps) {
    mean += p.epsilon.values[0] / ps.size();
    sq += p.epsilon.values[0] * p.epsilon.values[0] / ps.size();
  }
  EXPECT_LT(std::abs(mean), 5 * cfg.sigma / std::sqrt(10000.0));
  EXPECT_NEAR(std::sqrt(sq), cfg.sigma, 0.05 * cfg.sigma);
}

TEST(PerturbTest, MirroredPairsCancel) {
  const Actor actor(NetworkSpec{}, 4);
  Rng rng(4);
  EsConfig cfg;
  cfg.mirrored = true;
  const auto ps = Perturb(actor.Zeros(), cfg, rng);
  ASSERT_EQ(ps.size(), 20u);
  for (std::size_t i = 0; i < ps.size(); i += 2) {
    EXPECT_EQ((ps[i].epsilon.values + ps[i + 1].epsilon.values).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(PerturbTest, SeededDeterminism) {
  EsConfig cfg;
  Rng a(5), b(5);
  const auto pa = Perturb(Scalar(1.0), cfg, a);
  const auto pb = Perturb(Scalar(1.0), cfg, b);
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(pa[i].epsilon.values, pb[i].epsilon.values);
}

TEST(EsUpdateTest, MatchesFormulaExactly) {
  const Actor actor(NetworkSpec{4, {8}, Activation::kTanh, HeadType::kActor}, 3);
  Rng rng(6);
  const ParamVector theta = actor.Init(rng);
  EsConfig cfg;
  cfg.shaping = FitnessShaping::kNone;
  cfg.learning_rate = 0.03;
  auto ps = Perturb(theta, cfg, rng);
  std::vector<double> r;
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (auto& p : ps) r.push_back(p.fitness = u(rng));
  const ParamVector next = EsUpdate(theta, ps, cfg);
  const Eigen::VectorXd expected = ByHand(theta, ps, r, cfg.learning_rate, cfg.sigma);
  EXPECT_LE((next.values - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(EsUpdateTest, RankShapedMatchesFormulaOnRanks) {
  EsConfig cfg;
  cfg.population = 5;
  cfg.shaping = FitnessShaping::kCenteredRank;
  Rng rng(7);
  auto ps = Perturb(Scalar(0.5), cfg, rng);
  const double raw[5] = {3.0, -1.0, 7.0, 0.5, 2.0};
  const double ranks[5] = {0.25, -0.5, 0.5, -0.25, 0.0};
  for (int i = 0; i < 5; ++i) ps[i].fitness = raw[i];
  const ParamVector next = EsUpdate(Scalar(0.5), ps, cfg);
  EXPECT_NEAR(next.values[0], ByHand(Scalar(0.5), ps, ranks, cfg.learning_rate, cfg.sigma)[0],
              1e-15);
}

TEST(EsUpdateTest, ZeroFitnessKeepsTheta) {
  const Actor actor(NetworkSpec{}, 3);
  Rng rng(8);
  const ParamVector theta = actor.Init(rng);
  EsConfig cfg;
  cfg.shaping = FitnessShaping::kNone;
  const auto ps = Perturb(theta, cfg, rng);
  EXPECT_EQ(EsUpdate(theta, ps, cfg).values, theta.values);
}

TEST(EsUpdateTest, LinearFitnessMovesUphill) {
  EsConfig cfg;
  cfg.shaping = FitnessShaping::kNone;
  Rng rng(9);
  const auto ps = WithFitness(Perturb(Scalar(0.0), cfg, rng),
                              [](const Perturbation& p) { return p.epsilon.values[0]; });
  double sum_sq = 0.0;
  for (const auto& p : ps) sum_sq += p.epsilon.values[0] * p.epsilon.values[0];
  const double step = EsUpdate(Scalar(0.0), ps, cfg).values[0];
  EXPECT_GT(step, 0.0);
  EXPECT_NEAR(step, cfg.learning_rate / (cfg.population * cfg.sigma) * sum_sq, 1e-15);
}

TEST(EsUpdateTest, ConstantShiftBehaviour) {
  EsConfig cfg;
  Rng rng(10);
  const Actor actor(NetworkSpec{2, {3}, Activation::kTanh, HeadType::kActor}, 2);
  const ParamVector theta = actor.Init(rng);
  auto ps = Perturb(theta, cfg, rng);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& p : ps) p.fitness = u(rng);
  auto shifted = ps;
  const double c = 4.5;
  for (auto& p : shifted) p.fitness += c;
  Eigen::VectorXd eps_sum = Eigen::VectorXd::Zero(theta.values.size());
  for (const auto& p : ps) eps_sum += p.epsilon.values;

  cfg.shaping = FitnessShaping::kNone;
  const Eigen::VectorXd delta = EsUpdate(theta, shifted, cfg).values - EsUpdate(theta, ps, cfg).values;
  const Eigen::VectorXd expected = cfg.learning_rate / (cfg.population * cfg.sigma) * c * eps_sum;
  EXPECT_LE((delta - expected).cwiseAbs().maxCoeff(), 1e-12);

  cfg.shaping = FitnessShaping::kCenteredRank;
  EXPECT_EQ(EsUpdate(theta, shifted, cfg).values, EsUpdate(theta, ps, cfg).values);
}

TEST(EsUpdateTest, MirroredSymmetricFitnessGivesZeroStep) {
  const Actor actor(NetworkSpec{2, {3}, Activation::kTanh, HeadType::kActor}, 2);
  Rng rng(11);
  const ParamVector theta = actor.Init(rng);
  EsConfig cfg;
  cfg.mirrored = true;
  cfg.shaping = FitnessShaping::kNone;
  const auto ps = WithFitness(Perturb(theta, cfg, rng), [](const Perturbation& p) {
    return -p.epsilon.values.squaredNorm();
  });
  EXPECT_LE((EsUpdate(theta, ps, cfg).values - theta.values).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(EsUpdateTest, RejectsBadInput) {
  EsConfig cfg;
  Rng rng(12);
  const auto ps = Perturb(Scalar(0.0), cfg, rng);
  const Actor actor(NetworkSpec{}, 2);
  EXPECT_THROW(EsUpdate(actor.Zeros(), ps, cfg), UsageError);
  EXPECT_THROW(EsUpdate(Scalar(0.0), std::span(ps.data(), 1), cfg), InputError);
}

TEST(EsUpdateTest, QuadraticFitnessHalvesDistance) {
  EsConfig cfg;
  cfg.population = 100;
  cfg.sigma = 0.1;
  cfg.learning_rate = 0.05;
  cfg.shaping = FitnessShaping::kNone;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    ParamVector theta = Scalar(0.0);
    int halved_at = -1;
    for (int k = 1; k <= 200 && halved_at < 0; ++k) {
      const double x = theta.values[0];
      const auto ps = WithFitness(Perturb(theta, cfg, rng), [x](const Perturbation& p) {
        const double y = x + p.epsilon.values[0] - 3.0;
        return -y * y;
      });
      theta = EsUpdate(theta, ps, cfg);
      if (std::abs(theta.values[0] - 3.0) <= 1.5) halved_at = k;
    }
    EXPECT_GT(halved_at, 0) << "seed " << seed;
  }
}

TEST(ShapeFitnessTest, CenteredRanks) {
  const std::vector<double> raw = {10.0, -2.0, 10.0, 4.0};
  EXPECT_EQ(ShapeFitness(raw, FitnessShaping::kNone), raw);
  const std::vector<double> ranks = ShapeFitness(raw, FitnessShaping::kCenteredRank);
  const double third = 1.0 / 3.0;
  EXPECT_DOUBLE_EQ(ranks[1], -0.5);
  EXPECT_DOUBLE_EQ(ranks[3], third - 0.5);
  EXPECT_DOUBLE_EQ(ranks[0], 2 * third - 0.5);
  EXPECT_DOUBLE_EQ(ranks[2], 0.5);
}

TEST(FitnessMessageTest, CarriesOnlyAScalar) {
  static_assert(sizeof(FitnessMessage) == sizeof(std::size_t) + sizeof(double));
  static_assert(std::is_trivially_copyable_v<FitnessMessage>);
  SUCCEED();
}

class DefaultMarketEs : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { market_ = new Market(GenerateMarket(MarketConfig{})); }
  static void TearDownTestSuite() { delete market_; }
  static inline Market* market_ = nullptr;
  const Actor actor_{NetworkSpec{}, 10};
  const SessionConfig session_{};
  const RewardConfig reward_{};
};

TEST_F(DefaultMarketEs, IdenticalCandidatesScoreIdentically) {
  Rng rng(13);
  const ParamVector theta = actor_.Init(rng);
  EsConfig cfg;
  auto ps = Perturb(theta, cfg, rng);
  ps[1] = ps[0];
  const auto a = EvaluatePopulation(*market_, actor_, theta, ps, cfg, session_, reward_, 99);
  const auto b = EvaluatePopulation(*market_, actor_, theta, ps, cfg, session_, reward_, 99);
  ASSERT_EQ(a.size(), ps.size());
  EXPECT_EQ(a[0].reward, a[1].reward);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].candidate, i);
    EXPECT_EQ(a[i].reward, b[i].reward);
    EXPECT_TRUE(std::isfinite(a[i].reward));
    EXPECT_GE(a[i].reward, 0.0);
  }
  cfg.single_thread = true;
  const auto c = EvaluatePopulation(*market_, actor_, theta, ps, cfg, session_, reward_, 99);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].reward, c[i].reward);
}

TEST_F(DefaultMarketEs, OracleCandidateBeatsRandomCandidates) {
  GridSpec grid;
  const GridResult g = GridSearch(*market_, grid, session_, reward_);
  // Zero weights with the output bias set so the squash lands on the optimum.
  ParamVector oracle = actor_.Zeros();
  const ActionBox box;
  const auto best = g.best.ToArray();
  auto bias = oracle.Block(oracle.layout->entries().size() - 1);
  for (int d = 0; d < kNumRankingParams; ++d) {
    const double u = 2.0 * (best[d] - box.lower[d]) / box.Width(d) - 1.0;
    bias(d, 0) = std::atanh(std::clamp(u, -1.0 + 1e-15, 1.0 - 1e-15));
  }
  for (int q = 0; q < 10; ++q) {
    const auto a = actor_.Act(oracle, {q, 0}).ToArray();
    for (int d = 0; d < kNumRankingParams; ++d) ASSERT_NEAR(a[d], best[d], 1e-9);
  }
  EsConfig cfg;
  Rng rng(14);
  int wins = 0;
  for (int trial = 0; trial < 20; ++trial) {
    ParamVector random = actor_.Zeros();
    std::normal_distribution<double> n(0.0, 1.0);
    for (double& v : random.values) v = n(rng);
    const std::vector<Perturbation> ps = {{oracle.ZerosLike(), 0.0},
                                          {oracle.ZerosLike(), 0.0}};
    const auto o = EvaluatePopulation(*market_, actor_, oracle, std::span(ps.data(), 1), cfg,
                                      session_, reward_, 1000 + trial);
    const auto r = EvaluatePopulation(*market_, actor_, random, std::span(ps.data(), 1), cfg,
                                      session_, reward_, 1000 + trial);
    if (o[0].reward >= r[0].reward) ++wins;
  }
  EXPECT_GT(wins, 10);
}

TEST_F(DefaultMarketEs, ZeroLearningRateIsFlat) {
  Rng rng(15);
  const ParamVector theta = actor_.Init(rng);
  EsConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.iterations = 3;
  cfg.episodes_per_fitness = 5;
  const EsResult r = EsRun(*market_, actor_, theta, cfg, session_, reward_);
  ASSERT_EQ(r.trajectory.size(), 4u);
  EXPECT_EQ(r.theta.values, theta.values);
  for (const auto& row : r.trajectory) EXPECT_EQ(row.fitness, r.trajectory[0].fitness);
}

TEST_F(DefaultMarketEs, FinalFitnessAtLeastInitialOnFiveSeeds) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(MakeRng(seed, "es-test-init"));
    const ParamVector theta = actor_.Init(rng);
    EsConfig cfg;
    cfg.seed = seed;
    const EsResult r = EsRun(*market_, actor_, theta, cfg, session_, reward_);
    ASSERT_EQ(r.trajectory.size(), 101u);
    EXPECT_GE(r.trajectory.back().fitness, r.trajectory.front().fitness) << "seed " << seed;
    for (int k = 0; k <= 100; ++k) EXPECT_EQ(r.trajectory[k].iteration, k);
  }
}

TEST_F(DefaultMarketEs, RunIsDeterministic) {
  Rng rng(16);
  const ParamVector theta = actor_.Init(rng);
  EsConfig cfg;
  cfg.iterations = 4;
  cfg.episodes_per_fitness = 5;
  const EsResult a = EsRun(*market_, actor_, theta, cfg, session_, reward_);
  cfg.single_thread = true;
  const EsResult b = EsRun(*market_, actor_, theta, cfg, session_, reward_);
  EXPECT_EQ(a.theta.values, b.theta.values);
}

TEST(EsTrajectoryCsvTest, RoundTrip) {
  testing::TempDir dir("es");
  const std::vector<EsLogRow> rows = {{0, 5.5, 0.1, 0.75, 13.25}, {1, 5.625, 0.125, 0.5, 14.0}};
  WriteEsTrajectoryCsv(dir.File("t.csv"), rows);
  const auto back = ReadEsTrajectoryCsv(dir.File("t.csv"));
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back[i].iteration, rows[i].iteration);
    EXPECT_EQ(back[i].fitness, rows[i].fitness);
    EXPECT_EQ(back[i].ctr, rows[i].ctr);
    EXPECT_EQ(back[i].ppc, rows[i].ppc);
    EXPECT_EQ(back[i].rpm, rows[i].rpm);
  }
  EXPECT_THROW(ReadEsTrajectoryCsv(dir.File("missing.csv")), MissingArtifactError);
}

}  // namespace
}  // namespace adlab
