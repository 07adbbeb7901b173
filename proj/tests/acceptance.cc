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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "adlab/auction.h"
#include "adlab/calibration.h"
#include "adlab/cli.h"
#include "adlab/ddpg.h"
#include "adlab/es.h"
#include "adlab/market.h"
#include "adlab/neural.h"
#include "adlab/oracle.h"
#include "adlab/rng.h"
#include "adlab/simulator.h"
#include "oracles.h"

namespace adlab {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

constexpr int kSeeds = 5;

// Default market, its oracle and the per-seed datasets and trained actors,
// built on first use and shared by criteria 4 to 7.
class Shared {
 public:
  const Market& market() {
    if (!market_) market_ = GenerateMarket(MarketConfig{});
    return *market_;
  }
  double oracle() {
    if (!oracle_) {
      GridSpec grid;
      const GridResult g = GridSearch(market(), grid, session_, reward_);
      oracle_ = EvaluatePolicy(market(), ConstantPolicy(g.best), session_, reward_).mean_reward;
    }
    return *oracle_;
  }
  const std::vector<Transition>& dataset(int seed) {
    auto& d = datasets_[seed - 1];
    if (d.empty()) {
      Rng rng = MakeRng(seed, "dataset");
      d = GenerateDataset(market(),
                          UniformRandomPolicy(ActionBox{}, DeriveSeed(seed, "behavior")),
                          100000, session_, reward_, rng);
    }
    return d;
  }
  DdpgConfig TrainConfig(int seed, double fraction, long eval_interval) {
    DdpgConfig cfg;
    cfg.single_thread = true;
    cfg.seed = DeriveSeed(seed, "ddpg");
    cfg.total_steps = 100000;
    cfg.eval_interval = eval_interval;
    cfg.stop_reward = fraction * oracle();
    return cfg;
  }
  // The criterion-4 run of one seed.
  const TrainResult& trained(int seed) {
    auto& t = trained_[seed - 1];
    if (!t) t = Train(market(), dataset(seed), TrainConfig(seed, 0.90, 50), session_, reward_);
    return *t;
  }

  const SessionConfig session_{};
  const RewardConfig reward_{};

 private:
  std::optional<Market> market_;
  std::optional<double> oracle_;
  std::vector<Transition> datasets_[kSeeds];
  std::optional<TrainResult> trained_[kSeeds];
};

Outcome GspSubstitution() {
  Rng rng(2026);
  const std::vector<double> bias = {1.0, 0.7, 0.5, 0.35, 0.25};
  long checked = 0, violations = 0, over_bid = 0, prices = 0;
  double worst = 0.0;
  for (int auction = 0; auction < 10000; ++auction) {
    MarketConfig mc;
    mc.num_queries = 1;
    mc.ads_per_query = 2 + static_cast<int>(rng() % 19);
    mc.positions_k = 1 + static_cast<int>(rng() % std::min(5, mc.ads_per_query));
    mc.position_bias.assign(bias.begin(), bias.begin() + mc.positions_k);
    mc.reserve_price = std::uniform_real_distribution<double>(0.0, 0.3)(rng);
    mc.seed = rng();
    const Market market = GenerateMarket(mc);
    const auto ads = market.candidates(0);
    const RankingParams p = [&] {
      std::array<double, kNumRankingParams> v;
      const ActionBox box;
      for (int d = 0; d < kNumRankingParams; ++d) {
        v[d] = std::uniform_real_distribution<double>(box.lower[d], box.upper[d])(rng);
      }
      return RankingParams::FromArray(v);
    }();
    const double a[5] = {p.a1, p.a2, p.a3, p.a4, p.a5};
    const auto slots = RunAuction(p, ads, mc.positions_k, mc.reserve_price);
    const auto ranked = Rank(p, ads, mc.positions_k + 1);
    for (std::size_t i = 0; i < slots.size(); ++i) {
      const AdCandidate& c = slots[i].candidate;
      ++prices;
      if (slots[i].click_price > c.bid) ++over_bid;
      if (i + 1 >= ranked.size()) continue;
      const double next = ranked[i + 1].score;
      const double raw = UnclampedClickPrice(p, slots[i], next);
      if (raw < mc.reserve_price || raw > c.bid) continue;
      const double rescored =
          oracle::Score(a, c.pred_ctr, c.pred_cvr, slots[i].click_price, c.price);
      const double err = oracle::RelErr(rescored, next);
      worst = std::max(worst, err);
      if (err > 1e-9) ++violations;
      ++checked;
    }
  }
  return {violations == 0 && over_bid == 0 && checked > 0,
          Fmt("%ld interior prices, worst rel err %.2e, %ld of %ld prices above bid", checked,
              worst, over_bid, prices)};
}

// Gradient of sum_s Q(s, pi(s)) w.r.t. the actor through both networks.
double ComposedGradientError(std::uint64_t seed) {
  DdpgConfig cfg;
  cfg.actor_spec = NetworkSpec{2, {3}, Activation::kTanh, HeadType::kActor};
  cfg.critic_spec = NetworkSpec{2, {3}, Activation::kTanh, HeadType::kCriticDueling};
  cfg.seed = seed;
  const DdpgNets nets(cfg, 3);
  const ServerSnapshot snap = InitialSnapshot(nets, cfg);
  Rng rng(seed);
  std::vector<Transition> ts;
  for (int i = 0; i < 6; ++i) {
    Transition t;
    t.state = SearchContext{i % 3, 0};
    t.reward = 1.0;
    ts.push_back(t);
  }
  const TransitionBatch batch = TransitionBatch::From(ts);
  const GradientMessage msg = WorkerStep(nets, snap, batch, 0.9);
  const auto objective = [&](const ParamVector& actor) {
    const Eigen::MatrixXd pi = nets.actor.Forward(actor, batch.queries, nullptr);
    return nets.critic.Forward(snap.critic, batch.queries, pi, nullptr).sum();
  };
  double worst = 0.0;
  const double h = 1e-5;
  for (Eigen::Index i = 0; i < snap.actor.values.size(); ++i) {
    ParamVector plus = snap.actor, minus = snap.actor;
    plus.values[i] += h;
    minus.values[i] -= h;
    const double fd = (objective(plus) - objective(minus)) / (2 * h);
    worst = std::max(worst, RelativeError(msg.actor_grad.values[i], fd));
  }
  return worst;
}

Outcome GradientSuite() {
  const NetworkSpec tiny{2, {3}, Activation::kTanh, HeadType::kActor};
  double actor = 0.0, plain = 0.0, dueling = 0.0, composed = 0.0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const GradCheckReport r = GradCheck(tiny, 1e-4, seed);
    actor = std::max(actor, r.MaxFor("actor"));
    plain = std::max(plain, r.MaxFor("critic_plain"));
    dueling = std::max(dueling, r.MaxFor("critic_dueling"));
    composed = std::max(composed, ComposedGradientError(seed));
  }
  const bool pass = actor < 1e-4 && plain < 1e-4 && dueling < 1e-4 && composed < 1e-3;
  return {pass, Fmt("max rel err actor %.1e, plain %.1e, dueling %.1e, composed %.1e", actor,
                    plain, dueling, composed)};
}

Outcome PavOptimality() {
  Rng rng(7);
  double worst = 0.0;
  for (int inst = 0; inst < 200; ++inst) {
    const int n = 1 + static_cast<int>(rng() % 8);
    std::vector<oracle::Point> pts;
    std::vector<CalibrationPoint> cps;
    std::uniform_real_distribution<double> u(0.0, 1.0), w(0.1, 3.0);
    for (int i = 0; i < n; ++i) {
      // Distinct predicted values so partitions are contiguous in sorted order.
      const double x = (i + u(rng)) / n;
      const double y = u(rng), wt = w(rng);
      pts.push_back({x, y, wt});
      cps.push_back({x, y, wt});
    }
    std::shuffle(cps.begin(), cps.end(), rng);
    const CalibrationMap map = FitIsotonic(cps);
    double objective = 0.0;
    for (const auto& p : pts) {
      const double f = Apply(map, p.x, false);
      objective += p.w * (f - p.y) * (f - p.y);
    }
    const double best = oracle::IsotonicObjective(pts);
    worst = std::max(worst, std::abs(objective - best));
  }
  return {worst <= 1e-12, Fmt("200 instances, worst objective gap %.1e", worst)};
}

Outcome DdpgVsOracle(Shared& s) {
  int passed = 0;
  std::string per_seed;
  long max_steps = 0;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    const TrainResult& r = s.trained(seed);
    const auto hit = r.StepsToReward(0.90 * s.oracle());
    double best = 0.0;
    for (const auto& row : r.log) best = std::max(best, row.reward);
    if (hit && *hit <= 100000) ++passed;
    max_steps = std::max(max_steps, r.steps);
    per_seed += Fmt(" %.3f", best / s.oracle());
  }
  return {passed >= 4, Fmt("%d/5 seeds >= 0.90 x oracle %.4f; best ratios%s; max steps %ld",
                           passed, s.oracle(), per_seed.c_str(), max_steps)};
}

Outcome DuelingVsPlain(Shared& s) {
  std::vector<double> steps[2];
  std::string detail;
  const HeadType heads[2] = {HeadType::kCriticDueling, HeadType::kCriticPlain};
  for (int seed = 1; seed <= kSeeds; ++seed) {
    for (int h = 0; h < 2; ++h) {
      DdpgConfig cfg = s.TrainConfig(seed, 0.85, 25);
      cfg.total_steps = 20000;
      cfg.critic_spec.head = heads[h];
      const TrainResult r = Train(s.market(), s.dataset(seed), cfg, s.session_, s.reward_);
      const auto hit = r.StepsToReward(0.85 * s.oracle());
      // Runs that never reach the threshold rank after every run that does.
      steps[h].push_back(hit ? static_cast<double>(*hit) : 1e18);
    }
  }
  const auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  const auto list = [](const std::vector<double>& v) {
    std::string out;
    for (double x : v) out += x >= 1e18 ? " never" : Fmt(" %.0f", x);
    return out;
  };
  const double md = median(steps[0]), mp = median(steps[1]);
  return {md <= mp, Fmt("median steps to 0.85 x oracle: dueling %.0f [%s ] vs plain %.0f [%s ]",
                        md, list(steps[0]).c_str(), mp, list(steps[1]).c_str())};
}

Outcome BatchVariance(Shared& s) {
  const TrainResult& trained = s.trained(1);
  DdpgConfig cfg;
  const DdpgNets nets(cfg, s.market().num_queries());
  ServerSnapshot frozen;
  frozen.actor = frozen.actor_target = trained.actor;
  frozen.critic = frozen.critic_target = trained.critic;
  ReplayBuffer buffer(s.dataset(1).size());
  buffer.AddAll(s.dataset(1));
  std::vector<double> variances;
  std::string detail;
  for (int b : {32, 256, 1024}) {
    Rng rng = MakeRng(1, "loss-resample", b);
    double sum = 0.0, sq = 0.0;
    const int resamples = 200;
    for (int i = 0; i < resamples; ++i) {
      const double loss =
          CriticLoss(nets, frozen, TransitionBatch::From(*buffer.Sample(b, rng)), cfg.gamma);
      sum += loss;
      sq += loss * loss;
    }
    const double mean = sum / resamples;
    variances.push_back((sq - resamples * mean * mean) / (resamples - 1));
    detail += Fmt(" b=%d %.3e", b, variances.back());
  }
  const bool pass = variances[0] > variances[1] && variances[1] > variances[2];
  return {pass, "loss variance" + detail};
}

Outcome EsRecovery(Shared& s) {
  int passed = 0;
  std::string detail;
  const Actor actor(DdpgConfig{}.actor_spec, s.market().num_queries());
  for (int seed = 1; seed <= kSeeds; ++seed) {
    const ParamVector& reference = s.trained(seed).actor;
    ParamVector degraded = reference;
    Rng rng = MakeRng(seed, "degrade");
    std::normal_distribution<double> noise(0.0, 0.2);
    for (double& v : degraded.values) v += noise(rng);
    const double ref =
        EvaluatePolicy(s.market(), actor.AsPolicy(reference), s.session_, s.reward_).mean_reward;
    EsConfig cfg;
    cfg.seed = DeriveSeed(seed, "es");
    const EsResult r = EsRun(s.market(), actor, degraded, cfg, s.session_, s.reward_);
    const double start = r.trajectory.front().fitness;
    const double gap = ref - start;
    const double recovered = (r.trajectory.back().fitness - start) / gap;
    const bool ok = gap > 0.0 && recovered >= 0.5;
    if (ok) ++passed;
    detail += Fmt(" %d:gap=%.3f,rec=%.2f", seed, gap, recovered);
  }
  return {passed >= 4, Fmt("%d/5 seeds recover >= 50%% of the gap;%s", passed, detail.c_str())};
}

Outcome EsExactness() {
  Rng rng(99);
  double formula = 0.0, mirrored = 0.0;
  const Actor actor(NetworkSpec{}, 10);
  for (int trial = 0; trial < 20; ++trial) {
    const ParamVector theta = actor.Init(rng);
    EsConfig cfg;
    cfg.population = 2 + static_cast<int>(rng() % 30);
    cfg.sigma = std::uniform_real_distribution<double>(0.01, 0.5)(rng);
    cfg.learning_rate = std::uniform_real_distribution<double>(0.001, 0.1)(rng);
    cfg.shaping = FitnessShaping::kNone;
    auto ps = Perturb(theta, cfg, rng);
    std::normal_distribution<double> r(5.0, 3.0);
    for (auto& p : ps) p.fitness = r(rng);
    const ParamVector next = EsUpdate(theta, ps, cfg);
    const double c = cfg.learning_rate / (ps.size() * cfg.sigma);
    for (Eigen::Index j = 0; j < theta.values.size(); ++j) {
      double acc = 0.0;
      for (const auto& p : ps) acc += p.fitness * p.epsilon.values[j];
      formula = std::max(formula, std::abs(next.values[j] - (theta.values[j] + c * acc)));
    }

    cfg.mirrored = true;
    cfg.population += cfg.population % 2;
    auto pairs = Perturb(theta, cfg, rng);
    for (auto& p : pairs) p.fitness = std::cos(p.epsilon.values.norm());
    mirrored = std::max(mirrored,
                        (EsUpdate(theta, pairs, cfg).values - theta.values).cwiseAbs().maxCoeff());
  }
  return {formula <= 1e-12 && mirrored <= 1e-12,
          Fmt("max |update - formula| %.1e, max mirrored step %.1e", formula, mirrored)};
}

Outcome CalibrationBenefit() {
  MarketConfig mc;
  mc.prediction_distortion_exponent = 0.8;
  const Market market = GenerateMarket(mc);
  const ClickLog fit = CollectClickLog(market, 10000, DeriveSeed(1, "calibration"));
  const ClickLog held = CollectClickLog(market, 10000, DeriveSeed(2, "calibration"));
  const CalibrationMap map = FitIsotonic(fit.ctr);
  const double raw_in = WeightedSquaredError(fit.ctr, nullptr);
  const double cal_in = WeightedSquaredError(fit.ctr, &map);
  const double raw_out = WeightedSquaredError(held.ctr, nullptr);
  const double cal_out = WeightedSquaredError(held.ctr, &map);
  return {cal_in < raw_in && cal_out < raw_out,
          Fmt("WSE raw %.6g -> calibrated %.6g; held-out %.6g -> %.6g", raw_in, cal_in, raw_out,
              cal_out)};
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome EndToEndDeterminism() {
  const fs::path root = fs::temp_directory_path() / "adlab_acceptance_e2e";
  fs::remove_all(root);
  for (const char* run : {"a", "b"}) {
    const std::string out = (root / run).string();
    const char* argv[] = {"adlab", "--single-thread", "--seed", "1", "--out", out.c_str(),
                          "pipeline"};
    std::ostringstream log, err;
    const int code = RunCli(7, argv, log, err);
    if (code != kExitOk) return {false, Fmt("run %s exited %d: %s", run, code, err.str().c_str())};
  }
  int files = 0, differ = 0;
  for (const auto& entry : fs::directory_iterator(root / "a")) {
    if (entry.path().extension() != ".csv") continue;
    ++files;
    const fs::path other = root / "b" / entry.path().filename();
    if (!fs::exists(other) || Slurp(entry.path()) != Slurp(other)) ++differ;
  }
  fs::remove_all(root);
  return {files > 0 && differ == 0, Fmt("%d CSVs compared, %d differ", files, differ)};
}

struct Criterion {
  int id;
  const char* name;
  double max_seconds;  // 0 when the criterion sets no runtime bound
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace adlab

int main() {
  using namespace adlab;
  Shared shared;
  const std::vector<Criterion> criteria = {
      {1, "GSP substitution identity", 10, GspSubstitution},
      {2, "gradient suite", 30, GradientSuite},
      {3, "PAV optimality", 10, PavOptimality},
      {4, "DDPG vs oracle", 600, [&] { return DdpgVsOracle(shared); }},
      {5, "dueling vs plain critic", 0, [&] { return DuelingVsPlain(shared); }},
      {6, "batch size reduces loss variance", 60, [&] { return BatchVariance(shared); }},
      {7, "ES recovery", 300, [&] { return EsRecovery(shared); }},
      {8, "ES update exactness", 0, EsExactness},
      {9, "calibration benefit", 0, CalibrationBenefit},
      {10, "end-to-end determinism", 0, EndToEndDeterminism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool pass = outcome.pass;
    if (c.max_seconds > 0 && secs >= c.max_seconds) {
      pass = false;
      outcome.detail += Fmt("; over the %.0f s budget", c.max_seconds);
    }
    if (!pass) ++failures;
    std::printf("%s %2d %s: %s (%.1f s)\n", pass ? "PASS" : "FAIL", c.id, c.name,
                outcome.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
