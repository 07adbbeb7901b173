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

#include "adlab/oracle.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <thread>

#include "adlab/csv.h"
#include "adlab/errors.h"

namespace adlab {
namespace {

bool LexLess(const RankingParams& l, const RankingParams& r) {
  return l.ToArray() < r.ToArray();
}

// Strictly better reward, or equal reward and smaller params.
bool Better(double reward, const RankingParams& p, double best_reward,
            const RankingParams& best) {
  if (reward != best_reward) return reward > best_reward;
  return LexLess(p, best);
}

std::vector<RankingParams> Lattice(const GridSpec& spec,
                                   const std::array<double, kNumRankingParams>& lo,
                                   const std::array<double, kNumRankingParams>& hi) {
  std::vector<std::vector<double>> axes(kNumRankingParams);
  for (int d = 0; d < kNumRankingParams; ++d) {
    if (spec.frozen[d]) {
      axes[d] = {*spec.frozen[d]};
      continue;
    }
    for (int i = 0; i < spec.points_per_dim; ++i) {
      const double t = static_cast<double>(i) / (spec.points_per_dim - 1);
      axes[d].push_back(lo[d] + t * (hi[d] - lo[d]));
    }
  }
  std::vector<RankingParams> points;
  std::array<std::size_t, kNumRankingParams> idx{};
  while (true) {
    std::array<double, kNumRankingParams> v;
    for (int d = 0; d < kNumRankingParams; ++d) v[d] = axes[d][idx[d]];
    points.push_back(RankingParams::FromArray(v));
    int d = kNumRankingParams - 1;
    while (d >= 0 && ++idx[d] == axes[d].size()) idx[d--] = 0;
    if (d < 0) break;
  }
  return points;
}

}  // namespace

void GridSpec::Validate() const {
  if (points_per_dim < 2) throw ConfigError("grid: points_per_dim must be >= 2");
  if (refinement_rounds < 1) throw ConfigError("grid: refinement_rounds must be >= 1");
  if (!(shrink_factor > 0.0 && shrink_factor < 1.0)) {
    throw ConfigError("grid: shrink_factor must lie in (0, 1)");
  }
  if (episodes_per_point < 1) throw ConfigError("grid: episodes_per_point must be >= 1");
  box.Validate();
  for (int d = 0; d < kNumRankingParams; ++d) {
    if (frozen[d] && !(*frozen[d] >= box.lower[d] && *frozen[d] <= box.upper[d])) {
      throw ConfigError("grid: frozen value outside the action box");
    }
  }
}

long GridSpec::PointsPerRound() const {
  long n = 1;
  for (int d = 0; d < kNumRankingParams; ++d) {
    if (!frozen[d]) n *= points_per_dim;
  }
  return n;
}

GridResult GridSearch(const Market& market, const GridSpec& spec,
                      const SessionConfig& session, const RewardConfig& reward_cfg) {
  spec.Validate();
  SessionConfig eval = session;
  eval.episodes_per_eval = spec.episodes_per_point;
  eval.seed = spec.seed;

  GridResult result;
  bool have_incumbent = false;
  std::array<double, kNumRankingParams> lo = spec.box.lower;
  std::array<double, kNumRankingParams> hi = spec.box.upper;

  for (int round = 0; round < spec.refinement_rounds; ++round) {
    if (round > 0) {
      const auto center = result.best.ToArray();
      const double scale = std::pow(spec.shrink_factor, round);
      for (int d = 0; d < kNumRankingParams; ++d) {
        const double half = 0.5 * scale * spec.box.Width(d);
        lo[d] = std::max(spec.box.lower[d], center[d] - half);
        hi[d] = std::min(spec.box.upper[d], center[d] + half);
      }
    }
    const std::vector<RankingParams> points = Lattice(spec, lo, hi);
    std::vector<GridSample> samples(points.size());
    const auto evaluate = [&](std::size_t i) {
      const Evaluation ev = EvaluatePolicy(market, ConstantPolicy(points[i]), eval, reward_cfg);
      samples[i] = GridSample{points[i], round, ev.mean_reward, ev.metrics};
    };
    const std::size_t threads =
        spec.single_thread ? 1 : std::max(1u, std::thread::hardware_concurrency());
    if (threads <= 1) {
      for (std::size_t i = 0; i < points.size(); ++i) evaluate(i);
    } else {
      std::vector<std::thread> pool;
      for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
          for (std::size_t i = t; i < points.size(); i += threads) evaluate(i);
        });
      }
      for (auto& th : pool) th.join();
    }
    // Reduction in lattice order, so the tie-break is schedule independent.
    for (const auto& s : samples) {
      if (!have_incumbent || Better(s.reward, s.params, result.best_reward, result.best)) {
        result.best = s.params;
        result.best_reward = s.reward;
        have_incumbent = true;
      }
    }
    result.incumbent_by_round.push_back(result.best_reward);
    result.samples.insert(result.samples.end(), samples.begin(), samples.end());
  }
  return result;
}

void WriteGridSurfaceCsv(const std::string& path, std::span<const GridSample> samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << "a1,a2,a3,a4,a5,reward,ctr,ppc,rpm\n";
  for (const auto& s : samples) {
    for (double a : s.params.ToArray()) out << csv::FormatDouble(a) << ',';
    out << csv::FormatDouble(s.reward) << ',' << csv::FormatDouble(s.metrics.ctr) << ','
        << csv::FormatDouble(s.metrics.ppc) << ',' << csv::FormatDouble(s.metrics.rpm)
        << '\n';
  }
}

}  // namespace adlab
