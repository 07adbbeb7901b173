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

#ifndef ADLAB_ORACLE_H_
#define ADLAB_ORACLE_H_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adlab/auction.h"
#include "adlab/market.h"
#include "adlab/simulator.h"

namespace adlab {

struct GridSpec {
  int points_per_dim = 5;
  int refinement_rounds = 3;
  double shrink_factor = 0.5;
  int episodes_per_point = 40;
  std::uint64_t seed = 17;
  // Dimensions pinned to a value are not searched.
  std::array<std::optional<double>, kNumRankingParams> frozen{};
  ActionBox box;
  bool single_thread = false;

  void Validate() const;
  // Lattice points per round: points_per_dim ^ (free dimensions).
  long PointsPerRound() const;
};

struct GridSample {
  RankingParams params;
  int round = 0;
  double reward = 0.0;
  Metrics metrics;
};

struct GridResult {
  RankingParams best;
  double best_reward = 0.0;
  std::vector<double> incumbent_by_round;
  std::vector<GridSample> samples;
};

// Round 0 grids the whole box; round r grids a box of shrink_factor^r times
// the full extent centred on the incumbent (clipped to the action box).
// Every point is a constant-action policy scored by EvaluatePolicy with the
// same sessions (common random numbers). The incumbent is replaced only by a
// strictly better point; equal rewards go to the lexicographically smaller
// params.
GridResult GridSearch(const Market& market, const GridSpec& spec,
                      const SessionConfig& session, const RewardConfig& reward_cfg);

// CSV columns: a1,a2,a3,a4,a5,reward,ctr,ppc,rpm.
void WriteGridSurfaceCsv(const std::string& path, std::span<const GridSample> samples);

}  // namespace adlab

#endif  // ADLAB_ORACLE_H_
