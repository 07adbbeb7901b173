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

#ifndef ADLAB_SIMULATOR_H_
#define ADLAB_SIMULATOR_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adlab/auction.h"
#include "adlab/market.h"
#include "adlab/rng.h"

namespace adlab {

using Policy = std::function<RankingParams(const SearchContext&)>;

struct SessionConfig {
  int session_len = 5;
  int episodes_per_eval = 200;
  std::uint64_t seed = 7;

  void Validate() const;
};

struct Transition {
  SearchContext state;
  RankingParams action;
  double reward = 0.0;
  // Empty at the end of a session.
  std::optional<SearchContext> next_state;

  bool terminal() const { return !next_state.has_value(); }
  friend bool operator==(const Transition&, const Transition&) = default;
};

struct SlotOutcome {
  bool clicked = false;
  bool converted = false;
};

struct PageFeedback {
  std::vector<SlotOutcome> slots;
  Feedback totals;
};

struct StepOutcome {
  std::vector<RankedSlot> slots;
  PageFeedback feedback;
  double reward = 0.0;
};

struct Episode {
  std::vector<Transition> transitions;
  Feedback feedback;
  double total_reward = 0.0;
};

// Independent streams for context draws and user behaviour so that two
// policies evaluated from the same seed see the same queries.
struct SessionRng {
  explicit SessionRng(std::uint64_t seed)
      : contexts(MakeRng(seed, "contexts")), users(MakeRng(seed, "users")) {}
  Rng contexts;
  Rng users;
};

// Called once per simulated result page.
using PageObserver =
    std::function<void(const SearchContext&, std::span<const RankedSlot>,
                       const PageFeedback&)>;

// Draws clicks from position_bias[pos] * true_ctr and conversions from
// true_cvr given a click.
PageFeedback SimulateUser(std::span<const RankedSlot> slots,
                          std::span<const double> position_bias, Rng& rng);

// One ranked, priced and simulated result page.
StepOutcome SimulateStep(const Market& market, const SearchContext& ctx,
                         const RankingParams& action,
                         const RewardConfig& reward_cfg, Rng& users);

// Throws ActionBoundsError when the policy leaves the action box.
Episode SimulateSession(const Market& market, const Policy& policy,
                        const SessionConfig& cfg, const RewardConfig& reward_cfg,
                        SessionRng& rng, const PageObserver* observer = nullptr);

Policy ConstantPolicy(const RankingParams& params);
// Stateful: each call advances its own generator.
Policy UniformRandomPolicy(const ActionBox& box, std::uint64_t seed);

// Runs sessions of the behaviour policy until exactly num_transitions
// transitions are collected; the final session may be cut short.
std::vector<Transition> GenerateDataset(const Market& market,
                                        const Policy& behavior,
                                        std::size_t num_transitions,
                                        const SessionConfig& cfg,
                                        const RewardConfig& reward_cfg,
                                        Rng& rng);

struct Evaluation {
  Metrics metrics;
  double mean_reward = 0.0;
  // Standard error of mean_reward across episodes.
  double reward_stderr = 0.0;
  int episodes = 0;
};

// Averages episodes_per_eval sessions; episode i is seeded from
// (cfg.seed, i), so equal configs give common random numbers.
Evaluation EvaluatePolicy(const Market& market, const Policy& policy,
                          const SessionConfig& cfg,
                          const RewardConfig& reward_cfg);

// CSV columns: query_id,a1,a2,a3,a4,a5,r,next_query_id,terminal.
// next_query_id is -1 on terminal rows.
void WriteTransitionsCsv(std::ostream& out, std::span<const Transition> data);
void WriteTransitionsCsv(const std::string& path,
                         std::span<const Transition> data);
// Throws MissingArtifactError when the file is absent or malformed.
std::vector<Transition> ReadTransitionsCsv(const std::string& path);

}  // namespace adlab

#endif  // ADLAB_SIMULATOR_H_
