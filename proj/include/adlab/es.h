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

#ifndef ADLAB_ES_H_
#define ADLAB_ES_H_

#include <cstdint>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "adlab/market.h"
#include "adlab/neural.h"
#include "adlab/rng.h"
#include "adlab/simulator.h"

namespace adlab {

enum class FitnessShaping { kNone, kCenteredRank };

struct EsConfig {
  int population = 20;  // n
  double sigma = 0.05;
  double learning_rate = 0.01;  // eta
  int iterations = 100;
  int episodes_per_fitness = 50;
  FitnessShaping shaping = FitnessShaping::kNone;
  bool mirrored = false;
  bool single_thread = false;
  std::uint64_t seed = 13;

  void Validate() const;
};

struct Perturbation {
  ParamVector epsilon;
  double fitness = 0.0;
};

// The only thing an evaluator reports back to the updater.
struct FitnessMessage {
  std::size_t candidate = 0;
  double reward = 0.0;
};
static_assert(std::is_trivially_copyable_v<FitnessMessage> &&
                  sizeof(FitnessMessage) == sizeof(std::size_t) + sizeof(double),
              "fitness messages carry a scalar reward only");

// n i.i.d. N(0, sigma^2) noise vectors, or n/2 antithetic pairs when
// mirrored. Throws ConfigError for mirrored sampling with odd n.
std::vector<Perturbation> Perturb(const ParamVector& theta, const EsConfig& cfg,
                                  Rng& rng);

// Mean episode reward of each candidate theta + epsilon_i over
// episodes_per_fitness sessions. All candidates share the sessions seeded by
// eval_seed. Results are ordered by candidate index.
std::vector<FitnessMessage> EvaluatePopulation(
    const Market& market, const Actor& actor, const ParamVector& theta,
    std::span<const Perturbation> candidates, const EsConfig& cfg,
    const SessionConfig& session, const RewardConfig& reward_cfg,
    std::uint64_t eval_seed);

// Centered ranks in [-0.5, 0.5] (ties broken by index) or the raw values.
std::vector<double> ShapeFitness(std::span<const double> raw, FitnessShaping shaping);

// theta + eta / (n sigma) * sum_i R_i epsilon_i with R optionally shaped.
ParamVector EsUpdate(const ParamVector& theta,
                     std::span<const Perturbation> perturbations,
                     const EsConfig& cfg);

struct EsLogRow {
  int iteration = 0;
  double fitness = 0.0;  // mean episode reward of the current parameters
  double ctr = 0.0;
  double ppc = 0.0;
  double rpm = 0.0;
};

struct EsResult {
  ParamVector theta;
  std::vector<EsLogRow> trajectory;  // iterations + 1 rows
};

// perturb -> evaluate -> update for cfg.iterations rounds. Row k of the
// trajectory evaluates the parameters after k updates with eval_cfg.
EsResult EsRun(const Market& market, const Actor& actor, const ParamVector& initial,
               const EsConfig& cfg, const SessionConfig& eval_cfg,
               const RewardConfig& reward_cfg);

// CSV columns: iteration,fitness,ctr,ppc,rpm.
void WriteEsTrajectoryCsv(const std::string& path, std::span<const EsLogRow> rows);
std::vector<EsLogRow> ReadEsTrajectoryCsv(const std::string& path);

}  // namespace adlab

#endif  // ADLAB_ES_H_
