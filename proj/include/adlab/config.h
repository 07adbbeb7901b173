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

#ifndef ADLAB_CONFIG_H_
#define ADLAB_CONFIG_H_

#include <cstdint>
#include <string>
#include <vector>

#include "adlab/auction.h"
#include "adlab/ddpg.h"
#include "adlab/es.h"
#include "adlab/market.h"
#include "adlab/oracle.h"
#include "adlab/simulator.h"

namespace adlab {

// Knobs of the end-to-end experiment that belong to no single module.
struct PipelineConfig {
  std::size_t dataset_transitions = 100000;
  std::size_t calibration_impressions = 10000;
  // Budget of the comparison runs (other critic head, batch sweep).
  long compare_steps = 5000;
  std::vector<int> batch_sweep = {32, 256, 1024};
  int loss_resamples = 200;
  // Parameter noise applied to the trained actor before ES refinement.
  double es_degrade_sigma = 0.2;
  double steps_to_fraction = 0.85;
};

struct ExperimentConfig {
  MarketConfig market;
  RewardConfig reward;
  SessionConfig session;
  DdpgConfig ddpg;
  EsConfig es;
  GridSpec grid;
  PipelineConfig pipeline;
  std::string output_dir = "out";
  std::uint64_t master_seed = 1;

  // Overwrites every component seed with DeriveSeed(master_seed, name).
  void DeriveSeeds();
  void Validate() const;
};

// Defaults for every missing key; unknown keys and ill-typed values raise
// ConfigError. Seeds are derived from master_seed, not read.
ExperimentConfig ParseConfig(std::string_view toml_text, std::string_view source = "config");
ExperimentConfig LoadConfig(const std::string& path);

// Canonical JSON of the resolved config (sorted keys) and its 64-bit digest
// as 16 hex digits.
std::string ConfigJson(const ExperimentConfig& cfg);
std::string ConfigHash(const ExperimentConfig& cfg);

}  // namespace adlab

#endif  // ADLAB_CONFIG_H_
