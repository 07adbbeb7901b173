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

#ifndef ADLAB_CLI_H_
#define ADLAB_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

#include "adlab/config.h"
#include "adlab/market.h"

namespace adlab {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitBadConfig = 2,
  kExitMissingArtifact = 3,
  kExitDivergence = 4,
};

// Subcommands in pipeline order.
inline const std::vector<std::string>& Subcommands() {
  static const std::vector<std::string> kNames = {
      "gen-market", "calibrate", "simulate", "grid-search", "train-ddpg", "run-es", "report"};
  return kNames;
}

// Parses argv, runs one subcommand (or all of them for "pipeline") and maps
// errors to exit codes. Diagnostics go to err.
int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Runs one stage against cfg.output_dir. Throws on failure; a diverged
// training run throws NumericError after its logs are written.
void RunStage(const std::string& name, const ExperimentConfig& cfg, std::ostream& log);

// CSV columns: query_id,ad_id,bid,price,true_ctr,true_cvr,pred_ctr,pred_cvr.
void WriteMarketCsv(const std::string& path, const Market& market);
Market ReadMarketCsv(const std::string& path, const MarketConfig& config);

// "adlab <semver>+<git describe>" fixed at configure time.
std::string VersionString();

}  // namespace adlab

#endif  // ADLAB_CLI_H_
