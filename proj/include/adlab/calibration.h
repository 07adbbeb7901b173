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

#ifndef ADLAB_CALIBRATION_H_
#define ADLAB_CALIBRATION_H_

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "adlab/market.h"

namespace adlab {

struct CalibrationPoint {
  double predicted = 0.0;
  double observed = 0.0;
  double weight = 1.0;
};

// Monotone map from predicted to calibrated values.
struct CalibrationMap {
  std::vector<double> breakpoints;  // strictly increasing
  std::vector<double> fitted;       // non-decreasing
  std::vector<double> weights;      // total weight per breakpoint
};

// Weighted isotonic least squares by pool-adjacent-violators. Points with
// equal predicted values are merged first. Throws InputError on empty input
// or non-positive weights.
CalibrationMap FitIsotonic(std::span<const CalibrationPoint> points);

// Piecewise linear between breakpoints, constant beyond the ends. With
// clamp_unit the result is clamped to [0, 1].
double Apply(const CalibrationMap& map, double predicted, bool clamp_unit = true);

// Weighted squared error sum_i w_i (f(pred_i) - obs_i)^2 where f is either
// the map or the identity when map is null.
double WeightedSquaredError(std::span<const CalibrationPoint> points,
                            const CalibrationMap* map);

// Position-debiased click log: each shown ad contributes
// (pred_ctr, clicked / bias, bias) so the weighted mean of observations
// estimates the ad's unbiased click rate.
struct ClickLog {
  std::vector<CalibrationPoint> ctr;
  std::vector<CalibrationPoint> cvr;  // one point per click
};

// Simulates about num_impressions ad impressions under a uniformly random
// ranking policy and records them.
ClickLog CollectClickLog(const Market& market, std::size_t num_impressions,
                         std::uint64_t seed);

// Copy of the market with pred_ctr and pred_cvr replaced by calibrated values
// (kept strictly inside (0, 1)).
Market CalibrateMarket(const Market& market, const CalibrationMap& ctr_map,
                       const CalibrationMap& cvr_map);

// CSV columns: breakpoint,fitted.
void WriteCalibrationCsv(const std::string& path, const CalibrationMap& map);
CalibrationMap ReadCalibrationCsv(const std::string& path);

}  // namespace adlab

#endif  // ADLAB_CALIBRATION_H_
