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

#include "adlab/calibration.h"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "adlab/auction.h"
#include "adlab/csv.h"
#include "adlab/errors.h"
#include "adlab/simulator.h"

namespace adlab {

CalibrationMap FitIsotonic(std::span<const CalibrationPoint> points) {
  if (points.empty()) throw InputError("isotonic fit: no points");
  for (const auto& p : points) {
    if (!(p.weight > 0.0) || !std::isfinite(p.weight)) {
      throw InputError("isotonic fit: weights must be positive");
    }
    if (!std::isfinite(p.predicted) || !std::isfinite(p.observed)) {
      throw InputError("isotonic fit: non-finite point");
    }
  }
  std::vector<CalibrationPoint> sorted(points.begin(), points.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto& l, const auto& r) { return l.predicted < r.predicted; });

  // Merge ties into their weighted mean.
  std::vector<double> x, y, w;
  for (const auto& p : sorted) {
    if (!x.empty() && x.back() == p.predicted) {
      const double tw = w.back() + p.weight;
      y.back() = (y.back() * w.back() + p.observed * p.weight) / tw;
      w.back() = tw;
    } else {
      x.push_back(p.predicted);
      y.push_back(p.observed);
      w.push_back(p.weight);
    }
  }

  // Blocks on a stack: (weighted mean, total weight, number of points).
  struct Block {
    double mean;
    double weight;
    std::size_t count;
  };
  std::vector<Block> blocks;
  blocks.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    blocks.push_back({y[i], w[i], 1});
    while (blocks.size() > 1 &&
           blocks[blocks.size() - 2].mean > blocks.back().mean) {
      Block top = blocks.back();
      blocks.pop_back();
      Block& prev = blocks.back();
      const double tw = prev.weight + top.weight;
      prev.mean = (prev.mean * prev.weight + top.mean * top.weight) / tw;
      prev.weight = tw;
      prev.count += top.count;
    }
  }

  CalibrationMap map;
  map.breakpoints = std::move(x);
  map.weights = std::move(w);
  map.fitted.reserve(map.breakpoints.size());
  for (const auto& b : blocks) map.fitted.insert(map.fitted.end(), b.count, b.mean);
  return map;
}

double Apply(const CalibrationMap& map, double predicted, bool clamp_unit) {
  const auto& bx = map.breakpoints;
  const auto& fy = map.fitted;
  if (bx.empty()) throw UsageError("calibration map is empty");
  double v;
  if (predicted <= bx.front()) {
    v = fy.front();
  } else if (predicted >= bx.back()) {
    v = fy.back();
  } else {
    const auto it = std::upper_bound(bx.begin(), bx.end(), predicted);
    const std::size_t hi = static_cast<std::size_t>(it - bx.begin());
    const std::size_t lo = hi - 1;
    const double t = (predicted - bx[lo]) / (bx[hi] - bx[lo]);
    v = fy[lo] + t * (fy[hi] - fy[lo]);
  }
  return clamp_unit ? std::clamp(v, 0.0, 1.0) : v;
}

double WeightedSquaredError(std::span<const CalibrationPoint> points,
                            const CalibrationMap* map) {
  double err = 0.0;
  for (const auto& p : points) {
    const double f = map ? Apply(*map, p.predicted) : p.predicted;
    err += p.weight * (f - p.observed) * (f - p.observed);
  }
  return err;
}

ClickLog CollectClickLog(const Market& market, std::size_t num_impressions,
                         std::uint64_t seed) {
  ClickLog log;
  Rng rng = MakeRng(seed, "click-log");
  const Policy behavior = UniformRandomPolicy(ActionBox{}, DeriveSeed(seed, "click-log-policy"));
  const auto bias = market.position_bias();
  while (log.ctr.size() < num_impressions) {
    const SearchContext ctx = SampleContext(market, rng);
    const StepOutcome step =
        SimulateStep(market, ctx, behavior(ctx), RewardConfig{}, rng);
    for (std::size_t i = 0; i < step.slots.size(); ++i) {
      if (log.ctr.size() == num_impressions) break;
      const RankedSlot& s = step.slots[i];
      const double b = bias[s.position];
      const bool clicked = step.feedback.slots[i].clicked;
      log.ctr.push_back({s.candidate.pred_ctr, clicked ? 1.0 / b : 0.0, b});
      if (clicked) {
        log.cvr.push_back(
            {s.candidate.pred_cvr, step.feedback.slots[i].converted ? 1.0 : 0.0, 1.0});
      }
    }
  }
  return log;
}

Market CalibrateMarket(const Market& market, const CalibrationMap& ctr_map,
                       const CalibrationMap& cvr_map) {
  std::vector<std::vector<AdCandidate>> lists;
  lists.reserve(market.num_queries());
  for (int q = 0; q < market.num_queries(); ++q) {
    auto cands = market.candidates(q);
    std::vector<AdCandidate> list(cands.begin(), cands.end());
    for (auto& c : list) {
      c.pred_ctr = std::clamp(Apply(ctr_map, c.pred_ctr), kRateFloor, kRateCeil);
      c.pred_cvr = std::clamp(Apply(cvr_map, c.pred_cvr), kRateFloor, kRateCeil);
    }
    lists.push_back(std::move(list));
  }
  return Market(market.config(), std::move(lists));
}

void WriteCalibrationCsv(const std::string& path, const CalibrationMap& map) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << "breakpoint,fitted\n";
  for (std::size_t i = 0; i < map.breakpoints.size(); ++i) {
    out << csv::FormatDouble(map.breakpoints[i]) << ','
        << csv::FormatDouble(map.fitted[i]) << '\n';
  }
}

CalibrationMap ReadCalibrationCsv(const std::string& path) {
  const csv::Table t = csv::ReadFile(path);
  const int b = t.Column("breakpoint");
  const int f = t.Column("fitted");
  CalibrationMap map;
  for (const auto& row : t.rows) {
    map.breakpoints.push_back(csv::ParseDouble(row[b]));
    map.fitted.push_back(csv::ParseDouble(row[f]));
    map.weights.push_back(1.0);
  }
  if (map.breakpoints.empty()) throw MissingArtifactError("empty calibration " + path);
  return map;
}

}  // namespace adlab
