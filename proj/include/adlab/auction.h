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

#ifndef ADLAB_AUCTION_H_
#define ADLAB_AUCTION_H_

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "adlab/market.h"

namespace adlab {

inline constexpr int kNumRankingParams = 5;

// Parameters of the ranking score
//   score = ctr^a1 * bid + a2 * ctr * cvr^a3 + a4 * cvr^a5 * price.
struct RankingParams {
  double a1 = 1.0;
  double a2 = 0.0;
  double a3 = 1.0;
  double a4 = 0.0;
  double a5 = 1.0;

  std::array<double, kNumRankingParams> ToArray() const {
    return {a1, a2, a3, a4, a5};
  }
  static RankingParams FromArray(const std::array<double, kNumRankingParams>& v) {
    return {v[0], v[1], v[2], v[3], v[4]};
  }

  friend bool operator==(const RankingParams&, const RankingParams&) = default;
};

// Per-dimension bounds on RankingParams.
struct ActionBox {
  std::array<double, kNumRankingParams> lower = {0.5, 0.0, 0.5, 0.0, 0.5};
  std::array<double, kNumRankingParams> upper = {2.0, 2.0, 2.0, 2.0, 2.0};

  bool Contains(const RankingParams& p) const;
  RankingParams Midpoint() const;
  RankingParams Clip(const RankingParams& p) const;
  double Width(int dim) const { return upper[dim] - lower[dim]; }
  // Throws ConfigError unless lower < upper in every dimension.
  void Validate() const;
};

struct RankedSlot {
  AdCandidate candidate;
  int position = 0;
  double score = 0.0;
  double click_price = 0.0;
};

struct RewardConfig {
  double delta = 1.0;
};

// Realized outcome counters of one or more result pages.
struct Feedback {
  long impressions = 0;
  long clicks = 0;
  long conversions = 0;
  double revenue = 0.0;
  double gmv = 0.0;

  Feedback& operator+=(const Feedback& o);
};

struct Metrics {
  long impressions = 0;
  long clicks = 0;
  long conversions = 0;
  double revenue = 0.0;
  double gmv = 0.0;
  double ctr = 0.0;
  double ppc = 0.0;
  double rpm = 0.0;
};

// ctr^a1, the factor multiplying the bid.
double QualityFactor(const RankingParams& params, const AdCandidate& c);
// a2 * ctr * cvr^a3 + a4 * cvr^a5 * price.
double NonBidTerms(const RankingParams& params, const AdCandidate& c);

double Score(const RankingParams& params, const AdCandidate& c);

// Top-k candidates by descending score, ties to the lower ad_id. Prices are
// left at zero. Returns min(k, size) slots. Throws InputError when the
// candidate list is empty or k < 1.
std::vector<RankedSlot> Rank(const RankingParams& params,
                             std::span<const AdCandidate> candidates, int k);

// Price that makes the slot's score equal next_score, before clamping.
double UnclampedClickPrice(const RankingParams& params, const RankedSlot& slot,
                           double next_score);

// GSP price clamped to [reserve, bid]. Without a next competitor the slot
// pays the reserve (capped at its bid).
double ClickPrice(const RankingParams& params, const RankedSlot& slot,
                  std::optional<double> next_score, double reserve);

// Ranks and prices the first k slots. The (k+1)-th candidate, when present,
// sets the price of the last slot.
std::vector<RankedSlot> RunAuction(const RankingParams& params,
                                   std::span<const AdCandidate> candidates,
                                   int k, double reserve);

// ctr * click_price + delta * ctr.
double Reward(double ctr, double click_price, const RewardConfig& cfg);

// Sum of per-slot rewards where each slot's ctr is its predicted ctr scaled
// by the position bias of the slot.
double PageReward(std::span<const RankedSlot> slots,
                  std::span<const double> position_bias,
                  const RewardConfig& cfg);

Metrics AggregateMetrics(std::span<const Feedback> feedback);
Metrics MetricsFrom(const Feedback& totals);

}  // namespace adlab

#endif  // ADLAB_AUCTION_H_
