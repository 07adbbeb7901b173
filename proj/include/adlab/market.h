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

#ifndef ADLAB_MARKET_H_
#define ADLAB_MARKET_H_

#include <cstdint>
#include <span>
#include <vector>

#include "adlab/rng.h"

namespace adlab {

// Rates are kept strictly inside (0, 1) by clamping to this margin.
inline constexpr double kRateFloor = 1e-4;
inline constexpr double kRateCeil = 1.0 - 1e-4;

struct SearchContext {
  int query_id = 0;
  int session_pos = 0;

  friend bool operator==(const SearchContext&, const SearchContext&) = default;
};

struct AdCandidate {
  int ad_id = 0;
  double bid = 0.0;    // money per click
  double price = 0.0;  // money per item
  double true_ctr = 0.0;
  double true_cvr = 0.0;
  double pred_ctr = 0.0;
  double pred_cvr = 0.0;

  friend bool operator==(const AdCandidate&, const AdCandidate&) = default;
};

struct MarketConfig {
  int num_queries = 10;
  int ads_per_query = 20;
  int positions_k = 5;
  std::vector<double> position_bias = {1.0, 0.7, 0.5, 0.35, 0.25};

  // bid and price are log-uniform, true rates are Beta distributed.
  double bid_min = 0.1;
  double bid_max = 5.0;
  double price_min = 1.0;
  double price_max = 100.0;
  double ctr_alpha = 2.0;
  double ctr_beta = 20.0;
  double cvr_alpha = 2.0;
  double cvr_beta = 30.0;

  double prediction_distortion_exponent = 0.8;
  double reserve_price = 0.05;
  std::uint64_t seed = 1;

  // Throws ConfigError on the first violated invariant.
  void Validate() const;

  friend bool operator==(const MarketConfig&, const MarketConfig&) = default;
};

// Immutable after construction; safe to share across threads.
class Market {
 public:
  // Candidate lists are indexed by query id. Throws ConfigError when the
  // lists do not match the config or a candidate is invalid.
  Market(MarketConfig config, std::vector<std::vector<AdCandidate>> candidates);

  const MarketConfig& config() const { return config_; }
  int num_queries() const { return config_.num_queries; }
  int positions_k() const { return config_.positions_k; }
  std::span<const double> position_bias() const { return config_.position_bias; }

  // Throws LookupError for an unknown query id.
  std::span<const AdCandidate> candidates(int query_id) const;

  friend bool operator==(const Market&, const Market&) = default;

 private:
  MarketConfig config_;
  std::vector<std::vector<AdCandidate>> candidates_;
};

// Power-law miscalibration rate^exponent. Throws DomainError unless
// rate is in (0, 1) and exponent > 0.
double Distort(double rate, double exponent);

Market GenerateMarket(const MarketConfig& config);

// Uniform over query ids.
SearchContext SampleContext(const Market& market, Rng& rng, int session_pos = 0);

std::span<const AdCandidate> CandidatesFor(const Market& market,
                                           const SearchContext& ctx);

}  // namespace adlab

#endif  // ADLAB_MARKET_H_
