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

#include "adlab/market.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "adlab/errors.h"

namespace adlab {
namespace {

bool InOpenUnit(double x) { return x > 0.0 && x < 1.0; }

double LogUniform(Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

double Beta(Rng& rng, double alpha, double beta) {
  std::gamma_distribution<double> ga(alpha, 1.0);
  std::gamma_distribution<double> gb(beta, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  return x / (x + y);
}

double ClampRate(double r) { return std::clamp(r, kRateFloor, kRateCeil); }

void ValidateCandidate(const AdCandidate& c) {
  if (!(c.bid > 0.0) || !(c.price > 0.0)) {
    throw ConfigError("ad " + std::to_string(c.ad_id) +
                      ": bid and price must be positive");
  }
  if (!InOpenUnit(c.true_ctr) || !InOpenUnit(c.true_cvr) ||
      !InOpenUnit(c.pred_ctr) || !InOpenUnit(c.pred_cvr)) {
    throw ConfigError("ad " + std::to_string(c.ad_id) +
                      ": rates must lie strictly inside (0, 1)");
  }
}

}  // namespace

void MarketConfig::Validate() const {
  if (num_queries < 1) throw ConfigError("num_queries must be >= 1");
  if (ads_per_query < 1) throw ConfigError("ads_per_query must be >= 1");
  if (positions_k < 1) throw ConfigError("positions_k must be >= 1");
  if (positions_k > ads_per_query) {
    throw ConfigError("positions_k must not exceed ads_per_query");
  }
  if (static_cast<int>(position_bias.size()) != positions_k) {
    throw ConfigError("position_bias must have positions_k entries");
  }
  if (position_bias.front() != 1.0) {
    throw ConfigError("position_bias[0] must be 1.0");
  }
  for (std::size_t i = 0; i < position_bias.size(); ++i) {
    if (!(position_bias[i] > 0.0 && position_bias[i] <= 1.0)) {
      throw ConfigError("position_bias entries must lie in (0, 1]");
    }
    if (i > 0 && !(position_bias[i] < position_bias[i - 1])) {
      throw ConfigError("position_bias must be strictly decreasing");
    }
  }
  if (!(bid_min > 0.0 && bid_min < bid_max)) {
    throw ConfigError("bid range must satisfy 0 < bid_min < bid_max");
  }
  if (!(price_min > 0.0 && price_min < price_max)) {
    throw ConfigError("price range must satisfy 0 < price_min < price_max");
  }
  if (!(ctr_alpha > 0.0 && ctr_beta > 0.0 && cvr_alpha > 0.0 && cvr_beta > 0.0)) {
    throw ConfigError("Beta shape parameters must be positive");
  }
  if (!(prediction_distortion_exponent > 0.0) ||
      !std::isfinite(prediction_distortion_exponent)) {
    throw ConfigError("prediction_distortion_exponent must be positive");
  }
  if (!(reserve_price >= 0.0) || !std::isfinite(reserve_price)) {
    throw ConfigError("reserve_price must be >= 0");
  }
}

Market::Market(MarketConfig config,
               std::vector<std::vector<AdCandidate>> candidates)
    : config_(std::move(config)), candidates_(std::move(candidates)) {
  config_.Validate();
  if (static_cast<int>(candidates_.size()) != config_.num_queries) {
    throw ConfigError("market must hold one candidate list per query");
  }
  for (const auto& list : candidates_) {
    if (static_cast<int>(list.size()) != config_.ads_per_query) {
      throw ConfigError("each query must have exactly ads_per_query candidates");
    }
    for (const auto& c : list) ValidateCandidate(c);
  }
}

std::span<const AdCandidate> Market::candidates(int query_id) const {
  if (query_id < 0 || query_id >= config_.num_queries) {
    throw LookupError("unknown query_id " + std::to_string(query_id));
  }
  return candidates_[query_id];
}

double Distort(double rate, double exponent) {
  if (!InOpenUnit(rate)) throw DomainError("distort: rate must lie in (0, 1)");
  if (!(exponent > 0.0)) throw DomainError("distort: exponent must be positive");
  return std::pow(rate, exponent);
}

Market GenerateMarket(const MarketConfig& config) {
  config.Validate();
  Rng rng = MakeRng(config.seed, "market");
  const double e = config.prediction_distortion_exponent;
  std::vector<std::vector<AdCandidate>> lists(config.num_queries);
  for (int q = 0; q < config.num_queries; ++q) {
    auto& list = lists[q];
    list.reserve(config.ads_per_query);
    for (int j = 0; j < config.ads_per_query; ++j) {
      AdCandidate c;
      c.ad_id = q * config.ads_per_query + j;
      c.bid = LogUniform(rng, config.bid_min, config.bid_max);
      c.price = LogUniform(rng, config.price_min, config.price_max);
      c.true_ctr = ClampRate(Beta(rng, config.ctr_alpha, config.ctr_beta));
      c.true_cvr = ClampRate(Beta(rng, config.cvr_alpha, config.cvr_beta));
      c.pred_ctr = ClampRate(Distort(c.true_ctr, e));
      c.pred_cvr = ClampRate(Distort(c.true_cvr, e));
      list.push_back(c);
    }
  }
  return Market(config, std::move(lists));
}

SearchContext SampleContext(const Market& market, Rng& rng, int session_pos) {
  std::uniform_int_distribution<int> dist(0, market.num_queries() - 1);
  return SearchContext{dist(rng), session_pos};
}

std::span<const AdCandidate> CandidatesFor(const Market& market,
                                           const SearchContext& ctx) {
  return market.candidates(ctx.query_id);
}

}  // namespace adlab
