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

#include "adlab/auction.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "adlab/errors.h"

namespace adlab {

bool ActionBox::Contains(const RankingParams& p) const {
  const auto v = p.ToArray();
  for (int i = 0; i < kNumRankingParams; ++i) {
    if (!(v[i] >= lower[i] && v[i] <= upper[i])) return false;
  }
  return true;
}

RankingParams ActionBox::Midpoint() const {
  std::array<double, kNumRankingParams> v;
  for (int i = 0; i < kNumRankingParams; ++i) v[i] = 0.5 * (lower[i] + upper[i]);
  return RankingParams::FromArray(v);
}

RankingParams ActionBox::Clip(const RankingParams& p) const {
  auto v = p.ToArray();
  for (int i = 0; i < kNumRankingParams; ++i) {
    v[i] = std::clamp(v[i], lower[i], upper[i]);
  }
  return RankingParams::FromArray(v);
}

void ActionBox::Validate() const {
  for (int i = 0; i < kNumRankingParams; ++i) {
    if (!(lower[i] < upper[i])) {
      throw ConfigError("action box requires lower < upper in every dimension");
    }
  }
}

Feedback& Feedback::operator+=(const Feedback& o) {
  impressions += o.impressions;
  clicks += o.clicks;
  conversions += o.conversions;
  revenue += o.revenue;
  gmv += o.gmv;
  return *this;
}

double QualityFactor(const RankingParams& params, const AdCandidate& c) {
  return std::pow(c.pred_ctr, params.a1);
}

double NonBidTerms(const RankingParams& params, const AdCandidate& c) {
  return params.a2 * c.pred_ctr * std::pow(c.pred_cvr, params.a3) +
         params.a4 * std::pow(c.pred_cvr, params.a5) * c.price;
}

double Score(const RankingParams& params, const AdCandidate& c) {
  return QualityFactor(params, c) * c.bid + NonBidTerms(params, c);
}

std::vector<RankedSlot> Rank(const RankingParams& params,
                             std::span<const AdCandidate> candidates, int k) {
  if (candidates.empty()) throw InputError("rank: empty candidate list");
  if (k < 1) throw InputError("rank: k must be >= 1");
  std::vector<double> scores(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    scores[i] = Score(params, candidates[i]);
  }
  std::vector<int> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  const auto before = [&](int l, int r) {
    if (scores[l] != scores[r]) return scores[l] > scores[r];
    return candidates[l].ad_id < candidates[r].ad_id;
  };
  const int n = std::min<int>(k, static_cast<int>(candidates.size()));
  std::partial_sort(order.begin(), order.begin() + n, order.end(), before);
  std::vector<RankedSlot> slots;
  slots.reserve(n);
  for (int p = 0; p < n; ++p) {
    slots.push_back(RankedSlot{candidates[order[p]], p, scores[order[p]], 0.0});
  }
  return slots;
}

double UnclampedClickPrice(const RankingParams& params, const RankedSlot& slot,
                           double next_score) {
  const double quality = QualityFactor(params, slot.candidate);
  if (!(quality > 0.0)) {
    throw DomainError("click price: degenerate quality factor");
  }
  return (next_score - NonBidTerms(params, slot.candidate)) / quality;
}

double ClickPrice(const RankingParams& params, const RankedSlot& slot,
                  std::optional<double> next_score, double reserve) {
  const double bid = slot.candidate.bid;
  if (!next_score) return std::min(reserve, bid);
  // Tied with the next competitor: the full bid is needed to stay ahead.
  if (*next_score >= slot.score) return bid;
  const double raw = UnclampedClickPrice(params, slot, *next_score);
  return std::min(std::max(raw, reserve), bid);
}

std::vector<RankedSlot> RunAuction(const RankingParams& params,
                                   std::span<const AdCandidate> candidates,
                                   int k, double reserve) {
  std::vector<RankedSlot> slots = Rank(params, candidates, k + 1);
  const int shown = std::min<int>(k, static_cast<int>(slots.size()));
  for (int p = 0; p < shown; ++p) {
    std::optional<double> next;
    if (p + 1 < static_cast<int>(slots.size())) next = slots[p + 1].score;
    slots[p].click_price = ClickPrice(params, slots[p], next, reserve);
  }
  slots.resize(shown);
  return slots;
}

double Reward(double ctr, double click_price, const RewardConfig& cfg) {
  return ctr * click_price + cfg.delta * ctr;
}

double PageReward(std::span<const RankedSlot> slots,
                  std::span<const double> position_bias,
                  const RewardConfig& cfg) {
  double total = 0.0;
  for (const auto& s : slots) {
    const double ctr = position_bias[s.position] * s.candidate.pred_ctr;
    total += Reward(ctr, s.click_price, cfg);
  }
  return total;
}

Metrics MetricsFrom(const Feedback& t) {
  Metrics m;
  m.impressions = t.impressions;
  m.clicks = t.clicks;
  m.conversions = t.conversions;
  m.revenue = t.revenue;
  m.gmv = t.gmv;
  if (t.impressions > 0) {
    m.ctr = static_cast<double>(t.clicks) / static_cast<double>(t.impressions);
    m.rpm = 1000.0 * t.revenue / static_cast<double>(t.impressions);
  }
  if (t.clicks > 0) m.ppc = t.revenue / static_cast<double>(t.clicks);
  return m;
}

Metrics AggregateMetrics(std::span<const Feedback> feedback) {
  Feedback totals;
  for (const auto& f : feedback) totals += f;
  return MetricsFrom(totals);
}

}  // namespace adlab
