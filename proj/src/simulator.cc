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

#include "adlab/simulator.h"

#include <cmath>
#include <fstream>
#include <memory>
#include <ostream>

#include "adlab/csv.h"
#include "adlab/errors.h"

namespace adlab {

void SessionConfig::Validate() const {
  if (session_len < 1) throw ConfigError("session_len must be >= 1");
  if (episodes_per_eval < 1) throw ConfigError("episodes_per_eval must be >= 1");
}

PageFeedback SimulateUser(std::span<const RankedSlot> slots,
                          std::span<const double> position_bias, Rng& rng) {
  PageFeedback fb;
  fb.slots.resize(slots.size());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const RankedSlot& s = slots[i];
    ++fb.totals.impressions;
    const double p_click = position_bias[s.position] * s.candidate.true_ctr;
    if (u(rng) >= p_click) continue;
    fb.slots[i].clicked = true;
    ++fb.totals.clicks;
    fb.totals.revenue += s.click_price;
    if (u(rng) < s.candidate.true_cvr) {
      fb.slots[i].converted = true;
      ++fb.totals.conversions;
      fb.totals.gmv += s.candidate.price;
    }
  }
  return fb;
}

StepOutcome SimulateStep(const Market& market, const SearchContext& ctx,
                         const RankingParams& action,
                         const RewardConfig& reward_cfg, Rng& users) {
  StepOutcome out;
  out.slots = RunAuction(action, CandidatesFor(market, ctx), market.positions_k(),
                         market.config().reserve_price);
  out.reward = PageReward(out.slots, market.position_bias(), reward_cfg);
  out.feedback = SimulateUser(out.slots, market.position_bias(), users);
  return out;
}

Episode SimulateSession(const Market& market, const Policy& policy,
                        const SessionConfig& cfg, const RewardConfig& reward_cfg,
                        SessionRng& rng, const PageObserver* observer) {
  static const ActionBox kBox;
  Episode ep;
  ep.transitions.reserve(cfg.session_len);
  SearchContext ctx = SampleContext(market, rng.contexts, 0);
  for (int t = 0; t < cfg.session_len; ++t) {
    const RankingParams action = policy(ctx);
    if (!kBox.Contains(action)) {
      throw ActionBoundsError("policy returned an action outside the box");
    }
    StepOutcome step = SimulateStep(market, ctx, action, reward_cfg, rng.users);
    if (observer) (*observer)(ctx, step.slots, step.feedback);
    Transition tr{ctx, action, step.reward, std::nullopt};
    if (t + 1 < cfg.session_len) {
      tr.next_state = SampleContext(market, rng.contexts, t + 1);
    }
    ep.feedback += step.feedback.totals;
    ep.total_reward += step.reward;
    ep.transitions.push_back(tr);
    if (tr.next_state) ctx = *tr.next_state;
  }
  return ep;
}

Policy ConstantPolicy(const RankingParams& params) {
  return [params](const SearchContext&) { return params; };
}

Policy UniformRandomPolicy(const ActionBox& box, std::uint64_t seed) {
  auto rng = std::make_shared<Rng>(MakeRng(seed, "uniform-policy"));
  return [box, rng](const SearchContext&) {
    std::array<double, kNumRankingParams> v;
    for (int i = 0; i < kNumRankingParams; ++i) {
      std::uniform_real_distribution<double> u(box.lower[i], box.upper[i]);
      v[i] = u(*rng);
    }
    return RankingParams::FromArray(v);
  };
}

std::vector<Transition> GenerateDataset(const Market& market,
                                        const Policy& behavior,
                                        std::size_t num_transitions,
                                        const SessionConfig& cfg,
                                        const RewardConfig& reward_cfg,
                                        Rng& rng) {
  cfg.Validate();
  std::vector<Transition> data;
  data.reserve(num_transitions);
  while (data.size() < num_transitions) {
    SessionRng session_rng(rng());
    Episode ep = SimulateSession(market, behavior, cfg, reward_cfg, session_rng);
    for (const auto& tr : ep.transitions) {
      if (data.size() == num_transitions) break;
      data.push_back(tr);
    }
  }
  return data;
}

Evaluation EvaluatePolicy(const Market& market, const Policy& policy,
                          const SessionConfig& cfg,
                          const RewardConfig& reward_cfg) {
  cfg.Validate();
  Feedback totals;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int i = 0; i < cfg.episodes_per_eval; ++i) {
    SessionRng rng(DeriveSeed(cfg.seed, "episode", i));
    const Episode ep = SimulateSession(market, policy, cfg, reward_cfg, rng);
    totals += ep.feedback;
    sum += ep.total_reward;
    sum_sq += ep.total_reward * ep.total_reward;
  }
  Evaluation ev;
  ev.episodes = cfg.episodes_per_eval;
  ev.metrics = MetricsFrom(totals);
  const double n = cfg.episodes_per_eval;
  ev.mean_reward = sum / n;
  if (cfg.episodes_per_eval > 1) {
    const double var = std::max(0.0, (sum_sq - n * ev.mean_reward * ev.mean_reward) / (n - 1));
    ev.reward_stderr = std::sqrt(var / n);
  }
  return ev;
}

void WriteTransitionsCsv(std::ostream& out, std::span<const Transition> data) {
  out << "query_id,a1,a2,a3,a4,a5,r,next_query_id,terminal\n";
  for (const auto& tr : data) {
    std::vector<std::string> row;
    row.push_back(std::to_string(tr.state.query_id));
    for (double a : tr.action.ToArray()) row.push_back(csv::FormatDouble(a));
    row.push_back(csv::FormatDouble(tr.reward));
    row.push_back(std::to_string(tr.terminal() ? -1 : tr.next_state->query_id));
    row.push_back(tr.terminal() ? "1" : "0");
    out << csv::JoinRow(row) << '\n';
  }
}

void WriteTransitionsCsv(const std::string& path,
                         std::span<const Transition> data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  WriteTransitionsCsv(out, data);
}

std::vector<Transition> ReadTransitionsCsv(const std::string& path) {
  const csv::Table t = csv::ReadFile(path);
  const int q = t.Column("query_id");
  const int a[kNumRankingParams] = {t.Column("a1"), t.Column("a2"), t.Column("a3"),
                                    t.Column("a4"), t.Column("a5")};
  const int r = t.Column("r");
  const int nq = t.Column("next_query_id");
  const int term = t.Column("terminal");
  std::vector<Transition> data;
  data.reserve(t.rows.size());
  // Rows are stored in session order, so positions follow from the
  // terminal flags.
  int pos = 0;
  for (const auto& row : t.rows) {
    Transition tr;
    tr.state.query_id = static_cast<int>(csv::ParseLong(row[q]));
    tr.state.session_pos = pos;
    std::array<double, kNumRankingParams> v;
    for (int i = 0; i < kNumRankingParams; ++i) v[i] = csv::ParseDouble(row[a[i]]);
    tr.action = RankingParams::FromArray(v);
    tr.reward = csv::ParseDouble(row[r]);
    if (csv::ParseLong(row[term]) == 0) {
      tr.next_state =
          SearchContext{static_cast<int>(csv::ParseLong(row[nq])), pos + 1};
    }
    pos = tr.terminal() ? 0 : pos + 1;
    data.push_back(tr);
  }
  return data;
}

}  // namespace adlab
