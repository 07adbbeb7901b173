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

#include "adlab/config.h"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <toml.hpp>

#include "adlab/errors.h"
#include "adlab/rng.h"

namespace adlab {
namespace {

using nlohmann::json;

// Typed view of one TOML table that remembers which keys were consumed.
class Section {
 public:
  Section(const toml::table* table, std::string name)
      : table_(table), name_(std::move(name)) {}

  void Get(std::string_view key, double& out) {
    if (const auto* n = Find(key)) {
      if (auto v = n->value<double>()) {
        out = *v;
      } else {
        Bad(key, "a number");
      }
    }
  }

  template <typename T>
    requires std::is_integral_v<T> && (!std::is_same_v<T, bool>)
  void Get(std::string_view key, T& out) {
    if (const auto* n = Find(key)) {
      const auto v = n->as_integer();
      if (!v) Bad(key, "an integer");
      const std::int64_t x = v->get();
      if (std::is_unsigned_v<T> && x < 0) Bad(key, "a non-negative integer");
      out = static_cast<T>(x);
    }
  }

  void Get(std::string_view key, bool& out) {
    if (const auto* n = Find(key)) {
      const auto v = n->as_boolean();
      if (!v) Bad(key, "a boolean");
      out = v->get();
    }
  }

  void Get(std::string_view key, std::string& out) {
    if (const auto* n = Find(key)) {
      const auto v = n->as_string();
      if (!v) Bad(key, "a string");
      out = v->get();
    }
  }

  void Get(std::string_view key, std::optional<double>& out) {
    if (Has(key)) {
      double v = 0.0;
      Get(key, v);
      out = v;
    }
  }

  template <typename T>
  void Get(std::string_view key, std::vector<T>& out) {
    const auto* n = Find(key);
    if (!n) return;
    const auto* arr = n->as_array();
    if (!arr) Bad(key, "an array");
    std::vector<T> values;
    for (const auto& item : *arr) {
      std::optional<T> v;
      if constexpr (std::is_floating_point_v<T>) {
        v = item.value<double>();
      } else if (const auto* i = item.as_integer()) {
        v = static_cast<T>(i->get());
      }
      if (!v) Bad(key, "an array of numbers");
      values.push_back(*v);
    }
    out = std::move(values);
  }

  bool Has(std::string_view key) const {
    return table_ && table_->contains(key);
  }

  const toml::table* Sub(std::string_view key) {
    const auto* n = Find(key);
    if (!n) return nullptr;
    if (!n->is_table()) Bad(key, "a table");
    return n->as_table();
  }

  void Finish() const {
    if (!table_) return;
    for (const auto& [key, _] : *table_) {
      if (!seen_.count(std::string(key.str()))) {
        throw ConfigError(fmt::format("config: unknown key {}{}", Prefix(), key.str()));
      }
    }
  }

 private:
  const toml::node* Find(std::string_view key) {
    if (!table_) return nullptr;
    seen_.insert(std::string(key));
    return table_->get(key);
  }

  std::string Prefix() const { return name_.empty() ? "" : name_ + "."; }

  [[noreturn]] void Bad(std::string_view key, std::string_view want) const {
    throw ConfigError(fmt::format("config: {}{} must be {}", Prefix(), key, want));
  }

  const toml::table* table_;
  std::string name_;
  std::set<std::string> seen_;
};

void ReadMarket(Section s, MarketConfig& m) {
  s.Get("num_queries", m.num_queries);
  s.Get("ads_per_query", m.ads_per_query);
  s.Get("positions_k", m.positions_k);
  s.Get("position_bias", m.position_bias);
  s.Get("bid_min", m.bid_min);
  s.Get("bid_max", m.bid_max);
  s.Get("price_min", m.price_min);
  s.Get("price_max", m.price_max);
  s.Get("ctr_alpha", m.ctr_alpha);
  s.Get("ctr_beta", m.ctr_beta);
  s.Get("cvr_alpha", m.cvr_alpha);
  s.Get("cvr_beta", m.cvr_beta);
  s.Get("prediction_distortion_exponent", m.prediction_distortion_exponent);
  s.Get("reserve_price", m.reserve_price);
  s.Finish();
}

HeadType ParseCritic(const std::string& name) {
  if (name == "dueling") return HeadType::kCriticDueling;
  if (name == "plain") return HeadType::kCriticPlain;
  throw ConfigError("config: ddpg.critic must be \"dueling\" or \"plain\"");
}

const char* CriticName(HeadType head) {
  return head == HeadType::kCriticPlain ? "plain" : "dueling";
}

void ReadDdpg(Section s, DdpgConfig& d) {
  s.Get("gamma", d.gamma);
  s.Get("tau", d.tau);
  s.Get("batch_size", d.batch_size);
  s.Get("update_period", d.update_period);
  s.Get("actor_lr", d.actor_lr);
  s.Get("critic_lr", d.critic_lr);
  s.Get("workers", d.workers);
  s.Get("total_steps", d.total_steps);
  s.Get("max_staleness", d.max_staleness);
  s.Get("live", d.live);
  s.Get("exploration_sigma", d.exploration_sigma);
  s.Get("replay_capacity", d.replay_capacity);
  s.Get("eval_interval", d.eval_interval);
  s.Get("stop_reward", d.stop_reward);
  s.Get("divergence_loss", d.divergence_loss);
  s.Get("divergence_window", d.divergence_window);
  s.Get("single_thread", d.single_thread);
  std::string critic = CriticName(d.critic_spec.head);
  s.Get("critic", critic);
  d.critic_spec.head = ParseCritic(critic);
  // Both networks share their trunk shape.
  s.Get("embedding_dim", d.actor_spec.embedding_dim);
  s.Get("hidden_sizes", d.actor_spec.hidden_sizes);
  d.critic_spec.embedding_dim = d.actor_spec.embedding_dim;
  d.critic_spec.hidden_sizes = d.actor_spec.hidden_sizes;
  s.Finish();
}

void ReadEs(Section s, EsConfig& e) {
  s.Get("population", e.population);
  s.Get("sigma", e.sigma);
  s.Get("learning_rate", e.learning_rate);
  s.Get("iterations", e.iterations);
  s.Get("episodes_per_fitness", e.episodes_per_fitness);
  std::string shaping = e.shaping == FitnessShaping::kNone ? "none" : "centered_rank";
  s.Get("shaping", shaping);
  if (shaping == "none") {
    e.shaping = FitnessShaping::kNone;
  } else if (shaping == "centered_rank") {
    e.shaping = FitnessShaping::kCenteredRank;
  } else {
    throw ConfigError("config: es.shaping must be \"none\" or \"centered_rank\"");
  }
  s.Get("mirrored", e.mirrored);
  s.Get("single_thread", e.single_thread);
  s.Finish();
}

constexpr const char* kDimNames[kNumRankingParams] = {"a1", "a2", "a3", "a4", "a5"};

void ReadGrid(Section s, GridSpec& g) {
  s.Get("points_per_dim", g.points_per_dim);
  s.Get("refinement_rounds", g.refinement_rounds);
  s.Get("shrink_factor", g.shrink_factor);
  s.Get("episodes_per_point", g.episodes_per_point);
  s.Get("single_thread", g.single_thread);
  if (const auto* frozen = s.Sub("frozen")) {
    Section f(frozen, "grid.frozen");
    for (int d = 0; d < kNumRankingParams; ++d) f.Get(kDimNames[d], g.frozen[d]);
    f.Finish();
  }
  s.Finish();
}

void ReadPipeline(Section s, PipelineConfig& p) {
  s.Get("dataset_transitions", p.dataset_transitions);
  s.Get("calibration_impressions", p.calibration_impressions);
  s.Get("compare_steps", p.compare_steps);
  s.Get("batch_sweep", p.batch_sweep);
  s.Get("loss_resamples", p.loss_resamples);
  s.Get("es_degrade_sigma", p.es_degrade_sigma);
  s.Get("steps_to_fraction", p.steps_to_fraction);
  s.Finish();
}

json NetJson(const NetworkSpec& n) {
  return {{"embedding_dim", n.embedding_dim}, {"hidden_sizes", n.hidden_sizes}};
}

}  // namespace

void ExperimentConfig::DeriveSeeds() {
  market.seed = DeriveSeed(master_seed, "market");
  session.seed = DeriveSeed(master_seed, "session");
  ddpg.seed = DeriveSeed(master_seed, "ddpg");
  es.seed = DeriveSeed(master_seed, "es");
  grid.seed = DeriveSeed(master_seed, "grid");
}

void ExperimentConfig::Validate() const {
  market.Validate();
  session.Validate();
  ddpg.Validate();
  es.Validate();
  grid.Validate();
  if (!(reward.delta >= 0.0)) throw ConfigError("config: reward.delta must be >= 0");
  if (pipeline.dataset_transitions < 1) {
    throw ConfigError("config: pipeline.dataset_transitions must be >= 1");
  }
  if (pipeline.calibration_impressions < 1) {
    throw ConfigError("config: pipeline.calibration_impressions must be >= 1");
  }
  if (pipeline.compare_steps < 1) throw ConfigError("config: pipeline.compare_steps must be >= 1");
  if (pipeline.batch_sweep.empty()) throw ConfigError("config: pipeline.batch_sweep is empty");
  for (int b : pipeline.batch_sweep) {
    if (b < 1) throw ConfigError("config: pipeline.batch_sweep entries must be >= 1");
  }
  if (pipeline.loss_resamples < 2) {
    throw ConfigError("config: pipeline.loss_resamples must be >= 2");
  }
  if (!(pipeline.es_degrade_sigma >= 0.0)) {
    throw ConfigError("config: pipeline.es_degrade_sigma must be >= 0");
  }
  if (!(pipeline.steps_to_fraction > 0.0 && pipeline.steps_to_fraction <= 1.0)) {
    throw ConfigError("config: pipeline.steps_to_fraction must lie in (0, 1]");
  }
  if (output_dir.empty()) throw ConfigError("config: output_dir is empty");
}

ExperimentConfig ParseConfig(std::string_view toml_text, std::string_view source) {
  toml::table root;
  try {
    root = toml::parse(toml_text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "config: " << e.description() << " at " << e.source().begin;
    throw ConfigError(msg.str());
  }

  ExperimentConfig cfg;
  Section top(&root, "");
  top.Get("master_seed", cfg.master_seed);
  top.Get("output_dir", cfg.output_dir);
  ReadMarket(Section(top.Sub("market"), "market"), cfg.market);
  {
    Section s(top.Sub("reward"), "reward");
    s.Get("delta", cfg.reward.delta);
    s.Finish();
  }
  {
    Section s(top.Sub("session"), "session");
    s.Get("session_len", cfg.session.session_len);
    s.Get("episodes_per_eval", cfg.session.episodes_per_eval);
    s.Finish();
  }
  ReadDdpg(Section(top.Sub("ddpg"), "ddpg"), cfg.ddpg);
  ReadEs(Section(top.Sub("es"), "es"), cfg.es);
  ReadGrid(Section(top.Sub("grid"), "grid"), cfg.grid);
  ReadPipeline(Section(top.Sub("pipeline"), "pipeline"), cfg.pipeline);
  top.Finish();

  cfg.DeriveSeeds();
  cfg.Validate();
  return cfg;
}

ExperimentConfig LoadConfig(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return ParseConfig(text.str(), path);
}

std::string ConfigJson(const ExperimentConfig& c) {
  json frozen = json::object();
  for (int d = 0; d < kNumRankingParams; ++d) {
    if (c.grid.frozen[d]) frozen[kDimNames[d]] = *c.grid.frozen[d];
  }
  const auto& m = c.market;
  const auto& d = c.ddpg;
  const auto& e = c.es;
  const auto& p = c.pipeline;
  json j = {
      {"master_seed", c.master_seed},
      {"output_dir", c.output_dir},
      {"market",
       {{"num_queries", m.num_queries}, {"ads_per_query", m.ads_per_query},
        {"positions_k", m.positions_k}, {"position_bias", m.position_bias},
        {"bid_min", m.bid_min}, {"bid_max", m.bid_max}, {"price_min", m.price_min},
        {"price_max", m.price_max}, {"ctr_alpha", m.ctr_alpha}, {"ctr_beta", m.ctr_beta},
        {"cvr_alpha", m.cvr_alpha}, {"cvr_beta", m.cvr_beta},
        {"prediction_distortion_exponent", m.prediction_distortion_exponent},
        {"reserve_price", m.reserve_price}, {"seed", m.seed}}},
      {"reward", {{"delta", c.reward.delta}}},
      {"session",
       {{"session_len", c.session.session_len},
        {"episodes_per_eval", c.session.episodes_per_eval},
        {"seed", c.session.seed}}},
      {"ddpg",
       {{"gamma", d.gamma}, {"tau", d.tau}, {"batch_size", d.batch_size},
        {"update_period", d.update_period}, {"actor_lr", d.actor_lr},
        {"critic_lr", d.critic_lr}, {"workers", d.workers}, {"total_steps", d.total_steps},
        {"max_staleness", d.max_staleness}, {"live", d.live},
        {"exploration_sigma", d.exploration_sigma}, {"replay_capacity", d.replay_capacity},
        {"eval_interval", d.eval_interval},
        {"stop_reward", d.stop_reward ? json(*d.stop_reward) : json(nullptr)},
        {"divergence_loss", d.divergence_loss}, {"divergence_window", d.divergence_window},
        {"single_thread", d.single_thread}, {"critic", CriticName(d.critic_spec.head)},
        {"actor_net", NetJson(d.actor_spec)}, {"critic_net", NetJson(d.critic_spec)},
        {"seed", d.seed}}},
      {"es",
       {{"population", e.population}, {"sigma", e.sigma},
        {"learning_rate", e.learning_rate}, {"iterations", e.iterations},
        {"episodes_per_fitness", e.episodes_per_fitness},
        {"shaping", e.shaping == FitnessShaping::kNone ? "none" : "centered_rank"},
        {"mirrored", e.mirrored}, {"single_thread", e.single_thread}, {"seed", e.seed}}},
      {"grid",
       {{"points_per_dim", c.grid.points_per_dim},
        {"refinement_rounds", c.grid.refinement_rounds},
        {"shrink_factor", c.grid.shrink_factor},
        {"episodes_per_point", c.grid.episodes_per_point},
        {"single_thread", c.grid.single_thread}, {"frozen", frozen},
        {"seed", c.grid.seed}}},
      {"pipeline",
       {{"dataset_transitions", p.dataset_transitions},
        {"calibration_impressions", p.calibration_impressions},
        {"compare_steps", p.compare_steps}, {"batch_sweep", p.batch_sweep},
        {"loss_resamples", p.loss_resamples}, {"es_degrade_sigma", p.es_degrade_sigma},
        {"steps_to_fraction", p.steps_to_fraction}}},
  };
  return j.dump();
}

std::string ConfigHash(const ExperimentConfig& cfg) {
  return fmt::format("{:016x}", HashString(ConfigJson(cfg)));
}

}  // namespace adlab
