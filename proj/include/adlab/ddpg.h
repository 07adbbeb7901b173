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

#ifndef ADLAB_DDPG_H_
#define ADLAB_DDPG_H_

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "adlab/market.h"
#include "adlab/neural.h"
#include "adlab/rng.h"
#include "adlab/simulator.h"

namespace adlab {

struct DdpgConfig {
  double gamma = 0.9;
  double tau = 0.01;
  int batch_size = 256;
  // Worker steps accumulated by the server before each parameter update.
  int update_period = 4;
  double actor_lr = 1e-4;
  double critic_lr = 1e-3;
  int workers = 4;
  long total_steps = 20000;
  // Messages computed against a snapshot more than this many versions old
  // are dropped.
  int max_staleness = 2;

  NetworkSpec actor_spec{8, {32, 32}, Activation::kTanh, HeadType::kActor};
  NetworkSpec critic_spec{8, {32, 32}, Activation::kTanh, HeadType::kCriticDueling};

  // Learn from the simulator directly instead of a fixed dataset.
  bool live = false;
  // Action noise for live rollouts, in units of the box width.
  double exploration_sigma = 0.1;
  std::size_t replay_capacity = 100000;

  long eval_interval = 250;
  // Stop as soon as an evaluation reaches this reward.
  std::optional<double> stop_reward;
  // Early stop when the interval-mean critic loss exceeds divergence_loss on
  // divergence_window consecutive evaluations.
  double divergence_loss = 1e6;
  int divergence_window = 3;

  // Workers run round-robin on the calling thread.
  bool single_thread = false;
  std::uint64_t seed = 11;

  void Validate() const;
};

// Ring buffer of transitions.
class ReplayBuffer {
 public:
  // Sampling reports not-ready while fewer than min_ready items are stored.
  explicit ReplayBuffer(std::size_t capacity, std::size_t min_ready = 1);

  void Add(const Transition& t);
  void AddAll(std::span<const Transition> ts);

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t i) const { return items_[i]; }

  // m draws uniform with replacement; nullopt when not ready.
  std::optional<std::vector<Transition>> Sample(std::size_t m, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t min_ready_;
  std::size_t cursor_ = 0;
  std::vector<Transition> items_;
};

// Column-oriented copy of a sampled subset.
struct TransitionBatch {
  std::vector<int> queries;
  Eigen::MatrixXd actions;  // kNumRankingParams x m
  Eigen::VectorXd rewards;
  std::vector<int> next_queries;  // 0 on terminal rows
  std::vector<bool> terminal;

  int size() const { return static_cast<int>(queries.size()); }
  static TransitionBatch From(std::span<const Transition> ts);
};

// The four networks' weights at one server version.
struct ServerSnapshot {
  long version = 0;
  ParamVector actor;
  ParamVector critic;
  ParamVector actor_target;
  ParamVector critic_target;
};

struct GradientMessage {
  int worker_id = 0;
  long version = 0;  // snapshot version the gradients were computed against
  long step = 0;
  // Gradient of the summed critic loss (descent direction).
  ParamVector critic_grad;
  // Summed dQ(s, pi(s))/d theta_pi (ascent direction).
  ParamVector actor_grad;
  double critic_loss = 0.0;  // summed over the batch
  int batch_size = 0;
};

// Network shapes shared by workers and server.
struct DdpgNets {
  DdpgNets(const DdpgConfig& cfg, int num_queries, ActionBox box = ActionBox{});
  Actor actor;
  Critic critic;
};

// r + gamma * Q'(s', pi'(s')) with Q* = r on terminal rows.
Eigen::VectorXd CriticTargets(const DdpgNets& nets, const TransitionBatch& batch,
                              const ParamVector& actor_target,
                              const ParamVector& critic_target, double gamma);

// Critic loss and both gradients for one batch. Never touches the server.
// Throws NumericError with a diagnostic when the loss is not finite.
GradientMessage WorkerStep(const DdpgNets& nets, const ServerSnapshot& snapshot,
                           const TransitionBatch& batch, double gamma,
                           int worker_id = 0, long step = 0);

// Mean per-sample critic loss 0.5 (Q - Q*)^2 of one batch under fixed
// parameters; no gradients are formed.
double CriticLoss(const DdpgNets& nets, const ServerSnapshot& snapshot,
                  const TransitionBatch& batch, double gamma);

// Holds the authoritative parameters. Thread-safe.
class ParameterServer {
 public:
  ParameterServer(ServerSnapshot initial, const DdpgConfig& cfg);

  std::shared_ptr<const ServerSnapshot> Snapshot() const;
  long version() const;

  // Accumulates the message; every update_period accepted messages applies
  // the mean gradients with plain SGD, soft-updates both targets and bumps
  // the version. Returns false when the message is too stale. Throws
  // ProtocolError on layout mismatch.
  bool Receive(const GradientMessage& msg);

  long accepted() const;
  long dropped() const;

 private:
  mutable std::mutex mu_;
  std::shared_ptr<const ServerSnapshot> current_;
  ParamVector critic_acc_;
  ParamVector actor_acc_;
  int pending_ = 0;
  long accepted_ = 0;
  long dropped_ = 0;
  int update_period_;
  int max_staleness_;
  double actor_lr_;
  double critic_lr_;
  double tau_;
};

// Feeds messages to the server in order; returns the resulting version.
long ServerApply(ParameterServer& server, std::span<const GradientMessage> messages);

struct TrainLogRow {
  long step = 0;
  double loss = 0.0;  // mean per-sample critic loss since the previous row
  double reward = 0.0;
  double ctr = 0.0;
  double ppc = 0.0;
  double rpm = 0.0;
};

struct TrainResult {
  ParamVector actor;
  ParamVector critic;
  std::vector<TrainLogRow> log;
  long steps = 0;
  long server_version = 0;
  bool diverged = false;
  std::string diagnostic;

  // First logged step whose reward reaches threshold.
  std::optional<long> StepsToReward(double threshold) const;
  double final_reward() const { return log.empty() ? 0.0 : log.back().reward; }
};

// Seeds: initial weights come from (cfg.seed, "ddpg-init"), worker i draws
// from (cfg.seed, "ddpg-worker", i).
ServerSnapshot InitialSnapshot(const DdpgNets& nets, const DdpgConfig& cfg);

// Offline training from dataset, or live training when cfg.live is set (the
// dataset then only seeds the replay buffers and may be empty). Evaluates
// the actor every eval_interval worker steps with eval_cfg.
TrainResult Train(const Market& market, std::span<const Transition> dataset,
                  const DdpgConfig& cfg, const SessionConfig& eval_cfg,
                  const RewardConfig& reward_cfg);

// CSV columns: step,loss,reward,ctr,ppc,rpm.
void WriteConvergenceCsv(const std::string& path, std::span<const TrainLogRow> log);
std::vector<TrainLogRow> ReadConvergenceCsv(const std::string& path);

}  // namespace adlab

#endif  // ADLAB_DDPG_H_
