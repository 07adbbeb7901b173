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

#include "adlab/ddpg.h"

#include <atomic>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

#include "adlab/csv.h"
#include "adlab/errors.h"

namespace adlab {

void DdpgConfig::Validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("ddpg: gamma must lie in [0, 1)");
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("ddpg: tau must lie in (0, 1]");
  if (batch_size < 1) throw ConfigError("ddpg: batch_size must be >= 1");
  if (update_period < 1) throw ConfigError("ddpg: update_period must be >= 1");
  if (!(actor_lr > 0.0) || !(critic_lr > 0.0)) {
    throw ConfigError("ddpg: learning rates must be positive");
  }
  if (workers < 1) throw ConfigError("ddpg: workers must be >= 1");
  if (total_steps < 1) throw ConfigError("ddpg: total_steps must be >= 1");
  if (max_staleness < 0) throw ConfigError("ddpg: max_staleness must be >= 0");
  if (eval_interval < 1) throw ConfigError("ddpg: eval_interval must be >= 1");
  if (!(exploration_sigma >= 0.0)) throw ConfigError("ddpg: exploration_sigma must be >= 0");
  if (replay_capacity < static_cast<std::size_t>(batch_size)) {
    throw ConfigError("ddpg: replay_capacity must hold at least one batch");
  }
  actor_spec.Validate();
  critic_spec.Validate();
  if (actor_spec.head != HeadType::kActor) throw ConfigError("ddpg: actor_spec needs the actor head");
  if (critic_spec.head == HeadType::kActor) {
    throw ConfigError("ddpg: critic_spec needs a critic head");
  }
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::size_t min_ready)
    : capacity_(capacity), min_ready_(std::max<std::size_t>(min_ready, 1)) {
  if (capacity_ < 1) throw ConfigError("replay buffer: capacity must be >= 1");
  items_.reserve(std::min<std::size_t>(capacity_, 1 << 20));
}

void ReplayBuffer::Add(const Transition& t) {
  if (items_.size() < capacity_) {
    items_.push_back(t);
  } else {
    items_[cursor_] = t;
  }
  cursor_ = (cursor_ + 1) % capacity_;
}

void ReplayBuffer::AddAll(std::span<const Transition> ts) {
  for (const auto& t : ts) Add(t);
}

std::optional<std::vector<Transition>> ReplayBuffer::Sample(std::size_t m,
                                                             Rng& rng) const {
  if (items_.size() < min_ready_) return std::nullopt;
  std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
  std::vector<Transition> out;
  out.reserve(m);
  for (std::size_t i = 0; i < m; ++i) out.push_back(items_[pick(rng)]);
  return out;
}

TransitionBatch TransitionBatch::From(std::span<const Transition> ts) {
  TransitionBatch b;
  const auto m = static_cast<Eigen::Index>(ts.size());
  b.queries.resize(ts.size());
  b.next_queries.resize(ts.size());
  b.terminal.resize(ts.size());
  b.actions.resize(kNumRankingParams, m);
  b.rewards.resize(m);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const Transition& t = ts[i];
    b.queries[i] = t.state.query_id;
    const auto a = t.action.ToArray();
    for (int d = 0; d < kNumRankingParams; ++d) {
      b.actions(d, static_cast<Eigen::Index>(i)) = a[d];
    }
    b.rewards[static_cast<Eigen::Index>(i)] = t.reward;
    b.terminal[i] = t.terminal();
    b.next_queries[i] = t.terminal() ? 0 : t.next_state->query_id;
  }
  return b;
}

DdpgNets::DdpgNets(const DdpgConfig& cfg, int num_queries, ActionBox box)
    : actor(cfg.actor_spec, num_queries, box),
      critic(cfg.critic_spec, num_queries, box) {}

Eigen::VectorXd CriticTargets(const DdpgNets& nets, const TransitionBatch& batch,
                              const ParamVector& actor_target,
                              const ParamVector& critic_target, double gamma) {
  Eigen::VectorXd targets = batch.rewards;
  if (gamma == 0.0) return targets;
  const Eigen::MatrixXd next_actions =
      nets.actor.Forward(actor_target, batch.next_queries, nullptr);
  const Eigen::RowVectorXd next_q =
      nets.critic.Forward(critic_target, batch.next_queries, next_actions, nullptr);
  for (int i = 0; i < batch.size(); ++i) {
    if (!batch.terminal[i]) targets[i] += gamma * next_q[i];
  }
  return targets;
}

double CriticLoss(const DdpgNets& nets, const ServerSnapshot& snapshot,
                  const TransitionBatch& batch, double gamma) {
  if (batch.size() == 0) throw InputError("critic loss of an empty batch");
  const Eigen::VectorXd targets = CriticTargets(
      nets, batch, snapshot.actor_target, snapshot.critic_target, gamma);
  const Eigen::RowVectorXd q =
      nets.critic.Forward(snapshot.critic, batch.queries, batch.actions, nullptr);
  return 0.5 * (q - targets.transpose()).squaredNorm() / batch.size();
}

GradientMessage WorkerStep(const DdpgNets& nets, const ServerSnapshot& snapshot,
                           const TransitionBatch& batch, double gamma,
                           int worker_id, long step) {
  GradientMessage msg;
  msg.worker_id = worker_id;
  msg.version = snapshot.version;
  msg.step = step;
  msg.batch_size = batch.size();

  const Eigen::VectorXd targets = CriticTargets(
      nets, batch, snapshot.actor_target, snapshot.critic_target, gamma);
  Critic::Cache critic_cache;
  const Eigen::RowVectorXd q =
      nets.critic.Forward(snapshot.critic, batch.queries, batch.actions, &critic_cache);
  const Eigen::RowVectorXd diff = q - targets.transpose();
  msg.critic_loss = 0.5 * diff.squaredNorm();
  if (!std::isfinite(msg.critic_loss)) {
    std::ostringstream os;
    os << "critic loss is not finite at worker " << worker_id << " step " << step
       << " version " << snapshot.version << " (max |Q| " << q.cwiseAbs().maxCoeff()
       << ", max |Q*| " << targets.cwiseAbs().maxCoeff() << ")";
    throw NumericError(os.str());
  }
  msg.critic_grad = snapshot.critic.ZerosLike();
  nets.critic.Backward(snapshot.critic, critic_cache, diff, &msg.critic_grad);

  // Deterministic policy gradient through the online critic.
  Actor::Cache actor_cache;
  const Eigen::MatrixXd pi = nets.actor.Forward(snapshot.actor, batch.queries, &actor_cache);
  Critic::Cache pi_cache;
  nets.critic.Forward(snapshot.critic, batch.queries, pi, &pi_cache);
  const Eigen::MatrixXd dq_da = nets.critic.Backward(
      snapshot.critic, pi_cache, Eigen::RowVectorXd::Ones(batch.size()), nullptr);
  msg.actor_grad = snapshot.actor.ZerosLike();
  nets.actor.Backward(snapshot.actor, actor_cache, dq_da, &msg.actor_grad);

  if (!msg.critic_grad.AllFinite() || !msg.actor_grad.AllFinite()) {
    throw NumericError("non-finite gradients at worker " + std::to_string(worker_id) +
                       " step " + std::to_string(step));
  }
  return msg;
}

ParameterServer::ParameterServer(ServerSnapshot initial, const DdpgConfig& cfg)
    : update_period_(cfg.update_period),
      max_staleness_(cfg.max_staleness),
      actor_lr_(cfg.actor_lr),
      critic_lr_(cfg.critic_lr),
      tau_(cfg.tau) {
  RequireSameLayout(initial.actor, initial.actor_target, "parameter server");
  RequireSameLayout(initial.critic, initial.critic_target, "parameter server");
  critic_acc_ = initial.critic.ZerosLike();
  actor_acc_ = initial.actor.ZerosLike();
  current_ = std::make_shared<const ServerSnapshot>(std::move(initial));
}

std::shared_ptr<const ServerSnapshot> ParameterServer::Snapshot() const {
  std::lock_guard<std::mutex> lock(mu_);
  return current_;
}

long ParameterServer::version() const {
  std::lock_guard<std::mutex> lock(mu_);
  return current_->version;
}

long ParameterServer::accepted() const {
  std::lock_guard<std::mutex> lock(mu_);
  return accepted_;
}

long ParameterServer::dropped() const {
  std::lock_guard<std::mutex> lock(mu_);
  return dropped_;
}

bool ParameterServer::Receive(const GradientMessage& msg) {
  std::lock_guard<std::mutex> lock(mu_);
  if (!SameLayout(msg.critic_grad, critic_acc_) ||
      !SameLayout(msg.actor_grad, actor_acc_)) {
    throw ProtocolError("gradient message layout does not match the server");
  }
  if (current_->version - msg.version > max_staleness_) {
    ++dropped_;
    return false;
  }
  ++accepted_;
  critic_acc_.values += msg.critic_grad.values;
  actor_acc_.values += msg.actor_grad.values;
  if (++pending_ < update_period_) return true;

  auto next = std::make_shared<ServerSnapshot>(*current_);
  const double scale = 1.0 / pending_;
  next->critic.values -= (critic_lr_ * scale) * critic_acc_.values;
  next->actor.values += (actor_lr_ * scale) * actor_acc_.values;
  SoftUpdate(next->critic_target, next->critic, tau_);
  SoftUpdate(next->actor_target, next->actor, tau_);
  ++next->version;
  critic_acc_.values.setZero();
  actor_acc_.values.setZero();
  pending_ = 0;
  current_ = std::move(next);
  return true;
}

long ServerApply(ParameterServer& server, std::span<const GradientMessage> messages) {
  for (const auto& m : messages) server.Receive(m);
  return server.version();
}

std::optional<long> TrainResult::StepsToReward(double threshold) const {
  for (const auto& row : log) {
    if (row.reward >= threshold) return row.step;
  }
  return std::nullopt;
}

ServerSnapshot InitialSnapshot(const DdpgNets& nets, const DdpgConfig& cfg) {
  Rng rng = MakeRng(cfg.seed, "ddpg-init");
  ServerSnapshot s;
  s.actor = nets.actor.Init(rng);
  s.critic = nets.critic.Init(rng);
  s.actor_target = s.actor;
  s.critic_target = s.critic;
  return s;
}

namespace {

// One user session advanced one page at a time.
class LiveSession {
 public:
  LiveSession(const Market& market, const SessionConfig& session,
              const RewardConfig& reward, std::uint64_t seed)
      : market_(market), session_(session), reward_(reward), rng_(seed) {
    ctx_ = SampleContext(market_, rng_.contexts, 0);
  }

  const SearchContext& context() const { return ctx_; }

  Transition Step(const RankingParams& action) {
    const StepOutcome out = SimulateStep(market_, ctx_, action, reward_, rng_.users);
    Transition t{ctx_, action, out.reward, std::nullopt};
    if (ctx_.session_pos + 1 < session_.session_len) {
      t.next_state = SampleContext(market_, rng_.contexts, ctx_.session_pos + 1);
      ctx_ = *t.next_state;
    } else {
      ctx_ = SampleContext(market_, rng_.contexts, 0);
    }
    return t;
  }

 private:
  const Market& market_;
  SessionConfig session_;
  RewardConfig reward_;
  SessionRng rng_;
  SearchContext ctx_;
};

struct Worker {
  int id = 0;
  Rng rng;
  ReplayBuffer buffer;
  std::optional<LiveSession> live;
};

class Trainer {
 public:
  Trainer(const Market& market, std::span<const Transition> dataset,
          const DdpgConfig& cfg, const SessionConfig& eval_cfg,
          const RewardConfig& reward_cfg)
      : market_(market),
        cfg_(cfg),
        eval_cfg_(eval_cfg),
        reward_cfg_(reward_cfg),
        nets_(cfg, market.num_queries()),
        server_(InitialSnapshot(nets_, cfg), cfg) {
    const std::size_t capacity =
        cfg.live ? cfg.replay_capacity
                 : std::max(cfg.replay_capacity, std::max<std::size_t>(dataset.size(), 1));
    for (int w = 0; w < cfg.workers; ++w) {
      Worker worker{w, MakeRng(cfg.seed, "ddpg-worker", w), ReplayBuffer(capacity),
                    std::nullopt};
      worker.buffer.AddAll(dataset);
      if (cfg.live) {
        SessionConfig session = eval_cfg;
        worker.live.emplace(market_, session, reward_cfg_,
                            DeriveSeed(cfg.seed, "ddpg-live", w));
        // Warm up with box-uniform actions until one batch fits.
        const Policy warmup =
            UniformRandomPolicy(nets_.actor.box(), DeriveSeed(cfg.seed, "ddpg-warmup", w));
        while (worker.buffer.size() < static_cast<std::size_t>(cfg.batch_size)) {
          worker.buffer.Add(worker.live->Step(warmup(worker.live->context())));
        }
      } else if (dataset.empty()) {
        throw InputError("ddpg: offline training needs a non-empty dataset");
      }
      workers_.push_back(std::move(worker));
    }
  }

  TrainResult Run() {
    if (!Evaluate(0)) {
      if (cfg_.single_thread || cfg_.workers == 1) {
        RunSequential();
      } else {
        RunThreaded();
      }
    }
    if (result_.log.back().step != steps_) Evaluate(steps_);
    auto snap = server_.Snapshot();
    result_.actor = snap->actor;
    result_.critic = snap->critic;
    result_.steps = steps_;
    result_.server_version = snap->version;
    return std::move(result_);
  }

 private:
  GradientMessage StepWorker(Worker& w, const ServerSnapshot& snap, long step) {
    if (w.live) {
      RankingParams a = nets_.actor.Act(snap.actor, w.live->context());
      auto v = a.ToArray();
      const ActionBox& box = nets_.actor.box();
      for (int d = 0; d < kNumRankingParams; ++d) {
        std::normal_distribution<double> noise(0.0, cfg_.exploration_sigma * box.Width(d));
        v[d] += noise(w.rng);
      }
      w.buffer.Add(w.live->Step(box.Clip(RankingParams::FromArray(v))));
    }
    auto sample = w.buffer.Sample(static_cast<std::size_t>(cfg_.batch_size), w.rng);
    if (!sample) throw UsageError("ddpg: replay buffer not ready");
    return WorkerStep(nets_, snap, TransitionBatch::From(*sample), cfg_.gamma, w.id, step);
  }

  // Returns true when training should stop.
  bool Consume(const GradientMessage& msg) {
    server_.Receive(msg);
    ++steps_;
    loss_sum_ += msg.critic_loss / std::max(msg.batch_size, 1);
    ++loss_count_;
    if (steps_ % cfg_.eval_interval == 0) return Evaluate(steps_);
    return steps_ >= cfg_.total_steps;
  }

  bool Evaluate(long step) {
    auto snap = server_.Snapshot();
    const Evaluation ev =
        EvaluatePolicy(market_, nets_.actor.AsPolicy(snap->actor), eval_cfg_, reward_cfg_);
    TrainLogRow row;
    row.step = step;
    row.loss = loss_count_ ? loss_sum_ / loss_count_ : 0.0;
    row.reward = ev.mean_reward;
    row.ctr = ev.metrics.ctr;
    row.ppc = ev.metrics.ppc;
    row.rpm = ev.metrics.rpm;
    result_.log.push_back(row);
    loss_sum_ = 0.0;
    loss_count_ = 0;

    if (step > 0 && row.loss > cfg_.divergence_loss) {
      if (++divergent_evals_ >= cfg_.divergence_window) {
        result_.diverged = true;
        std::ostringstream os;
        os << "critic loss " << row.loss << " above " << cfg_.divergence_loss << " for "
           << divergent_evals_ << " consecutive evaluations at step " << step;
        result_.diagnostic = os.str();
        return true;
      }
    } else {
      divergent_evals_ = 0;
    }
    if (cfg_.stop_reward && row.reward >= *cfg_.stop_reward) return true;
    return step >= cfg_.total_steps;
  }

  void RunSequential() {
    while (steps_ < cfg_.total_steps) {
      Worker& w = workers_[steps_ % workers_.size()];
      auto snap = server_.Snapshot();
      if (Consume(StepWorker(w, *snap, steps_))) break;
    }
  }

  void RunThreaded() {
    std::mutex mu;
    std::condition_variable cv;
    std::deque<GradientMessage> queue;
    std::atomic<bool> stop{false};
    std::exception_ptr failure;
    const std::size_t max_queue = workers_.size();

    std::vector<std::thread> threads;
    for (auto& w : workers_) {
      threads.emplace_back([&, worker = &w] {
        long local = 0;
        try {
          while (!stop.load()) {
            auto snap = server_.Snapshot();
            GradientMessage msg = StepWorker(*worker, *snap, local++);
            std::unique_lock<std::mutex> lock(mu);
            cv.wait(lock, [&] { return stop.load() || queue.size() < max_queue; });
            if (stop.load()) break;
            queue.push_back(std::move(msg));
            cv.notify_all();
          }
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!failure) failure = std::current_exception();
          stop.store(true);
          cv.notify_all();
        }
      });
    }

    while (true) {
      GradientMessage msg;
      {
        std::unique_lock<std::mutex> lock(mu);
        cv.wait(lock, [&] { return stop.load() || !queue.empty(); });
        if (queue.empty()) break;
        msg = std::move(queue.front());
        queue.pop_front();
        cv.notify_all();
      }
      if (Consume(msg)) break;
    }
    {
      std::lock_guard<std::mutex> lock(mu);
      stop.store(true);
      cv.notify_all();
    }
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  const Market& market_;
  DdpgConfig cfg_;
  SessionConfig eval_cfg_;
  RewardConfig reward_cfg_;
  DdpgNets nets_;
  ParameterServer server_;
  std::vector<Worker> workers_;
  TrainResult result_;
  long steps_ = 0;
  double loss_sum_ = 0.0;
  long loss_count_ = 0;
  int divergent_evals_ = 0;
};

}  // namespace

TrainResult Train(const Market& market, std::span<const Transition> dataset,
                  const DdpgConfig& cfg, const SessionConfig& eval_cfg,
                  const RewardConfig& reward_cfg) {
  cfg.Validate();
  eval_cfg.Validate();
  Trainer trainer(market, dataset, cfg, eval_cfg, reward_cfg);
  return trainer.Run();
}

void WriteConvergenceCsv(const std::string& path, std::span<const TrainLogRow> log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << "step,loss,reward,ctr,ppc,rpm\n";
  for (const auto& r : log) {
    out << r.step << ',' << csv::FormatDouble(r.loss) << ','
        << csv::FormatDouble(r.reward) << ',' << csv::FormatDouble(r.ctr) << ','
        << csv::FormatDouble(r.ppc) << ',' << csv::FormatDouble(r.rpm) << '\n';
  }
}

std::vector<TrainLogRow> ReadConvergenceCsv(const std::string& path) {
  const csv::Table t = csv::ReadFile(path);
  const int c[6] = {t.Column("step"), t.Column("loss"), t.Column("reward"),
                    t.Column("ctr"),  t.Column("ppc"),  t.Column("rpm")};
  std::vector<TrainLogRow> log;
  for (const auto& row : t.rows) {
    log.push_back({csv::ParseLong(row[c[0]]), csv::ParseDouble(row[c[1]]),
                   csv::ParseDouble(row[c[2]]), csv::ParseDouble(row[c[3]]),
                   csv::ParseDouble(row[c[4]]), csv::ParseDouble(row[c[5]])});
  }
  return log;
}

}  // namespace adlab
