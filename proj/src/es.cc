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

#include "adlab/es.h"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <thread>

#include "adlab/csv.h"
#include "adlab/errors.h"

namespace adlab {

void EsConfig::Validate() const {
  if (population < 2) throw ConfigError("es: population must be >= 2");
  if (!(sigma > 0.0)) throw ConfigError("es: sigma must be positive");
  if (!(learning_rate >= 0.0)) throw ConfigError("es: learning_rate must be >= 0");
  if (iterations < 0) throw ConfigError("es: iterations must be >= 0");
  if (episodes_per_fitness < 1) throw ConfigError("es: episodes_per_fitness must be >= 1");
  if (mirrored && population % 2 != 0) {
    throw ConfigError("es: mirrored sampling needs an even population");
  }
}

std::vector<Perturbation> Perturb(const ParamVector& theta, const EsConfig& cfg,
                                  Rng& rng) {
  cfg.Validate();
  std::normal_distribution<double> noise(0.0, cfg.sigma);
  std::vector<Perturbation> out;
  out.reserve(cfg.population);
  const int draws = cfg.mirrored ? cfg.population / 2 : cfg.population;
  for (int i = 0; i < draws; ++i) {
    Perturbation p{theta.ZerosLike(), 0.0};
    for (Eigen::Index j = 0; j < p.epsilon.values.size(); ++j) {
      p.epsilon.values[j] = noise(rng);
    }
    if (cfg.mirrored) {
      Perturbation neg{p.epsilon, 0.0};
      neg.epsilon.values = -p.epsilon.values;
      out.push_back(std::move(p));
      out.push_back(std::move(neg));
    } else {
      out.push_back(std::move(p));
    }
  }
  return out;
}

std::vector<FitnessMessage> EvaluatePopulation(
    const Market& market, const Actor& actor, const ParamVector& theta,
    std::span<const Perturbation> candidates, const EsConfig& cfg,
    const SessionConfig& session, const RewardConfig& reward_cfg,
    std::uint64_t eval_seed) {
  SessionConfig fitness_cfg = session;
  fitness_cfg.episodes_per_eval = cfg.episodes_per_fitness;
  fitness_cfg.seed = eval_seed;
  std::vector<FitnessMessage> results(candidates.size());

  const auto evaluate = [&](std::size_t i) {
    ParamVector p = theta;
    p.values += candidates[i].epsilon.values;
    const Evaluation ev =
        EvaluatePolicy(market, actor.AsPolicy(p), fitness_cfg, reward_cfg);
    results[i] = FitnessMessage{i, ev.mean_reward};
  };

  const std::size_t threads =
      cfg.single_thread ? 1
                        : std::min<std::size_t>(candidates.size(),
                                                std::max(1u, std::thread::hardware_concurrency()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < candidates.size(); ++i) evaluate(i);
    return results;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < candidates.size(); i += threads) evaluate(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

std::vector<double> ShapeFitness(std::span<const double> raw, FitnessShaping shaping) {
  std::vector<double> out(raw.begin(), raw.end());
  if (shaping == FitnessShaping::kNone || raw.size() < 2) return out;
  std::vector<std::size_t> order(raw.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t l, std::size_t r) { return raw[l] < raw[r]; });
  const double denom = static_cast<double>(raw.size() - 1);
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    out[order[rank]] = static_cast<double>(rank) / denom - 0.5;
  }
  return out;
}

ParamVector EsUpdate(const ParamVector& theta,
                     std::span<const Perturbation> perturbations,
                     const EsConfig& cfg) {
  if (perturbations.size() < 2) throw InputError("es update: need >= 2 perturbations");
  std::vector<double> raw;
  raw.reserve(perturbations.size());
  for (const auto& p : perturbations) {
    RequireSameLayout(theta, p.epsilon, "es update");
    raw.push_back(p.fitness);
  }
  const std::vector<double> weights = ShapeFitness(raw, cfg.shaping);
  Eigen::VectorXd step = Eigen::VectorXd::Zero(theta.values.size());
  for (std::size_t i = 0; i < perturbations.size(); ++i) {
    step += weights[i] * perturbations[i].epsilon.values;
  }
  const double n = static_cast<double>(perturbations.size());
  ParamVector next = theta;
  next.values += (cfg.learning_rate / (n * cfg.sigma)) * step;
  return next;
}

EsResult EsRun(const Market& market, const Actor& actor, const ParamVector& initial,
               const EsConfig& cfg, const SessionConfig& eval_cfg,
               const RewardConfig& reward_cfg) {
  cfg.Validate();
  eval_cfg.Validate();
  EsResult result;
  result.theta = initial;
  Rng rng = MakeRng(cfg.seed, "es-noise");

  const auto log = [&](int iteration) {
    const Evaluation ev =
        EvaluatePolicy(market, actor.AsPolicy(result.theta), eval_cfg, reward_cfg);
    result.trajectory.push_back({iteration, ev.mean_reward, ev.metrics.ctr,
                                 ev.metrics.ppc, ev.metrics.rpm});
  };

  log(0);
  for (int k = 0; k < cfg.iterations; ++k) {
    std::vector<Perturbation> population = Perturb(result.theta, cfg, rng);
    const std::vector<FitnessMessage> fitness =
        EvaluatePopulation(market, actor, result.theta, population, cfg, eval_cfg,
                           reward_cfg, DeriveSeed(cfg.seed, "es-fitness", k));
    for (const auto& msg : fitness) population[msg.candidate].fitness = msg.reward;
    result.theta = EsUpdate(result.theta, population, cfg);
    log(k + 1);
  }
  return result;
}

void WriteEsTrajectoryCsv(const std::string& path, std::span<const EsLogRow> rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << "iteration,fitness,ctr,ppc,rpm\n";
  for (const auto& r : rows) {
    out << r.iteration << ',' << csv::FormatDouble(r.fitness) << ','
        << csv::FormatDouble(r.ctr) << ',' << csv::FormatDouble(r.ppc) << ','
        << csv::FormatDouble(r.rpm) << '\n';
  }
}

std::vector<EsLogRow> ReadEsTrajectoryCsv(const std::string& path) {
  const csv::Table t = csv::ReadFile(path);
  const int c[5] = {t.Column("iteration"), t.Column("fitness"), t.Column("ctr"),
                    t.Column("ppc"), t.Column("rpm")};
  std::vector<EsLogRow> rows;
  for (const auto& row : t.rows) {
    rows.push_back({static_cast<int>(csv::ParseLong(row[c[0]])),
                    csv::ParseDouble(row[c[1]]), csv::ParseDouble(row[c[2]]),
                    csv::ParseDouble(row[c[3]]), csv::ParseDouble(row[c[4]])});
  }
  return rows;
}

}  // namespace adlab
