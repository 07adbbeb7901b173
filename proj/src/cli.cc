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

#include "adlab/cli.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "adlab/calibration.h"
#include "adlab/csv.h"
#include "adlab/errors.h"
#include "adlab/neural.h"
#include "adlab/rng.h"

#ifndef ADLAB_GIT_DESCRIBE
#define ADLAB_GIT_DESCRIBE "unknown"
#endif

namespace adlab {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

// Everything a stage needs to know about where it reads and writes.
class Workspace {
 public:
  explicit Workspace(const ExperimentConfig& cfg) : cfg_(cfg), dir_(cfg.output_dir) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec || !fs::is_directory(dir_)) {
      throw ConfigError("output_dir " + cfg.output_dir + " is not writable");
    }
  }

  const ExperimentConfig& cfg() const { return cfg_; }

  std::string Input(const std::string& name) {
    inputs_.push_back(name);
    return (dir_ / name).string();
  }
  std::string Output(const std::string& name) {
    outputs_.push_back(name);
    return (dir_ / name).string();
  }
  bool Exists(const std::string& name) const { return fs::exists(dir_ / name); }

  // The calibrated market when one exists, else the generated one.
  Market WorkingMarket() {
    const char* name = Exists("market_calibrated.csv") ? "market_calibrated.csv" : "market.csv";
    return ReadMarketCsv(Input(name), cfg_.market);
  }

  void WriteManifest(const std::string& command) const {
    json m = {{"command", command},
              {"version", VersionString()},
              {"config_hash", ConfigHash(cfg_)},
              {"master_seed", cfg_.master_seed},
              {"inputs", inputs_},
              {"outputs", outputs_},
              {"config", json::parse(ConfigJson(cfg_))}};
    const fs::path path = dir_ / ("manifest_" + command + ".json");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << m.dump(2) << '\n';
  }

 private:
  const ExperimentConfig& cfg_;
  fs::path dir_;
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
};

std::ofstream OpenCsv(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  return out;
}

std::string F(double v) { return csv::FormatDouble(v); }

// One evaluated policy with the raw totals behind its ratios.
struct EvalRow {
  std::string policy;
  Evaluation ev;
};

const char* kEvalHeader =
    "policy,mean_reward,reward_stderr,episodes,impressions,clicks,conversions,revenue,gmv,"
    "ctr,ppc,rpm\n";

void WriteEvalCsv(const std::string& path, std::span<const EvalRow> rows) {
  auto out = OpenCsv(path);
  out << kEvalHeader;
  for (const auto& r : rows) {
    const Metrics& m = r.ev.metrics;
    out << r.policy << ',' << F(r.ev.mean_reward) << ',' << F(r.ev.reward_stderr) << ','
        << r.ev.episodes << ',' << m.impressions << ',' << m.clicks << ',' << m.conversions
        << ',' << F(m.revenue) << ',' << F(m.gmv) << ',' << F(m.ctr) << ',' << F(m.ppc)
        << ',' << F(m.rpm) << '\n';
  }
}

std::map<std::string, Evaluation> ReadEvalCsv(const std::string& path) {
  const csv::Table t = csv::ReadFile(path);
  std::map<std::string, Evaluation> out;
  const int policy = t.Column("policy");
  for (const auto& row : t.rows) {
    Evaluation ev;
    ev.mean_reward = csv::ParseDouble(row[t.Column("mean_reward")]);
    ev.reward_stderr = csv::ParseDouble(row[t.Column("reward_stderr")]);
    ev.episodes = static_cast<int>(csv::ParseLong(row[t.Column("episodes")]));
    Metrics& m = ev.metrics;
    m.impressions = csv::ParseLong(row[t.Column("impressions")]);
    m.clicks = csv::ParseLong(row[t.Column("clicks")]);
    m.conversions = csv::ParseLong(row[t.Column("conversions")]);
    m.revenue = csv::ParseDouble(row[t.Column("revenue")]);
    m.gmv = csv::ParseDouble(row[t.Column("gmv")]);
    m.ctr = csv::ParseDouble(row[t.Column("ctr")]);
    m.ppc = csv::ParseDouble(row[t.Column("ppc")]);
    m.rpm = csv::ParseDouble(row[t.Column("rpm")]);
    out[row[policy]] = ev;
  }
  return out;
}

const Evaluation& Need(const std::map<std::string, Evaluation>& rows, const std::string& key,
                       const std::string& file) {
  auto it = rows.find(key);
  if (it == rows.end()) throw MissingArtifactError(file + " has no row '" + key + "'");
  return it->second;
}

std::optional<long> StepsTo(std::span<const TrainLogRow> log, double threshold) {
  for (const auto& r : log) {
    if (r.reward >= threshold) return r.step;
  }
  return std::nullopt;
}

void ThrowIfDiverged(const TrainResult& r, const std::string& what) {
  if (r.diverged) throw NumericError(what + " diverged: " + r.diagnostic);
}

std::string CriticFile(HeadType head) {
  return head == HeadType::kCriticPlain ? "convergence_plain.csv" : "convergence_dueling.csv";
}

// ---- stages ----

void GenMarketStage(Workspace& ws, std::ostream& log) {
  const Market market = GenerateMarket(ws.cfg().market);
  WriteMarketCsv(ws.Output("market.csv"), market);
  log << "gen-market: " << market.num_queries() << " queries, "
      << ws.cfg().market.ads_per_query << " ads each\n";
}

void CalibrateStage(Workspace& ws, std::ostream& log) {
  const auto& cfg = ws.cfg();
  const Market market = ReadMarketCsv(ws.Input("market.csv"), cfg.market);
  const ClickLog clicks = CollectClickLog(market, cfg.pipeline.calibration_impressions,
                                          DeriveSeed(cfg.master_seed, "calibration"));
  if (clicks.ctr.empty()) throw InputError("calibrate: no impressions were logged");
  const CalibrationMap ctr_map = FitIsotonic(clicks.ctr);
  // Without a single click nothing is known about conversion, so the cvr map
  // is the identity.
  const CalibrationMap cvr_map = clicks.cvr.empty()
                                     ? CalibrationMap{{0.0, 1.0}, {0.0, 1.0}, {1.0, 1.0}}
                                     : FitIsotonic(clicks.cvr);
  WriteCalibrationCsv(ws.Output("calibration_ctr.csv"), ctr_map);
  WriteCalibrationCsv(ws.Output("calibration_cvr.csv"), cvr_map);
  WriteMarketCsv(ws.Output("market_calibrated.csv"), CalibrateMarket(market, ctr_map, cvr_map));

  auto out = OpenCsv(ws.Output("calibration_error.csv"));
  out << "target,points,raw_wse,calibrated_wse\n";
  const double ctr_raw = WeightedSquaredError(clicks.ctr, nullptr);
  const double ctr_cal = WeightedSquaredError(clicks.ctr, &ctr_map);
  out << "ctr," << clicks.ctr.size() << ',' << F(ctr_raw) << ',' << F(ctr_cal) << '\n';
  out << "cvr," << clicks.cvr.size() << ',' << F(WeightedSquaredError(clicks.cvr, nullptr))
      << ',' << F(WeightedSquaredError(clicks.cvr, &cvr_map)) << '\n';
  log << fmt::format("calibrate: ctr weighted squared error {:.6g} -> {:.6g}\n", ctr_raw,
                     ctr_cal);
}

void SimulateStage(Workspace& ws, std::ostream& log) {
  const auto& cfg = ws.cfg();
  const Market market = ws.WorkingMarket();
  Rng rng = MakeRng(cfg.master_seed, "dataset");
  const auto data = GenerateDataset(
      market, UniformRandomPolicy(ActionBox{}, DeriveSeed(cfg.master_seed, "behavior")),
      cfg.pipeline.dataset_transitions, cfg.session, cfg.reward, rng);
  WriteTransitionsCsv(ws.Output("transitions.csv"), data);
  log << "simulate: " << data.size() << " transitions\n";
}

void GridSearchStage(Workspace& ws, std::ostream& log) {
  const auto& cfg = ws.cfg();
  const Market market = ws.WorkingMarket();
  const GridResult grid = GridSearch(market, cfg.grid, cfg.session, cfg.reward);
  WriteGridSurfaceCsv(ws.Output("grid_surface.csv"), grid.samples);
  {
    auto out = OpenCsv(ws.Output("grid_rounds.csv"));
    out << "round,incumbent_reward\n";
    for (std::size_t r = 0; r < grid.incumbent_by_round.size(); ++r) {
      out << r << ',' << F(grid.incumbent_by_round[r]) << '\n';
    }
  }
  {
    auto out = OpenCsv(ws.Output("oracle_params.csv"));
    out << "a1,a2,a3,a4,a5,grid_reward\n";
    for (double a : grid.best.ToArray()) out << F(a) << ',';
    out << F(grid.best_reward) << '\n';
  }
  // The yardstick is re-measured on the evaluation sessions every learner
  // is scored on.
  const EvalRow row{"oracle", EvaluatePolicy(market, ConstantPolicy(grid.best), cfg.session,
                                             cfg.reward)};
  WriteEvalCsv(ws.Output("eval_oracle.csv"), std::span(&row, 1));
  log << fmt::format("grid-search: {} points, oracle reward {:.6g}\n", grid.samples.size(),
                     row.ev.mean_reward);
}

void TrainDdpgStage(Workspace& ws, std::ostream& log) {
  const auto& cfg = ws.cfg();
  const Market market = ws.WorkingMarket();
  const auto data = ReadTransitionsCsv(ws.Input("transitions.csv"));

  const TrainResult main = Train(market, data, cfg.ddpg, cfg.session, cfg.reward);
  WriteConvergenceCsv(ws.Output("convergence.csv"), main.log);
  ThrowIfDiverged(main, "train-ddpg");
  SaveParams(ws.Output("actor.bin"), main.actor);
  SaveParams(ws.Output("critic.bin"), main.critic);
  const DdpgNets nets(cfg.ddpg, market.num_queries());
  const EvalRow row{"ddpg", EvaluatePolicy(market, nets.actor.AsPolicy(main.actor),
                                           cfg.session, cfg.reward)};
  WriteEvalCsv(ws.Output("eval_ddpg.csv"), std::span(&row, 1));
  log << fmt::format("train-ddpg: {} steps, reward {:.6g}\n", main.steps, row.ev.mean_reward);

  // Paired comparison runs share every seed and differ only in the head or
  // the batch size.
  for (HeadType head : {HeadType::kCriticDueling, HeadType::kCriticPlain}) {
    DdpgConfig c = cfg.ddpg;
    c.critic_spec.head = head;
    c.total_steps = cfg.pipeline.compare_steps;
    const TrainResult r = Train(market, data, c, cfg.session, cfg.reward);
    WriteConvergenceCsv(ws.Output(CriticFile(head)), r.log);
    ThrowIfDiverged(r, "critic comparison");
  }

  ReplayBuffer buffer(data.size());
  buffer.AddAll(data);
  const ServerSnapshot frozen{0, main.actor, main.critic, main.actor, main.critic};
  auto out = OpenCsv(ws.Output("batch_loss.csv"));
  out << "batch_size,resamples,loss_mean,loss_variance\n";
  for (int b : cfg.pipeline.batch_sweep) {
    // Gradients are sums over the batch, so the learning rates are scaled to
    // keep lr * batch_size at its configured value.
    DdpgConfig c = cfg.ddpg;
    const double scale = static_cast<double>(cfg.ddpg.batch_size) / b;
    c.batch_size = b;
    c.actor_lr *= scale;
    c.critic_lr *= scale;
    c.total_steps = cfg.pipeline.compare_steps;
    const TrainResult r = Train(market, data, c, cfg.session, cfg.reward);
    WriteConvergenceCsv(ws.Output(fmt::format("convergence_batch_{}.csv", b)), r.log);
    ThrowIfDiverged(r, fmt::format("batch {} run", b));

    Rng rng = MakeRng(cfg.master_seed, "loss-resample", static_cast<std::uint64_t>(b));
    std::vector<double> losses;
    for (int i = 0; i < cfg.pipeline.loss_resamples; ++i) {
      const auto sample = buffer.Sample(b, rng);
      losses.push_back(
          CriticLoss(nets, frozen, TransitionBatch::From(*sample), cfg.ddpg.gamma));
    }
    double mean = 0.0;
    for (double l : losses) mean += l;
    mean /= losses.size();
    double var = 0.0;
    for (double l : losses) var += (l - mean) * (l - mean);
    var /= losses.size() - 1;
    out << b << ',' << losses.size() << ',' << F(mean) << ',' << F(var) << '\n';
  }
}

void RunEsStage(Workspace& ws, std::ostream& log) {
  const auto& cfg = ws.cfg();
  const Market market = ws.WorkingMarket();
  const Actor actor(cfg.ddpg.actor_spec, market.num_queries());
  const ParamVector trained = LoadParams(ws.Input("actor.bin"));
  RequireSameLayout(trained, actor.Zeros(), "run-es: actor.bin");

  ParamVector degraded = trained;
  Rng rng = MakeRng(cfg.master_seed, "degrade");
  std::normal_distribution<double> noise(0.0, cfg.pipeline.es_degrade_sigma);
  if (cfg.pipeline.es_degrade_sigma > 0.0) {
    for (double& v : degraded.values) v += noise(rng);
  }
  const EsResult es = EsRun(market, actor, degraded, cfg.es, cfg.session, cfg.reward);
  WriteEsTrajectoryCsv(ws.Output("es_trajectory.csv"), es.trajectory);
  SaveParams(ws.Output("actor_es.bin"), es.theta);

  const auto eval = [&](const ParamVector& p) {
    return EvaluatePolicy(market, actor.AsPolicy(p), cfg.session, cfg.reward);
  };
  const std::vector<EvalRow> rows = {
      {"reference", eval(trained)}, {"degraded", eval(degraded)}, {"refined", eval(es.theta)}};
  WriteEvalCsv(ws.Output("eval_es.csv"), rows);
  log << fmt::format("run-es: reward {:.6g} (reference {:.6g}, degraded {:.6g})\n",
                     rows[2].ev.mean_reward, rows[0].ev.mean_reward, rows[1].ev.mean_reward);
}

// rpm recomputed from impressions and revenue must match the stored value,
// and a log's last row must match the standalone evaluation of the same
// parameters.
void CheckRpm(const std::string& what, const Evaluation& ev, std::optional<double> logged) {
  const Metrics& m = ev.metrics;
  const double recomputed = m.impressions > 0 ? 1000.0 * m.revenue / m.impressions : 0.0;
  const auto close = [](double a, double b) {
    return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
  };
  if (!close(recomputed, m.rpm)) {
    throw Error(fmt::format("report: {} rpm {} disagrees with 1000*revenue/impressions {}",
                            what, m.rpm, recomputed));
  }
  if (logged && !close(*logged, recomputed)) {
    throw Error(fmt::format("report: {} logged rpm {} disagrees with recomputed {}", what,
                            *logged, recomputed));
  }
}

void ReportStage(Workspace& ws, std::ostream& log) {
  const auto& cfg = ws.cfg();
  const std::string oracle_file = ws.Input("eval_oracle.csv");
  const std::string ddpg_file = ws.Input("eval_ddpg.csv");
  const auto oracle_rows = ReadEvalCsv(oracle_file);
  const auto ddpg_rows = ReadEvalCsv(ddpg_file);
  const Evaluation& oracle = Need(oracle_rows, "oracle", oracle_file);
  const Evaluation& ddpg = Need(ddpg_rows, "ddpg", ddpg_file);
  const auto convergence = ReadConvergenceCsv(ws.Input("convergence.csv"));
  if (convergence.empty()) throw MissingArtifactError("convergence.csv has no rows");

  CheckRpm("oracle", oracle, std::nullopt);
  CheckRpm("ddpg", ddpg, convergence.back().rpm);

  std::vector<std::pair<std::string, Evaluation>> policies = {{"oracle", oracle},
                                                             {"ddpg", ddpg}};
  std::vector<EsLogRow> trajectory;
  if (ws.Exists("eval_es.csv")) {
    const std::string es_file = ws.Input("eval_es.csv");
    const auto es_rows = ReadEvalCsv(es_file);
    trajectory = ReadEsTrajectoryCsv(ws.Input("es_trajectory.csv"));
    if (trajectory.empty()) throw MissingArtifactError("es_trajectory.csv has no rows");
    for (const char* k : {"reference", "degraded", "refined"}) {
      CheckRpm(std::string("es ") + k, Need(es_rows, k, es_file),
               std::string(k) == "refined" ? std::optional(trajectory.back().rpm)
                                           : std::nullopt);
      policies.emplace_back(std::string("es_") + k, Need(es_rows, k, es_file));
    }

    const double reference = Need(es_rows, "reference", es_file).mean_reward;
    const double degraded = trajectory.front().fitness;
    auto out = OpenCsv(ws.Output("es_trend.csv"));
    out << "iteration,fitness,reference_reward,degraded_reward,gap_recovered,ctr,ppc,rpm\n";
    for (const auto& r : trajectory) {
      const double gap = reference - degraded;
      const double recovered = gap != 0.0 ? (r.fitness - degraded) / gap + 0.0 : 0.0;
      out << r.iteration << ',' << F(r.fitness) << ',' << F(reference) << ',' << F(degraded)
          << ',' << F(recovered) << ',' << F(r.ctr) << ',' << F(r.ppc) << ',' << F(r.rpm)
          << '\n';
    }
  }

  {
    auto out = OpenCsv(ws.Output("report.csv"));
    out << "policy,reward,oracle_reward,ratio,ctr,ppc,rpm\n";
    for (const auto& [name, ev] : policies) {
      out << name << ',' << F(ev.mean_reward) << ',' << F(oracle.mean_reward) << ','
          << F(ev.mean_reward / oracle.mean_reward) << ',' << F(ev.metrics.ctr) << ','
          << F(ev.metrics.ppc) << ',' << F(ev.metrics.rpm) << '\n';
    }
  }

  const double threshold = cfg.pipeline.steps_to_fraction * oracle.mean_reward;
  const auto steps_field = [](std::optional<long> s) {
    return s ? std::to_string(*s) : std::string("-1");
  };
  {
    auto out = OpenCsv(ws.Output("dueling_vs_plain.csv"));
    out << "critic,threshold,steps_to_threshold,final_reward,best_reward,final_ratio\n";
    for (HeadType head : {HeadType::kCriticDueling, HeadType::kCriticPlain}) {
      const auto rows = ReadConvergenceCsv(ws.Input(CriticFile(head)));
      if (rows.empty()) throw MissingArtifactError(CriticFile(head) + " has no rows");
      double best = rows.front().reward;
      for (const auto& r : rows) best = std::max(best, r.reward);
      out << (head == HeadType::kCriticPlain ? "plain" : "dueling") << ',' << F(threshold)
          << ',' << steps_field(StepsTo(rows, threshold)) << ',' << F(rows.back().reward)
          << ',' << F(best) << ',' << F(rows.back().reward / oracle.mean_reward) << '\n';
    }
  }
  {
    const csv::Table loss = csv::ReadFile(ws.Input("batch_loss.csv"));
    auto out = OpenCsv(ws.Output("batch_sweep.csv"));
    out << "batch_size,loss_mean,loss_variance,steps_to_threshold,final_reward,final_ratio\n";
    for (const auto& row : loss.rows) {
      const long b = csv::ParseLong(row[loss.Column("batch_size")]);
      const auto rows = ReadConvergenceCsv(ws.Input(fmt::format("convergence_batch_{}.csv", b)));
      if (rows.empty()) throw MissingArtifactError("empty batch sweep log");
      out << b << ',' << row[loss.Column("loss_mean")] << ','
          << row[loss.Column("loss_variance")] << ',' << steps_field(StepsTo(rows, threshold))
          << ',' << F(rows.back().reward) << ',' << F(rows.back().reward / oracle.mean_reward)
          << '\n';
    }
  }
  log << fmt::format("report: ddpg/oracle = {:.4f}\n", ddpg.mean_reward / oracle.mean_reward);
}

using StageFn = void (*)(Workspace&, std::ostream&);

StageFn FindStage(const std::string& name) {
  static const std::map<std::string, StageFn> kStages = {
      {"gen-market", GenMarketStage}, {"calibrate", CalibrateStage},
      {"simulate", SimulateStage},    {"grid-search", GridSearchStage},
      {"train-ddpg", TrainDdpgStage}, {"run-es", RunEsStage},
      {"report", ReportStage}};
  auto it = kStages.find(name);
  if (it == kStages.end()) throw UsageError("unknown subcommand " + name);
  return it->second;
}

}  // namespace

std::string VersionString() {
  return std::string("adlab ") + kVersion + "+" + ADLAB_GIT_DESCRIBE;
}

void WriteMarketCsv(const std::string& path, const Market& market) {
  auto out = OpenCsv(path);
  out << "query_id,ad_id,bid,price,true_ctr,true_cvr,pred_ctr,pred_cvr\n";
  for (int q = 0; q < market.num_queries(); ++q) {
    for (const auto& c : market.candidates(q)) {
      out << q << ',' << c.ad_id << ',' << F(c.bid) << ',' << F(c.price) << ','
          << F(c.true_ctr) << ',' << F(c.true_cvr) << ',' << F(c.pred_ctr) << ','
          << F(c.pred_cvr) << '\n';
    }
  }
}

Market ReadMarketCsv(const std::string& path, const MarketConfig& config) {
  const csv::Table t = csv::ReadFile(path);
  const int col[8] = {t.Column("query_id"), t.Column("ad_id"),    t.Column("bid"),
                      t.Column("price"),    t.Column("true_ctr"), t.Column("true_cvr"),
                      t.Column("pred_ctr"), t.Column("pred_cvr")};
  std::vector<std::vector<AdCandidate>> lists(config.num_queries);
  for (const auto& row : t.rows) {
    const long q = csv::ParseLong(row[col[0]]);
    if (q < 0 || q >= config.num_queries) {
      throw ConfigError(path + ": query id " + std::to_string(q) + " does not fit the config");
    }
    AdCandidate c;
    c.ad_id = static_cast<int>(csv::ParseLong(row[col[1]]));
    c.bid = csv::ParseDouble(row[col[2]]);
    c.price = csv::ParseDouble(row[col[3]]);
    c.true_ctr = csv::ParseDouble(row[col[4]]);
    c.true_cvr = csv::ParseDouble(row[col[5]]);
    c.pred_ctr = csv::ParseDouble(row[col[6]]);
    c.pred_cvr = csv::ParseDouble(row[col[7]]);
    lists[q].push_back(c);
  }
  return Market(config, std::move(lists));
}

void RunStage(const std::string& name, const ExperimentConfig& cfg, std::ostream& log) {
  const StageFn fn = FindStage(name);
  Workspace ws(cfg);
  fn(ws, log);
  ws.WriteManifest(name);
}

int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Search-ad ranking lab: GSP auctions, DDPG, ES and a grid oracle.", "adlab"};
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool single_thread = false;
  app.add_option("--config", config_path, "TOML experiment config (defaults when omitted)");
  app.add_option("--seed", seed, "master seed; every component seed derives from it");
  app.add_option("--out", out_dir, "output directory");
  app.add_flag("--single-thread", single_thread, "deterministic single-threaded mode");
  app.set_version_flag("--version", VersionString());
  app.require_subcommand(1, 1);
  app.fallthrough();
  for (const auto& name : Subcommands()) app.add_subcommand(name, "run the " + name + " stage");
  app.add_subcommand("pipeline", "run every stage in order");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << VersionString() << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "adlab: " << e.what() << "\n\n" << app.help();
    return kExitBadConfig;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    ExperimentConfig cfg = config_path.empty() ? ParseConfig("") : LoadConfig(config_path);
    if (seed) {
      cfg.master_seed = *seed;
      cfg.DeriveSeeds();
    }
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (single_thread) {
      cfg.ddpg.single_thread = true;
      cfg.es.single_thread = true;
      cfg.grid.single_thread = true;
    }
    cfg.Validate();

    if (command == "pipeline") {
      for (const auto& name : Subcommands()) RunStage(name, cfg, out);
    } else {
      RunStage(command, cfg, out);
    }
    return kExitOk;
  } catch (const MissingArtifactError& e) {
    err << "adlab " << command << ": missing artifact: " << e.what() << '\n';
    return kExitMissingArtifact;
  } catch (const ConfigError& e) {
    err << "adlab " << command << ": bad config: " << e.what() << '\n';
    return kExitBadConfig;
  } catch (const UsageError& e) {
    err << "adlab " << command << ": " << e.what() << '\n';
    return kExitBadConfig;
  } catch (const NumericError& e) {
    err << "adlab " << command << ": numeric failure: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const std::exception& e) {
    err << "adlab " << command << ": " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace adlab
