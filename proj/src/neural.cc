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

#include "adlab/neural.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "json.hpp"

#include "adlab/errors.h"

namespace adlab {
namespace {

constexpr char kCheckpointMagic[8] = {'A', 'D', 'L', 'A', 'B', 'P', 'V', '1'};

// tanh through the vectorized exp; absolute error near 1e-16.
Eigen::MatrixXd Tanh(const Eigen::MatrixXd& z) {
  return (1.0 - 2.0 / ((2.0 * z.array()).exp() + 1.0)).matrix();
}

Eigen::MatrixXd Gather(const Eigen::Map<const Eigen::MatrixXd>& table,
                       std::span<const int> queries) {
  Eigen::MatrixXd out(table.rows(), static_cast<Eigen::Index>(queries.size()));
  for (std::size_t b = 0; b < queries.size(); ++b) {
    const int q = queries[b];
    if (q < 0 || q >= table.cols()) {
      throw LookupError("embedding: unknown query id " + std::to_string(q));
    }
    out.col(static_cast<Eigen::Index>(b)) = table.col(q);
  }
  return out;
}

void ScatterAdd(Eigen::Map<Eigen::MatrixXd> table, std::span<const int> queries,
                const Eigen::MatrixXd& d_embed) {
  for (std::size_t b = 0; b < queries.size(); ++b) {
    table.col(queries[b]) += d_embed.col(static_cast<Eigen::Index>(b));
  }
}

void RequireFinite(const ParamVector& params, const char* what) {
  if (!params.AllFinite()) {
    throw NumericError(std::string(what) + ": non-finite weights");
  }
}

void RequireLayout(const ParamVector& params,
                   const std::shared_ptr<const ParamLayout>& layout,
                   const char* what) {
  if (!params.layout || params.size() != layout->size() ||
      (params.layout != layout && !(*params.layout == *layout))) {
    throw UsageError(std::string(what) + ": parameter layout mismatch");
  }
}

void RequireCache(const ParamVector& params, const ParamLayout* cached,
                  Eigen::Index batch, Eigen::Index upstream_cols,
                  const char* what) {
  if (cached == nullptr || params.layout.get() != cached || batch != upstream_cols) {
    throw UsageError(std::string(what) + ": cache does not match this call");
  }
}

// Box-normalized action in [-1, 1].
Eigen::MatrixXd NormalizeActions(const Eigen::MatrixXd& actions,
                                 const ActionBox& box) {
  if (actions.rows() != kNumRankingParams) {
    throw UsageError("critic: actions must have one row per ranking parameter");
  }
  Eigen::MatrixXd u(actions.rows(), actions.cols());
  for (int d = 0; d < kNumRankingParams; ++d) {
    u.row(d) = (actions.row(d).array() - box.lower[d]) * (2.0 / box.Width(d)) - 1.0;
  }
  return u;
}

}  // namespace

QueryIndex QueryIndex::Build(std::span<const int> queries) {
  QueryIndex idx;
  idx.column.resize(queries.size());
  std::vector<int> seen;  // column per query id, grown on demand
  for (std::size_t b = 0; b < queries.size(); ++b) {
    const int q = queries[b];
    if (q < 0) throw LookupError("embedding: unknown query id " + std::to_string(q));
    if (static_cast<std::size_t>(q) >= seen.size()) seen.resize(q + 1, -1);
    if (seen[q] < 0) {
      seen[q] = static_cast<int>(idx.unique.size());
      idx.unique.push_back(q);
    }
    idx.column[b] = seen[q];
  }
  return idx;
}

Eigen::MatrixXd QueryIndex::Expand(const Eigen::MatrixXd& per_unique) const {
  Eigen::MatrixXd out(per_unique.rows(), static_cast<Eigen::Index>(column.size()));
  for (std::size_t b = 0; b < column.size(); ++b) {
    out.col(static_cast<Eigen::Index>(b)) = per_unique.col(column[b]);
  }
  return out;
}

Eigen::MatrixXd QueryIndex::Reduce(const Eigen::MatrixXd& per_batch) const {
  Eigen::MatrixXd out =
      Eigen::MatrixXd::Zero(per_batch.rows(), static_cast<Eigen::Index>(unique.size()));
  for (std::size_t b = 0; b < column.size(); ++b) {
    out.col(column[b]) += per_batch.col(static_cast<Eigen::Index>(b));
  }
  return out;
}

void NetworkSpec::Validate() const {
  if (embedding_dim < 1) throw ConfigError("embedding_dim must be >= 1");
  for (int h : hidden_sizes) {
    if (h < 1) throw ConfigError("hidden sizes must be >= 1");
  }
}

std::size_t ParamLayout::Add(std::string name, int rows, int cols) {
  entries_.push_back(LayoutEntry{std::move(name), size_, rows, cols});
  size_ += entries_.back().size();
  return entries_.size() - 1;
}

Eigen::Map<const Eigen::MatrixXd> ParamVector::Block(std::size_t entry) const {
  const LayoutEntry& e = layout->entry(entry);
  return Eigen::Map<const Eigen::MatrixXd>(values.data() + e.offset, e.rows, e.cols);
}

Eigen::Map<Eigen::MatrixXd> ParamVector::Block(std::size_t entry) {
  const LayoutEntry& e = layout->entry(entry);
  return Eigen::Map<Eigen::MatrixXd>(values.data() + e.offset, e.rows, e.cols);
}

bool SameLayout(const ParamVector& a, const ParamVector& b) {
  if (!a.layout || !b.layout) return false;
  return a.layout == b.layout || *a.layout == *b.layout;
}

void RequireSameLayout(const ParamVector& a, const ParamVector& b,
                       const char* what) {
  if (!SameLayout(a, b) || a.size() != b.size()) {
    throw UsageError(std::string(what) + ": parameter layouts differ");
  }
}

void SoftUpdate(ParamVector& target, const ParamVector& online, double tau) {
  RequireSameLayout(target, online, "soft update");
  if (!(tau >= 0.0 && tau <= 1.0)) {
    throw UsageError("soft update: tau must lie in [0, 1]");
  }
  if (tau == 1.0) {
    target.values = online.values;
    return;
  }
  target.values = (1.0 - tau) * target.values + tau * online.values;
}

void SaveParams(const std::string& path, const ParamVector& params) {
  static_assert(std::endian::native == std::endian::little,
                "checkpoints are written in host order");
  nlohmann::json header;
  header["size"] = params.size();
  header["entries"] = nlohmann::json::array();
  for (const auto& e : params.layout->entries()) {
    header["entries"].push_back(
        {{"name", e.name}, {"offset", e.offset}, {"rows", e.rows}, {"cols", e.cols}});
  }
  const std::string text = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  const std::uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.write(reinterpret_cast<const char*>(params.values.data()),
            static_cast<std::streamsize>(params.size() * sizeof(double)));
}

ParamVector LoadParams(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError("cannot open checkpoint " + path);
  char magic[sizeof(kCheckpointMagic)];
  std::uint64_t len = 0;
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0 ||
      len > (1u << 24)) {
    throw MissingArtifactError("not a parameter checkpoint: " + path);
  }
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  auto layout = std::make_shared<ParamLayout>();
  std::size_t size = 0;
  try {
    const auto header = nlohmann::json::parse(text);
    for (const auto& e : header.at("entries")) {
      const std::size_t idx = layout->Add(e.at("name").get<std::string>(),
                                          e.at("rows").get<int>(),
                                          e.at("cols").get<int>());
      if (layout->entry(idx).offset != e.at("offset").get<std::size_t>()) {
        throw MissingArtifactError("checkpoint layout offsets are inconsistent");
      }
    }
    size = header.at("size").get<std::size_t>();
  } catch (const nlohmann::json::exception& ex) {
    throw MissingArtifactError("corrupt checkpoint header in " + path + ": " + ex.what());
  }
  if (size != layout->size()) {
    throw MissingArtifactError("checkpoint size does not match its layout");
  }
  ParamVector params(std::move(layout));
  in.read(reinterpret_cast<char*>(params.values.data()),
          static_cast<std::streamsize>(size * sizeof(double)));
  if (!in) throw MissingArtifactError("truncated checkpoint " + path);
  return params;
}

Mlp::Mlp(ParamLayout& layout, const std::string& prefix, std::vector<int> sizes,
         Activation activation)
    : sizes_(std::move(sizes)), activation_(activation) {
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const std::string name = prefix + "fc" + std::to_string(l);
    weights_.push_back(layout.Add(name + "/w", sizes_[l + 1], sizes_[l]));
    biases_.push_back(layout.Add(name + "/b", sizes_[l + 1], 1));
  }
}

Eigen::MatrixXd Mlp::Forward(const ParamVector& params, const Eigen::MatrixXd& x,
                             Cache* cache) const {
  if (cache) cache->inputs.clear();
  Eigen::MatrixXd h = x;
  const std::size_t layers = weights_.size();
  for (std::size_t l = 0; l < layers; ++l) {
    Eigen::MatrixXd z = params.Block(weights_[l]) * h;
    z.colwise() += params.Block(biases_[l]).col(0);
    if (cache) cache->inputs.push_back(std::move(h));
    if (l + 1 < layers && activation_ == Activation::kTanh) {
      h = Tanh(z);
    } else {
      h = std::move(z);
    }
  }
  if (cache) cache->output = h;
  return h;
}

Eigen::MatrixXd Mlp::Backward(const ParamVector& params, const Cache& cache,
                              const Eigen::MatrixXd& d_output,
                              ParamVector* grad) const {
  const std::size_t layers = weights_.size();
  if (cache.inputs.size() != layers || d_output.cols() != cache.output.cols() ||
      d_output.rows() != cache.output.rows()) {
    throw UsageError("mlp backward: cache does not match upstream gradient");
  }
  Eigen::MatrixXd d = d_output;
  for (std::size_t l = layers; l-- > 0;) {
    if (l + 1 < layers && activation_ == Activation::kTanh) {
      // Post-activation of layer l is the input of layer l + 1.
      d.array() *= 1.0 - cache.inputs[l + 1].array().square();
    }
    if (grad) {
      grad->Block(weights_[l]).noalias() += d * cache.inputs[l].transpose();
      grad->Block(biases_[l]).col(0) += d.rowwise().sum();
    }
    d = params.Block(weights_[l]).transpose() * d;
  }
  return d;
}

void Mlp::Init(ParamVector& params, Rng& rng, double last_scale) const {
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(sizes_[l]));
    const double scale = (l + 1 == weights_.size()) ? last_scale : 1.0;
    std::uniform_real_distribution<double> u(-bound * scale, bound * scale);
    for (std::size_t idx : {weights_[l], biases_[l]}) {
      auto block = params.Block(idx);
      for (Eigen::Index j = 0; j < block.cols(); ++j) {
        for (Eigen::Index i = 0; i < block.rows(); ++i) block(i, j) = u(rng);
      }
    }
  }
}

Actor::Actor(NetworkSpec spec, int num_queries, ActionBox box)
    : spec_(std::move(spec)), num_queries_(num_queries), box_(box) {
  spec_.Validate();
  box_.Validate();
  if (num_queries_ < 1) throw ConfigError("actor: num_queries must be >= 1");
  auto layout = std::make_shared<ParamLayout>();
  embedding_ = layout->Add("actor/embedding", spec_.embedding_dim, num_queries_);
  std::vector<int> sizes = {spec_.embedding_dim};
  sizes.insert(sizes.end(), spec_.hidden_sizes.begin(), spec_.hidden_sizes.end());
  sizes.push_back(kNumRankingParams);
  mlp_ = Mlp(*layout, "actor/", sizes, spec_.activation);
  layout_ = std::move(layout);
}

ParamVector Actor::Init(Rng& rng) const {
  ParamVector p(layout_);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto table = p.Block(embedding_);
  for (Eigen::Index i = 0; i < table.size(); ++i) table.data()[i] = u(rng);
  mlp_.Init(p, rng, 1e-3);
  return p;
}

Eigen::MatrixXd Actor::Forward(const ParamVector& params,
                               std::span<const int> queries, Cache* cache) const {
  RequireLayout(params, layout_, "actor forward");
  RequireFinite(params, "actor forward");
  QueryIndex index = QueryIndex::Build(queries);
  const Eigen::MatrixXd x = Gather(params.Block(embedding_), index.unique);
  Mlp::Cache local;
  Mlp::Cache& mc = cache ? cache->mlp : local;
  const Eigen::MatrixXd y = mlp_.Forward(params, x, &mc);
  Eigen::MatrixXd u = Tanh(y);
  Eigen::MatrixXd a(u.rows(), u.cols());
  for (int d = 0; d < kNumRankingParams; ++d) {
    a.row(d) = ((u.row(d).array() + 1.0) * (0.5 * box_.Width(d)) + box_.lower[d])
                   .min(box_.upper[d])
                   .max(box_.lower[d]);
  }
  Eigen::MatrixXd out = index.Expand(a);
  if (cache) {
    cache->index = std::move(index);
    cache->squashed = std::move(u);
    cache->layout = params.layout.get();
  }
  return out;
}

void Actor::Backward(const ParamVector& params, const Cache& cache,
                     const Eigen::MatrixXd& d_action, ParamVector* grad) const {
  RequireCache(params, cache.layout,
               static_cast<Eigen::Index>(cache.index.column.size()), d_action.cols(),
               "actor backward");
  if (grad) RequireSameLayout(params, *grad, "actor backward");
  const Eigen::MatrixXd d_unique = cache.index.Reduce(d_action);
  Eigen::MatrixXd dy(d_unique.rows(), d_unique.cols());
  for (int d = 0; d < kNumRankingParams; ++d) {
    dy.row(d) = d_unique.row(d).array() * (0.5 * box_.Width(d)) *
                (1.0 - cache.squashed.row(d).array().square());
  }
  const Eigen::MatrixXd dx = mlp_.Backward(params, cache.mlp, dy, grad);
  if (grad) ScatterAdd(grad->Block(embedding_), cache.index.unique, dx);
}

RankingParams Actor::Act(const ParamVector& params, const SearchContext& ctx) const {
  const int q = ctx.query_id;
  const Eigen::MatrixXd a = Forward(params, std::span<const int>(&q, 1), nullptr);
  std::array<double, kNumRankingParams> v;
  for (int d = 0; d < kNumRankingParams; ++d) v[d] = a(d, 0);
  return box_.Clip(RankingParams::FromArray(v));
}

Policy Actor::AsPolicy(const ParamVector& params) const {
  std::vector<int> queries(num_queries_);
  for (int q = 0; q < num_queries_; ++q) queries[q] = q;
  const Eigen::MatrixXd a = Forward(params, queries, nullptr);
  auto table = std::make_shared<std::vector<RankingParams>>();
  table->reserve(num_queries_);
  for (int q = 0; q < num_queries_; ++q) {
    std::array<double, kNumRankingParams> v;
    for (int d = 0; d < kNumRankingParams; ++d) v[d] = a(d, q);
    table->push_back(box_.Clip(RankingParams::FromArray(v)));
  }
  return [table](const SearchContext& ctx) {
    if (ctx.query_id < 0 || ctx.query_id >= static_cast<int>(table->size())) {
      throw LookupError("policy: unknown query id " + std::to_string(ctx.query_id));
    }
    return (*table)[ctx.query_id];
  };
}

Critic::Critic(NetworkSpec spec, int num_queries, ActionBox box)
    : spec_(std::move(spec)), num_queries_(num_queries), box_(box) {
  spec_.Validate();
  box_.Validate();
  if (spec_.head == HeadType::kActor) {
    throw ConfigError("critic: head must be critic_plain or critic_dueling");
  }
  if (num_queries_ < 1) throw ConfigError("critic: num_queries must be >= 1");
  auto layout = std::make_shared<ParamLayout>();
  embedding_ = layout->Add("critic/embedding", spec_.embedding_dim, num_queries_);
  std::vector<int> sizes = {spec_.embedding_dim + kNumRankingParams};
  sizes.insert(sizes.end(), spec_.hidden_sizes.begin(), spec_.hidden_sizes.end());
  sizes.push_back(1);
  if (dueling()) {
    std::vector<int> vsizes = sizes;
    vsizes.front() = spec_.embedding_dim;
    value_ = Mlp(*layout, kValuePrefix, vsizes, spec_.activation);
    main_ = Mlp(*layout, kAdvantagePrefix, sizes, spec_.activation);
  } else {
    main_ = Mlp(*layout, "critic/", sizes, spec_.activation);
  }
  layout_ = std::move(layout);
}

ParamVector Critic::Init(Rng& rng) const {
  ParamVector p(layout_);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto table = p.Block(embedding_);
  for (Eigen::Index i = 0; i < table.size(); ++i) table.data()[i] = u(rng);
  if (dueling()) value_.Init(p, rng, 1.0);
  main_.Init(p, rng, 1.0);
  return p;
}

Eigen::RowVectorXd Critic::Forward(const ParamVector& params,
                                   std::span<const int> queries,
                                   const Eigen::MatrixXd& actions,
                                   Cache* cache) const {
  RequireLayout(params, layout_, "critic forward");
  RequireFinite(params, "critic forward");
  if (actions.cols() != static_cast<Eigen::Index>(queries.size())) {
    throw UsageError("critic forward: one action column per query required");
  }
  const auto table = params.Block(embedding_);
  const Eigen::MatrixXd e = Gather(table, queries);
  Eigen::MatrixXd x(e.rows() + kNumRankingParams, e.cols());
  x.topRows(e.rows()) = e;
  x.bottomRows(kNumRankingParams) = NormalizeActions(actions, box_);
  Mlp::Cache local_main, local_value;
  Eigen::RowVectorXd q =
      main_.Forward(params, x, cache ? &cache->main : &local_main).row(0);
  QueryIndex index;
  if (dueling()) {
    index = QueryIndex::Build(queries);
    const Eigen::MatrixXd v = value_.Forward(params, Gather(table, index.unique),
                                             cache ? &cache->value : &local_value);
    q += index.Expand(v).row(0);
  }
  if (cache) {
    cache->queries.assign(queries.begin(), queries.end());
    cache->index = std::move(index);
    cache->layout = params.layout.get();
  }
  return q;
}

Eigen::MatrixXd Critic::Backward(const ParamVector& params, const Cache& cache,
                                 const Eigen::RowVectorXd& d_q,
                                 ParamVector* grad) const {
  RequireCache(params, cache.layout, static_cast<Eigen::Index>(cache.queries.size()),
               d_q.cols(), "critic backward");
  if (grad) RequireSameLayout(params, *grad, "critic backward");
  const Eigen::MatrixXd dq = d_q;
  const Eigen::MatrixXd dx = main_.Backward(params, cache.main, dq, grad);
  if (grad) {
    ScatterAdd(grad->Block(embedding_), cache.queries, dx.topRows(spec_.embedding_dim));
  }
  if (dueling()) {
    const Eigen::MatrixXd dv = value_.Backward(params, cache.value,
                                               cache.index.Reduce(dq), grad);
    if (grad) ScatterAdd(grad->Block(embedding_), cache.index.unique, dv);
  }
  Eigen::MatrixXd d_action = dx.bottomRows(kNumRankingParams);
  for (int d = 0; d < kNumRankingParams; ++d) d_action.row(d) *= 2.0 / box_.Width(d);
  return d_action;
}

double GradCheckReport::MaxFor(const std::string& network) const {
  double m = 0.0;
  for (const auto& e : entries) {
    if (e.network == network) m = std::max(m, e.max_rel_error);
  }
  return m;
}

double RelativeError(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

namespace {

void RandomizeWeights(ParamVector& p, Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (Eigen::Index i = 0; i < p.values.size(); ++i) p.values[i] = u(rng);
}

Eigen::MatrixXd RandomMatrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = u(rng);
  }
  return m;
}

// Per layout entry, the worst relative error between grad and central
// differences of f.
template <typename F>
void CheckParams(const std::string& network, ParamVector params,
                 const ParamVector& grad, const F& f, double step,
                 GradCheckReport* report) {
  for (const auto& e : params.layout->entries()) {
    double worst = 0.0;
    for (std::size_t i = e.offset; i < e.offset + e.size(); ++i) {
      const double saved = params.values[i];
      params.values[i] = saved + step;
      const double up = f(params);
      params.values[i] = saved - step;
      const double down = f(params);
      params.values[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      worst = std::max(worst, RelativeError(grad.values[i], numeric));
    }
    report->entries.push_back({network, e.name, worst});
  }
}

}  // namespace

GradCheckReport GradCheck(const NetworkSpec& spec, double tolerance,
                          std::uint64_t seed, int num_queries, int batch,
                          double step) {
  GradCheckReport report;
  Rng rng = MakeRng(seed, "grad-check");
  std::vector<int> queries(batch);
  for (int b = 0; b < batch; ++b) queries[b] = b % num_queries;
  const ActionBox box;

  {
    NetworkSpec s = spec;
    s.head = HeadType::kActor;
    const Actor actor(s, num_queries, box);
    ParamVector p = actor.Zeros();
    RandomizeWeights(p, rng);
    const Eigen::MatrixXd w = RandomMatrix(kNumRankingParams, batch, rng);
    const auto f = [&](const ParamVector& x) {
      return (w.array() * actor.Forward(x, queries, nullptr).array()).sum();
    };
    Actor::Cache cache;
    actor.Forward(p, queries, &cache);
    ParamVector g = p.ZerosLike();
    actor.Backward(p, cache, w, &g);
    CheckParams("actor", p, g, f, step, &report);
  }

  for (HeadType head : {HeadType::kCriticPlain, HeadType::kCriticDueling}) {
    const std::string name =
        head == HeadType::kCriticPlain ? "critic_plain" : "critic_dueling";
    NetworkSpec s = spec;
    s.head = head;
    const Critic critic(s, num_queries, box);
    ParamVector p = critic.Zeros();
    RandomizeWeights(p, rng);
    Eigen::MatrixXd actions(kNumRankingParams, batch);
    for (int d = 0; d < kNumRankingParams; ++d) {
      std::uniform_real_distribution<double> u(box.lower[d] + 0.1, box.upper[d] - 0.1);
      for (int b = 0; b < batch; ++b) actions(d, b) = u(rng);
    }
    const Eigen::RowVectorXd w = RandomMatrix(1, batch, rng);
    const auto f = [&](const ParamVector& x) {
      return (w.array() * critic.Forward(x, queries, actions, nullptr).array()).sum();
    };
    Critic::Cache cache;
    critic.Forward(p, queries, actions, &cache);
    ParamVector g = p.ZerosLike();
    const Eigen::MatrixXd d_action = critic.Backward(p, cache, w, &g);
    CheckParams(name, p, g, f, step, &report);

    double worst = 0.0;
    for (int b = 0; b < batch; ++b) {
      for (int d = 0; d < kNumRankingParams; ++d) {
        Eigen::MatrixXd up = actions, down = actions;
        up(d, b) += step;
        down(d, b) -= step;
        const double fu =
            (w.array() * critic.Forward(p, queries, up, nullptr).array()).sum();
        const double fd =
            (w.array() * critic.Forward(p, queries, down, nullptr).array()).sum();
        worst = std::max(worst, RelativeError(d_action(d, b), (fu - fd) / (2 * step)));
      }
    }
    report.entries.push_back({name, "action_input", worst});
  }

  for (const auto& e : report.entries) {
    report.max_rel_error = std::max(report.max_rel_error, e.max_rel_error);
  }
  report.passed = report.max_rel_error < tolerance;
  return report;
}

}  // namespace adlab
