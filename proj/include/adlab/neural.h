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

#ifndef ADLAB_NEURAL_H_
#define ADLAB_NEURAL_H_

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "adlab/auction.h"
#include "adlab/market.h"
#include "adlab/rng.h"
#include "adlab/simulator.h"

namespace adlab {

enum class Activation { kTanh, kIdentity };
enum class HeadType { kActor, kCriticPlain, kCriticDueling };

struct NetworkSpec {
  int embedding_dim = 8;
  std::vector<int> hidden_sizes = {32, 32};
  Activation activation = Activation::kTanh;
  HeadType head = HeadType::kActor;

  void Validate() const;
};

// A named dense block inside a flat parameter vector. Matrices are stored
// column major.
struct LayoutEntry {
  std::string name;
  std::size_t offset = 0;
  int rows = 0;
  int cols = 0;

  std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
  friend bool operator==(const LayoutEntry&, const LayoutEntry&) = default;
};

class ParamLayout {
 public:
  // Appends an entry and returns its index.
  std::size_t Add(std::string name, int rows, int cols);

  const std::vector<LayoutEntry>& entries() const { return entries_; }
  const LayoutEntry& entry(std::size_t i) const { return entries_[i]; }
  std::size_t size() const { return size_; }

  friend bool operator==(const ParamLayout&, const ParamLayout&) = default;

 private:
  std::vector<LayoutEntry> entries_;
  std::size_t size_ = 0;
};

// Flat weights plus the layout that gives them meaning. A value type: copies
// share the immutable layout but never the weights.
struct ParamVector {
  std::shared_ptr<const ParamLayout> layout;
  Eigen::VectorXd values;

  ParamVector() = default;
  explicit ParamVector(std::shared_ptr<const ParamLayout> l)
      : layout(std::move(l)), values(Eigen::VectorXd::Zero(layout->size())) {}

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
  bool AllFinite() const { return values.allFinite(); }
  ParamVector ZerosLike() const { return ParamVector(layout); }

  Eigen::Map<const Eigen::MatrixXd> Block(std::size_t entry) const;
  Eigen::Map<Eigen::MatrixXd> Block(std::size_t entry);
};

bool SameLayout(const ParamVector& a, const ParamVector& b);
// Throws UsageError when the layouts differ.
void RequireSameLayout(const ParamVector& a, const ParamVector& b,
                       const char* what);

// target <- (1 - tau) * target + tau * online. tau must lie in [0, 1].
void SoftUpdate(ParamVector& target, const ParamVector& online, double tau);

// Binary checkpoint: magic, JSON layout header, little-endian doubles.
void SaveParams(const std::string& path, const ParamVector& params);
// Throws MissingArtifactError on a missing or corrupt file.
ParamVector LoadParams(const std::string& path);

// Fully connected stack; hidden layers use the configured activation, the output
// layer is linear.
class Mlp {
 public:
  struct Cache {
    std::vector<Eigen::MatrixXd> inputs;  // per layer
    Eigen::MatrixXd output;
  };

  Mlp() = default;
  Mlp(ParamLayout& layout, const std::string& prefix, std::vector<int> sizes,
      Activation activation);

  Eigen::MatrixXd Forward(const ParamVector& params, const Eigen::MatrixXd& x,
                          Cache* cache) const;
  // Returns the input gradient; adds parameter gradients into grad when
  // grad is non-null.
  Eigen::MatrixXd Backward(const ParamVector& params, const Cache& cache,
                           const Eigen::MatrixXd& d_output,
                           ParamVector* grad) const;
  // Uniform(+-1/sqrt(fan_in)) with the output layer scaled by last_scale.
  void Init(ParamVector& params, Rng& rng, double last_scale) const;

  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }

 private:
  std::vector<int> sizes_;
  std::vector<std::size_t> weights_;  // entry indices
  std::vector<std::size_t> biases_;
  Activation activation_ = Activation::kTanh;
};

// Distinct queries of a batch in first-seen order and, per batch entry, its
// column among them. Branches that read only the query run once per distinct
// query.
struct QueryIndex {
  std::vector<int> unique;
  std::vector<int> column;

  static QueryIndex Build(std::span<const int> queries);
  // Broadcasts per-query columns to the batch.
  Eigen::MatrixXd Expand(const Eigen::MatrixXd& per_unique) const;
  // Sums batch columns per query; the adjoint of Expand.
  Eigen::MatrixXd Reduce(const Eigen::MatrixXd& per_batch) const;
};

// Policy network: query embedding, hidden layers, and an affine tanh squash
// onto the action box.
class Actor {
 public:
  struct Cache {
    QueryIndex index;
    Mlp::Cache mlp;            // over distinct queries
    Eigen::MatrixXd squashed;  // tanh of the pre-activations, distinct queries
    const ParamLayout* layout = nullptr;
  };

  Actor(NetworkSpec spec, int num_queries, ActionBox box = ActionBox{});

  const std::shared_ptr<const ParamLayout>& layout() const { return layout_; }
  const ActionBox& box() const { return box_; }
  int num_queries() const { return num_queries_; }
  const NetworkSpec& spec() const { return spec_; }

  ParamVector Init(Rng& rng) const;
  ParamVector Zeros() const { return ParamVector(layout_); }

  // Actions as columns (kNumRankingParams x batch). Throws NumericError on
  // non-finite weights and LookupError on an unknown query.
  Eigen::MatrixXd Forward(const ParamVector& params, std::span<const int> queries,
                          Cache* cache) const;
  // d_action holds dObjective/dAction per column.
  void Backward(const ParamVector& params, const Cache& cache,
                const Eigen::MatrixXd& d_action, ParamVector* grad) const;

  RankingParams Act(const ParamVector& params, const SearchContext& ctx) const;
  // Evaluates every query once; the returned policy is a table lookup.
  Policy AsPolicy(const ParamVector& params) const;

 private:
  NetworkSpec spec_;
  int num_queries_;
  ActionBox box_;
  std::shared_ptr<const ParamLayout> layout_;
  std::size_t embedding_ = 0;
  Mlp mlp_;
};

// Q network over (query, action). The plain head reads the concatenated
// embedding and normalized action; the dueling head sums a state-only value
// branch and a state-action advantage branch sharing the embedding.
class Critic {
 public:
  struct Cache {
    std::vector<int> queries;
    QueryIndex index;
    Mlp::Cache main;       // plain head or advantage branch
    Mlp::Cache value;      // dueling head only, over distinct queries
    const ParamLayout* layout = nullptr;
  };

  Critic(NetworkSpec spec, int num_queries, ActionBox box = ActionBox{});

  const std::shared_ptr<const ParamLayout>& layout() const { return layout_; }
  bool dueling() const { return spec_.head == HeadType::kCriticDueling; }
  const NetworkSpec& spec() const { return spec_; }

  ParamVector Init(Rng& rng) const;
  ParamVector Zeros() const { return ParamVector(layout_); }

  Eigen::RowVectorXd Forward(const ParamVector& params,
                             std::span<const int> queries,
                             const Eigen::MatrixXd& actions, Cache* cache) const;
  // Returns dObjective/dAction (kNumRankingParams x batch) given
  // dObjective/dQ. Parameter gradients are added into grad when non-null.
  Eigen::MatrixXd Backward(const ParamVector& params, const Cache& cache,
                           const Eigen::RowVectorXd& d_q, ParamVector* grad) const;

  // Entry-name prefixes of the two dueling branches.
  static constexpr const char* kValuePrefix = "critic/value/";
  static constexpr const char* kAdvantagePrefix = "critic/advantage/";

 private:
  NetworkSpec spec_;
  int num_queries_;
  ActionBox box_;
  std::shared_ptr<const ParamLayout> layout_;
  std::size_t embedding_ = 0;
  Mlp main_;
  Mlp value_;
};

struct GradCheckEntry {
  std::string network;  // "actor", "critic_plain", "critic_dueling"
  std::string layer;    // layout entry name, or "action_input"
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0.0;
  bool passed = false;

  double MaxFor(const std::string& network) const;
};

// |a - b| / max(|a|, |b|, 1e-6).
double RelativeError(double analytic, double numeric);

// Compares analytic and central-difference gradients of a random linear
// functional of each network's output, over every parameter and (for the
// critics) every action input. spec.head is ignored; all three heads are
// checked.
GradCheckReport GradCheck(const NetworkSpec& spec, double tolerance,
                          std::uint64_t seed = 1, int num_queries = 3,
                          int batch = 4, double step = 1e-5);

}  // namespace adlab

#endif  // ADLAB_NEURAL_H_
