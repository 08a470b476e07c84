/*
 * Copyright 2026 The tierfl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef TIERFL_PROTOCOL_HPP_
#define TIERFL_PROTOCOL_HPP_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "tierfl/data.hpp"
#include "tierfl/ledger.hpp"
#include "tierfl/model.hpp"
#include "tierfl/optimizer.hpp"
#include "tierfl/strategy.hpp"
#include "tierfl/tensor.hpp"

namespace tierfl {

// Clients are assigned to edges in contiguous blocks: client i belongs to edge
// floor(i * n_edges / n_clients).
struct Topology {
  std::size_t n_clients = 0;
  std::size_t n_edges = 0;
  std::vector<std::size_t> edge_of;

  // ConfigError unless 1 <= n_edges <= n_clients.
  static Topology Contiguous(std::size_t n_clients, std::size_t n_edges);
  std::vector<std::size_t> ClientsOf(std::size_t edge) const;
};

struct Schedule {
  int rounds = 50;
  int t1 = 5;
  int t2 = 10;
  double sample_rate = 0.1;
};

// Who forms the contrastive pairs of a sherl round: each client from its own
// samples, or the edge across everything its clients uploaded.
enum class EdgePairing { kClient, kEdge };

struct StrategyConfig {
  StrategyKind kind = StrategyKind::kSherl;
  double margin = 0.5;
  double mu = 0.0;  // fedprox
  OptimizerConfig optimizer;
  int local_epochs = 1;
  std::size_t batch_size = 32;
  // Share of same-class pairs drawn by sherl clients.
  double pos_fraction = 0.5;
  EdgePairing pairing = EdgePairing::kEdge;
  // Passes the cloud makes over each batch of edge outputs it receives.
  int cloud_epochs = 1;
  // At cloud syncs, also average client segments across edges.
  bool global_client_sync = true;
};

// ceil(sample_rate * n_clients) distinct clients, ascending. The draw is a
// Fisher-Yates prefix seeded by (seed, round).
std::vector<std::size_t> SelectClients(std::size_t n_clients, double sample_rate, int round,
                                       std::uint64_t seed);

struct LocalUpdate {
  SegmentParams params;
  std::size_t samples = 0;
  int steps = 0;
  double loss = 0.0;  // mean batch loss of the last epoch
};

// Local epochs of shuffled mini-batch training on cross-entropy, plus the
// proximal term towards `start` for fedprox. FedSGD takes exactly one
// mini-batch step. `shuffle_seed` fixes the batch order.
LocalUpdate LocalTrainFlat(const SegmentParams& start, Optimizer& optimizer,
                           const Dataset& local, const StrategyConfig& strategy,
                           std::uint64_t shuffle_seed);

struct Contribution {
  std::size_t node_id = 0;
  const SegmentParams* params = nullptr;
  double weight = 0.0;
};

// sum(w_i * x_i) / sum(w_i), reduced in ascending node id order. ContractError
// on an empty list, layout mismatch, negative weight or zero weight sum.
SegmentParams AggregateWeighted(std::span<const Contribution> contributions);

struct NovaUpdate {
  std::size_t node_id = 0;
  std::vector<double> delta;  // initial - local
  int tau = 0;                // local steps taken
  double weight = 0.0;
};

// w - tau_eff * sum(p_i * delta_i / tau_i), p_i = weight_i / sum(weight),
// tau_eff = sum(p_i * tau_i). ContractError when some tau_i < 1.
SegmentParams AggregateFedNova(const SegmentParams& initial,
                               std::span<const NovaUpdate> updates);

struct SegmentGradients {
  std::vector<double> client;
  std::vector<double> edge;
  std::vector<double> cloud;
  double loss = 0.0;
};

// Cross-entropy gradients of the three segments computed hop by hop: each tier
// runs its own tape and only activations and activation gradients cross tier
// boundaries. This is the task-loss path of hsfl and splitfed rounds.
SegmentGradients SplitTaskGradients(const PlanParams& params, const Tensor& x,
                                    std::span<const int> labels);

struct Experiment {
  StrategyConfig strategy;
  Topology topology;
  Schedule schedule;
  std::vector<LayerSpec> layers;
  std::size_t cut1 = 2;
  std::size_t cut2 = 4;
  std::size_t bytes_per_scalar = 4;
  Dataset train;
  Dataset test;
  // Indices into `train`, one nonempty set per client.
  std::vector<std::vector<std::size_t>> client_indices;
  std::uint64_t seed = 0;
  bool eval_silhouette = true;
};

struct RoundMetrics {
  int round = 0;
  double loss = 0.0;  // test cross-entropy
  std::optional<double> train_loss;
  double macro_f1 = 0.0;
  std::optional<double> silhouette;
  std::optional<double> iou;
  std::optional<double> dice;
  std::uint64_t round_bytes = 0;
  std::size_t skipped_clients = 0;
};

struct Embeddings {
  std::vector<double> values;  // row-major [labels.size() x dim]
  std::size_t dim = 0;
  std::vector<int> labels;
};

// Round-by-round execution of one strategy. Every node (client, edge, cloud)
// keeps its own parameters and optimizer state across rounds.
class Simulation {
 public:
  explicit Simulation(Experiment experiment);
  ~Simulation();
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  // Runs the next round and evaluates the resulting model.
  RoundMetrics Step();
  int round() const;

  const Experiment& experiment() const;
  const SplitPlan& plan() const;
  const Ledger& ledger() const;

  // Model used for evaluation: global segments where defined, otherwise the
  // segments held by edge 0. Always split along the plan's cuts.
  PlanParams EvaluationModel() const;
  RoundMetrics Evaluate() const;
  // Test-set outputs of the edge segment under the evaluation model.
  Embeddings TestEmbeddings() const;

  // Parameters hosted by each node. Flat strategies and hierfl host the full
  // model on clients; clients host the client segment otherwise.
  const SegmentParams& ClientParams(std::size_t client) const;
  // Full model (hierfl) or edge segment (hsfl, sherl).
  const SegmentParams& EdgeParams(std::size_t edge) const;
  // Global model (flat, hierfl), server layers (splitfed) or head (hsfl, sherl).
  const SegmentParams& CloudParams() const;

  // Test hook: when set, cloud gradients are replaced by zeros before the
  // cloud step.
  void set_zero_cloud_gradients(bool on);

 private:
  struct State;
  std::unique_ptr<State> state_;
};

struct ExperimentResult {
  std::vector<RoundMetrics> metrics;
  Ledger ledger;
  Embeddings embeddings;
};

ExperimentResult RunExperiment(Experiment experiment);

}  // namespace tierfl

#endif  // TIERFL_PROTOCOL_HPP_
