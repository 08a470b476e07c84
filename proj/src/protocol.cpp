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

#include "tierfl/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <utility>

#include "tierfl/error.hpp"
#include "tierfl/losses.hpp"
#include "tierfl/metrics.hpp"
#include "tierfl/rng.hpp"

namespace tierfl {

Topology Topology::Contiguous(std::size_t n_clients, std::size_t n_edges) {
  if (n_edges == 0 || n_edges > n_clients) {
    throw ConfigError("topology", "need 1 <= n_edges <= n_clients, got n_clients=" +
                                      std::to_string(n_clients) +
                                      ", n_edges=" + std::to_string(n_edges));
  }
  Topology t{n_clients, n_edges, std::vector<std::size_t>(n_clients)};
  for (std::size_t i = 0; i < n_clients; ++i) t.edge_of[i] = i * n_edges / n_clients;
  return t;
}

std::vector<std::size_t> Topology::ClientsOf(std::size_t edge) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < edge_of.size(); ++i) {
    if (edge_of[i] == edge) out.push_back(i);
  }
  return out;
}

namespace {

std::vector<std::size_t> Permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[rng.UniformInt(i)]);
  return p;
}

std::vector<int> LabelsAt(const Dataset& ds, std::span<const std::size_t> idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(ds.labels[i]);
  return out;
}

std::vector<double> GradOrZeros(const Tensor& t) {
  if (t.has_grad()) return {t.grad().begin(), t.grad().end()};
  return std::vector<double>(t.size(), 0.0);
}

// Forward pass of one segment on a node's own tape. With `track_input` the
// input becomes a fresh leaf so the activation gradient can be sent back to
// the tier that produced it.
class SegmentPass {
 public:
  SegmentPass(const SegmentParams& params, const Tensor& input, bool track_input)
      : flat_(Tensor::Vector(params.flat, true)),
        input_(track_input ? Tensor(input.shape(),
                                    std::vector<double>(input.data().begin(),
                                                        input.data().end()),
                                    true)
                           : input) {
    if (params.layout.empty()) throw ContractError("segment pass: empty segment");
    output_ = ForwardSegment(tape_, params.layout, flat_, input_);
  }
  SegmentPass(const SegmentPass&) = delete;
  SegmentPass& operator=(const SegmentPass&) = delete;

  Tape& tape() { return tape_; }
  const Tensor& output() const { return output_; }
  void Backward(const Tensor& loss) { tape_.Backward(loss); }
  void Backward(std::span<const double> upstream) { tape_.Backward(output_, upstream); }
  std::vector<double> ParamGrad() const { return GradOrZeros(flat_); }
  std::vector<double> InputGrad() const { return GradOrZeros(input_); }

 private:
  Tape tape_;
  Tensor flat_;
  Tensor input_;
  Tensor output_;
};

SegmentParams Concat(const SegmentParams& a, const SegmentParams& b) {
  return JoinParams(PlanParams{a, b, SegmentParams{{}, SegmentLayout{}}});
}

std::pair<SegmentParams, SegmentParams> Cut(const SegmentParams& joined,
                                            const std::vector<LayerSpec>& first,
                                            const std::vector<LayerSpec>& second) {
  SegmentParams a{{}, SegmentLayout::For(first)};
  SegmentParams b{{}, SegmentLayout::For(second)};
  const auto mid = joined.flat.begin() + static_cast<std::ptrdiff_t>(a.layout.total);
  a.flat.assign(joined.flat.begin(), mid);
  b.flat.assign(mid, joined.flat.end());
  return {std::move(a), std::move(b)};
}

std::size_t ArgMax(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < row.size(); ++j) {
    if (row[j] > row[best]) best = j;
  }
  return best;
}

}  // namespace

std::vector<std::size_t> SelectClients(std::size_t n_clients, double sample_rate, int round,
                                       std::uint64_t seed) {
  if (round < 1) throw ContractError("select_clients: round must be >= 1");
  const std::size_t k = ActiveClientCount(n_clients, sample_rate);
  Rng rng(DeriveSeed(seed, {Tag(Stream::kSampling), static_cast<std::uint64_t>(round)}));
  std::vector<std::size_t> ids(n_clients);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    std::swap(ids[i], ids[i + rng.UniformInt(n_clients - i)]);
  }
  ids.resize(k);
  std::sort(ids.begin(), ids.end());
  return ids;
}

LocalUpdate LocalTrainFlat(const SegmentParams& start, Optimizer& optimizer,
                           const Dataset& local, const StrategyConfig& strategy,
                           std::uint64_t shuffle_seed) {
  LocalUpdate update{start, local.size(), 0, 0.0};
  if (local.size() == 0) return update;
  const bool one_step = strategy.kind == StrategyKind::kFedSgd;
  const bool proximal = strategy.kind == StrategyKind::kFedProx && strategy.mu > 0.0;
  const int epochs = one_step ? 1 : strategy.local_epochs;
  const std::size_t batch = std::max<std::size_t>(strategy.batch_size, 1);
  Rng rng(shuffle_seed);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    const auto order = Permutation(local.size(), rng);
    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += batch) {
      const std::size_t count = std::min(batch, order.size() - begin);
      std::span<const std::size_t> idx(order.data() + begin, count);
      const auto labels = LabelsAt(local, idx);
      Tape tape;
      Tensor w = Tensor::Vector(update.params.flat, true);
      Tensor logits = ForwardSegment(tape, update.params.layout, w, local.Rows(idx));
      Tensor loss = CrossEntropy(tape, logits, labels);
      if (proximal) {
        loss = tape.Add(loss, ProximalTerm(tape, w, start.flat, strategy.mu));
      }
      loss_sum += loss.item();
      ++batches;
      tape.Backward(loss);
      optimizer.Step(update.params.flat, w.grad());
      ++update.steps;
      if (one_step) break;
    }
    update.loss = loss_sum / batches;
  }
  return update;
}

SegmentParams AggregateWeighted(std::span<const Contribution> contributions) {
  if (contributions.empty()) throw ContractError("aggregate: no contributions");
  std::vector<Contribution> sorted(contributions.begin(), contributions.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const Contribution& a, const Contribution& b) {
                     return a.node_id < b.node_id;
                   });
  const SegmentLayout& layout = sorted.front().params->layout;
  double total = 0.0;
  for (const Contribution& c : sorted) {
    if (!(c.params->layout == layout) || c.params->flat.size() != layout.total) {
      throw ContractError("aggregate: layout mismatch");
    }
    if (!(c.weight >= 0.0) || !std::isfinite(c.weight)) {
      throw ContractError("aggregate: weights must be finite and non-negative");
    }
    total += c.weight;
  }
  if (!(total > 0.0)) throw ContractError("aggregate: weights sum to zero");
  SegmentParams out{std::vector<double>(layout.total, 0.0), layout};
  for (const Contribution& c : sorted) {
    const double p = c.weight / total;
    for (std::size_t j = 0; j < layout.total; ++j) out.flat[j] += p * c.params->flat[j];
  }
  return out;
}

SegmentParams AggregateFedNova(const SegmentParams& initial,
                               std::span<const NovaUpdate> updates) {
  if (updates.empty()) throw ContractError("fednova: no updates");
  std::vector<const NovaUpdate*> sorted;
  for (const NovaUpdate& u : updates) sorted.push_back(&u);
  std::stable_sort(sorted.begin(), sorted.end(), [](const NovaUpdate* a, const NovaUpdate* b) {
    return a->node_id < b->node_id;
  });
  double total = 0.0;
  for (const NovaUpdate* u : sorted) {
    if (u->tau < 1) throw ContractError("fednova: tau must be >= 1");
    if (u->delta.size() != initial.flat.size()) {
      throw ContractError("fednova: delta length does not match model");
    }
    if (!(u->weight >= 0.0)) throw ContractError("fednova: negative weight");
    total += u->weight;
  }
  if (!(total > 0.0)) throw ContractError("fednova: weights sum to zero");
  double tau_eff = 0.0;
  std::vector<double> direction(initial.flat.size(), 0.0);
  for (const NovaUpdate* u : sorted) {
    const double p = u->weight / total;
    tau_eff += p * u->tau;
    const double scale = p / u->tau;
    for (std::size_t j = 0; j < direction.size(); ++j) direction[j] += scale * u->delta[j];
  }
  SegmentParams out = initial;
  for (std::size_t j = 0; j < direction.size(); ++j) out.flat[j] -= tau_eff * direction[j];
  return out;
}

SegmentGradients SplitTaskGradients(const PlanParams& params, const Tensor& x,
                                    std::span<const int> labels) {
  SegmentPass client(params.client, x, false);
  SegmentPass edge(params.edge, client.output().Detach(), true);
  SegmentPass cloud(params.cloud, edge.output().Detach(), true);
  Tensor loss = CrossEntropy(cloud.tape(), cloud.output(), labels);
  SegmentGradients out;
  out.loss = loss.item();
  cloud.Backward(loss);
  edge.Backward(cloud.InputGrad());
  client.Backward(edge.InputGrad());
  out.client = client.ParamGrad();
  out.edge = edge.ParamGrad();
  out.cloud = cloud.ParamGrad();
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct ClientNode {
  SegmentParams params;
  Optimizer optimizer;
  Dataset data;
};

struct EdgeNode {
  SegmentParams params;
  // Latest aggregate of this edge's client segments (split strategies).
  SegmentParams client_agg;
  Optimizer optimizer;
  std::vector<std::size_t> clients;
  std::size_t samples = 0;
  // hierfl: most recent upload per client since the last client sync.
  std::map<std::size_t, LocalUpdate> pending;
};

struct CloudNode {
  SegmentParams params;
  SegmentParams client_agg;  // splitfed
  Optimizer optimizer;
};

}  // namespace

struct Simulation::State {
  Experiment exp;
  SplitPlan plan;
  std::vector<ClientNode> clients;
  std::vector<EdgeNode> edges;
  CloudNode cloud;
  Ledger ledger;
  int round = 0;
  bool zero_cloud_gradients = false;

  // Per-round scratch.
  std::vector<double> train_losses;
  std::size_t skipped = 0;

  std::uint64_t Seed(Stream stream, std::size_t node) const {
    return DeriveSeed(exp.seed, {Tag(stream), static_cast<std::uint64_t>(node),
                                 static_cast<std::uint64_t>(round)});
  }
  std::uint64_t ModelBytes(const SegmentParams& p) const {
    return ParamBytes(p, exp.bytes_per_scalar);
  }
  std::uint64_t ActivationBytes(const Tensor& t) const {
    return t.size() * exp.bytes_per_scalar;
  }
  // Activations travel with their labels (4 bytes each).
  std::uint64_t SmashedBytes(const Tensor& t) const {
    return ActivationBytes(t) + t.rows() * 4;
  }
  void Send(MessageKind kind, Tier src, Tier dst, std::uint64_t bytes) {
    ledger.Record({round, kind, src, dst, bytes});
  }
  bool ClientSyncRound() const {
    const auto& s = exp.schedule;
    switch (exp.strategy.kind) {
      case StrategyKind::kSplitFed:
        return round % s.t1 == 0;
      case StrategyKind::kHierFl:
        return round % s.t1 == 0 || round % s.t2 == 0;
      case StrategyKind::kHsfl:
      case StrategyKind::kSherl:
        return round % s.t1 == 0 ||
               (exp.strategy.global_client_sync && round % s.t2 == 0);
      default:
        return true;
    }
  }
  bool CloudSyncRound() const { return round % exp.schedule.t2 == 0; }

  std::vector<double> CloudGrad(const SegmentPass& pass) const {
    auto g = pass.ParamGrad();
    if (zero_cloud_gradients) std::fill(g.begin(), g.end(), 0.0);
    return g;
  }

  void FlatRound(const std::vector<std::size_t>& active);
  void HierFlRound(const std::vector<std::size_t>& active);
  void SplitFedRound(const std::vector<std::size_t>& active);
  void TieredRound(const std::vector<std::size_t>& active);
  void SherlEdge(EdgeNode& edge, std::size_t edge_id, const std::vector<std::size_t>& members);
  void HsflEdge(EdgeNode& edge, const std::vector<std::size_t>& members);
  std::vector<std::size_t> RoundBatch(std::size_t client) const;
};

std::vector<std::size_t> Simulation::State::RoundBatch(std::size_t client) const {
  Rng rng(Seed(Stream::kLocalShuffle, client));
  auto order = Permutation(clients[client].data.size(), rng);
  order.resize(std::min(order.size(), std::max<std::size_t>(exp.strategy.batch_size, 1)));
  return order;
}

void Simulation::State::FlatRound(const std::vector<std::size_t>& active) {
  const SegmentParams global = cloud.params;
  std::vector<LocalUpdate> updates;
  std::vector<std::size_t> ids;
  for (std::size_t i : active) {
    ClientNode& c = clients[i];
    if (c.data.size() == 0) {
      ++skipped;
      continue;
    }
    updates.push_back(LocalTrainFlat(global, c.optimizer, c.data, exp.strategy,
                                     Seed(Stream::kLocalShuffle, i)));
    ids.push_back(i);
    train_losses.push_back(updates.back().loss);
    Send(MessageKind::kClientModelUp, Tier::kClient, Tier::kCloud, ModelBytes(global));
  }
  if (!updates.empty()) {
    if (exp.strategy.kind == StrategyKind::kFedNova) {
      std::vector<NovaUpdate> nova;
      for (std::size_t u = 0; u < updates.size(); ++u) {
        if (updates[u].steps < 1) continue;
        NovaUpdate n{ids[u], std::vector<double>(global.flat.size()), updates[u].steps,
                     static_cast<double>(updates[u].samples)};
        for (std::size_t j = 0; j < n.delta.size(); ++j) {
          n.delta[j] = global.flat[j] - updates[u].params.flat[j];
        }
        nova.push_back(std::move(n));
      }
      if (!nova.empty()) cloud.params = AggregateFedNova(global, nova);
    } else {
      std::vector<Contribution> parts;
      for (std::size_t u = 0; u < updates.size(); ++u) {
        parts.push_back({ids[u], &updates[u].params, static_cast<double>(updates[u].samples)});
      }
      cloud.params = AggregateWeighted(parts);
    }
  }
  for (std::size_t i = 0; i < clients.size(); ++i) {
    clients[i].params = cloud.params;
    Send(MessageKind::kClientModelDown, Tier::kCloud, Tier::kClient, ModelBytes(cloud.params));
  }
}

void Simulation::State::HierFlRound(const std::vector<std::size_t>& active) {
  for (std::size_t i : active) {
    ClientNode& c = clients[i];
    if (c.data.size() == 0) {
      ++skipped;
      continue;
    }
    LocalUpdate u = LocalTrainFlat(c.params, c.optimizer, c.data, exp.strategy,
                                   Seed(Stream::kLocalShuffle, i));
    train_losses.push_back(u.loss);
    c.params = u.params;
    Send(MessageKind::kClientModelUp, Tier::kClient, Tier::kEdge, ModelBytes(c.params));
    edges[exp.topology.edge_of[i]].pending[i] = std::move(u);
  }
  const bool client_sync = ClientSyncRound();
  if (client_sync) {
    for (EdgeNode& e : edges) {
      if (e.pending.empty()) continue;
      std::vector<Contribution> parts;
      for (const auto& [id, u] : e.pending) {
        parts.push_back({id, &u.params, static_cast<double>(u.samples)});
      }
      e.params = AggregateWeighted(parts);
      e.pending.clear();
    }
  }
  if (CloudSyncRound()) {
    std::vector<Contribution> parts;
    for (std::size_t j = 0; j < edges.size(); ++j) {
      Send(MessageKind::kEdgeModelUp, Tier::kEdge, Tier::kCloud, ModelBytes(edges[j].params));
      parts.push_back({j, &edges[j].params, static_cast<double>(edges[j].samples)});
    }
    cloud.params = AggregateWeighted(parts);
    for (EdgeNode& e : edges) {
      e.params = cloud.params;
      Send(MessageKind::kEdgeModelDown, Tier::kCloud, Tier::kEdge, ModelBytes(e.params));
    }
  }
  if (client_sync) {
    for (EdgeNode& e : edges) {
      for (std::size_t i : e.clients) {
        clients[i].params = e.params;
        Send(MessageKind::kClientModelDown, Tier::kEdge, Tier::kClient, ModelBytes(e.params));
      }
    }
  }
}

void Simulation::State::SplitFedRound(const std::vector<std::size_t>& active) {
  std::vector<std::size_t> trained;
  for (std::size_t i : active) {
    ClientNode& c = clients[i];
    if (c.data.size() == 0) {
      ++skipped;
      continue;
    }
    const auto idx = RoundBatch(i);
    const auto labels = LabelsAt(c.data, idx);
    SegmentPass client(c.params, c.data.Rows(idx), false);
    Send(MessageKind::kClientSmashedUp, Tier::kClient, Tier::kCloud,
         SmashedBytes(client.output()));
    SegmentPass server(cloud.params, client.output().Detach(), true);
    Tensor loss = CrossEntropy(server.tape(), server.output(), labels);
    train_losses.push_back(loss.item());
    server.Backward(loss);
    cloud.optimizer.Step(cloud.params.flat, CloudGrad(server));
    const auto upstream = server.InputGrad();
    Send(MessageKind::kGradFromCloud, Tier::kCloud, Tier::kClient,
         upstream.size() * exp.bytes_per_scalar);
    client.Backward(upstream);
    c.optimizer.Step(c.params.flat, client.ParamGrad());
    trained.push_back(i);
  }
  if (!ClientSyncRound()) return;
  std::vector<Contribution> parts;
  for (std::size_t i : trained) {
    Send(MessageKind::kClientModelUp, Tier::kClient, Tier::kCloud, ModelBytes(clients[i].params));
    parts.push_back({i, &clients[i].params, static_cast<double>(clients[i].data.size())});
  }
  if (!parts.empty()) cloud.client_agg = AggregateWeighted(parts);
  for (ClientNode& c : clients) {
    c.params = cloud.client_agg;
    Send(MessageKind::kClientModelDown, Tier::kCloud, Tier::kClient,
         ModelBytes(cloud.client_agg));
  }
}

void Simulation::State::SherlEdge(EdgeNode& edge, std::size_t edge_id,
                                  const std::vector<std::size_t>& members) {
  struct Hop {
    std::size_t client;
    std::unique_ptr<SegmentPass> client_pass;
    std::size_t offset = 0;  // first row in the stacked edge input
    std::size_t rows = 0;
  };
  std::vector<Hop> hops;
  std::vector<Tensor> uploads;
  std::vector<int> labels;
  PairIndices own;  // client-formed pairs, indexed into the stacked rows
  std::size_t stacked_rows = 0;
  for (std::size_t i : members) {
    ClientNode& c = clients[i];
    if (c.data.size() < 2) {
      ++skipped;
      continue;
    }
    const std::size_t rows = std::min(std::max<std::size_t>(exp.strategy.batch_size, 1),
                                      c.data.size());
    const std::size_t count = std::max<std::size_t>((rows + 1) / 2, 1);
    PairBatch pairs = MakePairs(c.data, count, exp.strategy.pos_fraction,
                                Seed(Stream::kPairs, i));
    std::vector<double> stacked(pairs.x1.data().begin(), pairs.x1.data().end());
    stacked.insert(stacked.end(), pairs.x2.data().begin(), pairs.x2.data().end());
    Hop hop{i, std::make_unique<SegmentPass>(
                   c.params, Tensor::Matrix(2 * count, c.data.dim, std::move(stacked)), false),
            stacked_rows, 2 * count};
    Send(MessageKind::kClientSmashedUp, Tier::kClient, Tier::kEdge,
         SmashedBytes(hop.client_pass->output()));
    for (std::size_t p = 0; p < count; ++p) {
      own.first.push_back(stacked_rows + p);
      own.second.push_back(stacked_rows + count + p);
    }
    own.pair_labels.insert(own.pair_labels.end(), pairs.pair_labels.begin(),
                           pairs.pair_labels.end());
    labels.insert(labels.end(), pairs.y1.begin(), pairs.y1.end());
    labels.insert(labels.end(), pairs.y2.begin(), pairs.y2.end());
    uploads.push_back(hop.client_pass->output().Detach());
    stacked_rows += hop.rows;
    hops.push_back(std::move(hop));
  }
  if (hops.empty()) return;

  Tape join;
  const Tensor received = join.ConcatRows(uploads);
  SegmentPass at_edge(edge.params, received, true);
  // The edge either keeps the pairs its clients formed or draws new pairs over
  // everything it received, which lets samples of different clients meet.
  const PairIndices pairs =
      exp.strategy.pairing == EdgePairing::kClient
          ? std::move(own)
          : DrawPairs(labels, exp.train.num_classes, own.first.size(),
                      exp.strategy.pos_fraction,
                      Seed(Stream::kPairs, exp.topology.n_clients + edge_id));
  Tape& t = at_edge.tape();
  const Tensor loss = ContrastiveLoss(t, t.GatherRows(at_edge.output(), pairs.first),
                                      t.GatherRows(at_edge.output(), pairs.second),
                                      pairs.pair_labels, Margin(exp.strategy.margin));
  at_edge.Backward(loss);
  edge.optimizer.Step(edge.params.flat, at_edge.ParamGrad());
  const auto upstream = at_edge.InputGrad();
  for (Hop& hop : hops) {
    const std::size_t width = hop.client_pass->output().cols();
    const std::span<const double> down(upstream.data() + hop.offset * width, hop.rows * width);
    Send(MessageKind::kGradFromEdge, Tier::kEdge, Tier::kClient,
         down.size() * exp.bytes_per_scalar);
    hop.client_pass->Backward(down);
    ClientNode& c = clients[hop.client];
    c.optimizer.Step(c.params.flat, hop.client_pass->ParamGrad());
  }

  // Edge outputs of this round's forward pass go up without a gradient path.
  const Tensor features = at_edge.output().Detach();
  Send(MessageKind::kEdgeSmashedUp, Tier::kEdge, Tier::kCloud, SmashedBytes(features));
  for (int epoch = 0; epoch < std::max(exp.strategy.cloud_epochs, 1); ++epoch) {
    SegmentPass head(cloud.params, features, false);
    Tensor task = CrossEntropy(head.tape(), head.output(), labels);
    if (epoch == 0) train_losses.push_back(task.item());
    head.Backward(task);
    cloud.optimizer.Step(cloud.params.flat, CloudGrad(head));
  }
}

void Simulation::State::HsflEdge(EdgeNode& edge, const std::vector<std::size_t>& members) {
  struct Hop {
    std::size_t client;
    std::unique_ptr<SegmentPass> client_pass;
    std::unique_ptr<SegmentPass> edge_pass;
  };
  std::vector<Hop> hops;
  std::vector<double> stacked;
  std::vector<int> labels;
  std::size_t width = 0;
  for (std::size_t i : members) {
    ClientNode& c = clients[i];
    if (c.data.size() == 0) {
      ++skipped;
      continue;
    }
    const auto idx = RoundBatch(i);
    const auto y = LabelsAt(c.data, idx);
    Hop hop{i, std::make_unique<SegmentPass>(c.params, c.data.Rows(idx), false), nullptr};
    Send(MessageKind::kClientSmashedUp, Tier::kClient, Tier::kEdge,
         SmashedBytes(hop.client_pass->output()));
    hop.edge_pass =
        std::make_unique<SegmentPass>(edge.params, hop.client_pass->output().Detach(), true);
    const Tensor& out = hop.edge_pass->output();
    width = out.cols();
    stacked.insert(stacked.end(), out.data().begin(), out.data().end());
    labels.insert(labels.end(), y.begin(), y.end());
    hops.push_back(std::move(hop));
  }
  if (hops.empty()) return;
  const Tensor features = Tensor::Matrix(labels.size(), width, std::move(stacked));
  Send(MessageKind::kEdgeSmashedUp, Tier::kEdge, Tier::kCloud, SmashedBytes(features));
  std::vector<double> upstream;
  for (int epoch = 0; epoch < std::max(exp.strategy.cloud_epochs, 1); ++epoch) {
    SegmentPass head(cloud.params, features, epoch == 0);
    Tensor loss = CrossEntropy(head.tape(), head.output(), labels);
    head.Backward(loss);
    if (epoch == 0) {
      train_losses.push_back(loss.item());
      upstream = head.InputGrad();
    }
    cloud.optimizer.Step(cloud.params.flat, CloudGrad(head));
  }
  Send(MessageKind::kGradFromCloud, Tier::kCloud, Tier::kEdge,
       upstream.size() * exp.bytes_per_scalar);

  std::vector<double> edge_grad(edge.params.flat.size(), 0.0);
  std::size_t offset = 0;
  for (Hop& hop : hops) {
    const std::size_t n = hop.edge_pass->output().size();
    hop.edge_pass->Backward(std::span<const double>(upstream.data() + offset, n));
    offset += n;
    const auto g = hop.edge_pass->ParamGrad();
    for (std::size_t j = 0; j < g.size(); ++j) edge_grad[j] += g[j];
  }
  edge.optimizer.Step(edge.params.flat, edge_grad);
  for (Hop& hop : hops) {
    const auto down = hop.edge_pass->InputGrad();
    Send(MessageKind::kGradFromEdge, Tier::kEdge, Tier::kClient,
         down.size() * exp.bytes_per_scalar);
    hop.client_pass->Backward(down);
    ClientNode& c = clients[hop.client];
    c.optimizer.Step(c.params.flat, hop.client_pass->ParamGrad());
  }
}

void Simulation::State::TieredRound(const std::vector<std::size_t>& active) {
  std::vector<std::vector<std::size_t>> by_edge(edges.size());
  for (std::size_t i : active) by_edge[exp.topology.edge_of[i]].push_back(i);
  for (std::size_t j = 0; j < edges.size(); ++j) {
    if (by_edge[j].empty()) continue;
    if (exp.strategy.kind == StrategyKind::kSherl) {
      SherlEdge(edges[j], j, by_edge[j]);
    } else {
      HsflEdge(edges[j], by_edge[j]);
    }
  }
  const bool client_sync = ClientSyncRound();
  const bool global = exp.strategy.global_client_sync;
  if (client_sync) {
    for (std::size_t j = 0; j < edges.size(); ++j) {
      std::vector<Contribution> parts;
      for (std::size_t i : by_edge[j]) {
        Send(MessageKind::kClientModelUp, Tier::kClient, Tier::kEdge,
             ModelBytes(clients[i].params));
        parts.push_back({i, &clients[i].params, static_cast<double>(clients[i].data.size())});
      }
      if (!parts.empty()) edges[j].client_agg = AggregateWeighted(parts);
    }
  }
  if (CloudSyncRound()) {
    std::vector<Contribution> edge_parts, client_parts;
    for (std::size_t j = 0; j < edges.size(); ++j) {
      std::uint64_t bytes = ModelBytes(edges[j].params);
      if (global) bytes += ModelBytes(edges[j].client_agg);
      Send(MessageKind::kEdgeModelUp, Tier::kEdge, Tier::kCloud, bytes);
      const double w = static_cast<double>(edges[j].samples);
      edge_parts.push_back({j, &edges[j].params, w});
      client_parts.push_back({j, &edges[j].client_agg, w});
    }
    const SegmentParams edge_avg = AggregateWeighted(edge_parts);
    const SegmentParams client_avg =
        global ? AggregateWeighted(client_parts) : SegmentParams{};
    for (EdgeNode& e : edges) {
      e.params = edge_avg;
      std::uint64_t bytes = ModelBytes(edge_avg);
      if (global) {
        e.client_agg = client_avg;
        bytes += ModelBytes(client_avg);
      }
      Send(MessageKind::kEdgeModelDown, Tier::kCloud, Tier::kEdge, bytes);
    }
  }
  if (client_sync) {
    for (EdgeNode& e : edges) {
      for (std::size_t i : e.clients) {
        clients[i].params = e.client_agg;
        Send(MessageKind::kClientModelDown, Tier::kEdge, Tier::kClient,
             ModelBytes(e.client_agg));
      }
    }
  }
}

Simulation::Simulation(Experiment experiment) : state_(std::make_unique<State>()) {
  State& s = *state_;
  s.exp = std::move(experiment);
  const Experiment& e = s.exp;
  const Schedule& sch = e.schedule;
  std::vector<FieldIssue> issues;
  if (sch.rounds < 0) issues.push_back({"schedule.rounds", "must be >= 0"});
  if (sch.t1 < 1) issues.push_back({"schedule.t1", "must be >= 1"});
  if (sch.t2 < 1) issues.push_back({"schedule.t2", "must be >= 1"});
  if (!(sch.sample_rate > 0.0 && sch.sample_rate <= 1.0)) {
    issues.push_back({"schedule.sample_rate", "must be in (0, 1]"});
  }
  if (!(e.strategy.margin >= 0.0 && e.strategy.margin <= 2.0)) {
    issues.push_back({"strategy.margin", "must be in [0,2]"});
  }
  if (!(e.strategy.mu >= 0.0)) issues.push_back({"strategy.mu", "must be >= 0"});
  if (e.strategy.local_epochs < 0) {
    issues.push_back({"strategy.local_epochs", "must be >= 0"});
  }
  if (e.topology.edge_of.size() != e.topology.n_clients ||
      e.client_indices.size() != e.topology.n_clients) {
    issues.push_back({"topology", "client count does not match the partition"});
  }
  if (!issues.empty()) throw ConfigError(std::move(issues));
  s.plan = RoleAwareSplit(e.layers, e.cut1, e.cut2);

  const PlanParams init{BuildSegment(s.plan.client, DeriveSeed(e.seed, {Tag(Stream::kInit), 0})),
                        BuildSegment(s.plan.edge, DeriveSeed(e.seed, {Tag(Stream::kInit), 1})),
                        BuildSegment(s.plan.cloud, DeriveSeed(e.seed, {Tag(Stream::kInit), 2}))};
  const SegmentParams full = JoinParams(init);
  const StrategyKind kind = e.strategy.kind;
  const bool hosts_full = IsFlat(kind) || kind == StrategyKind::kHierFl;

  for (std::size_t i = 0; i < e.topology.n_clients; ++i) {
    s.clients.push_back({hosts_full ? full : init.client, Optimizer(e.strategy.optimizer),
                         e.train.Subset(e.client_indices[i])});
  }
  for (std::size_t j = 0; j < e.topology.n_edges; ++j) {
    EdgeNode edge{kind == StrategyKind::kHierFl ? full : init.edge, init.client,
                  Optimizer(e.strategy.optimizer), e.topology.ClientsOf(j), 0, {}};
    if (edge.clients.empty()) throw ConfigError("topology", "edge without clients");
    for (std::size_t i : edge.clients) edge.samples += s.clients[i].data.size();
    s.edges.push_back(std::move(edge));
  }
  SegmentParams cloud_params = init.cloud;
  if (hosts_full) cloud_params = full;
  if (kind == StrategyKind::kSplitFed) cloud_params = Concat(init.edge, init.cloud);
  s.cloud = CloudNode{std::move(cloud_params), init.client, Optimizer(e.strategy.optimizer)};
}

Simulation::~Simulation() = default;

int Simulation::round() const { return state_->round; }
const Experiment& Simulation::experiment() const { return state_->exp; }
const SplitPlan& Simulation::plan() const { return state_->plan; }
const Ledger& Simulation::ledger() const { return state_->ledger; }
void Simulation::set_zero_cloud_gradients(bool on) { state_->zero_cloud_gradients = on; }

const SegmentParams& Simulation::ClientParams(std::size_t client) const {
  return state_->clients.at(client).params;
}
const SegmentParams& Simulation::EdgeParams(std::size_t edge) const {
  return state_->edges.at(edge).params;
}
const SegmentParams& Simulation::CloudParams() const { return state_->cloud.params; }

RoundMetrics Simulation::Step() {
  State& s = *state_;
  ++s.round;
  s.train_losses.clear();
  s.skipped = 0;
  const auto active =
      SelectClients(s.exp.topology.n_clients, s.exp.schedule.sample_rate, s.round, s.exp.seed);
  switch (s.exp.strategy.kind) {
    case StrategyKind::kFedAvg:
    case StrategyKind::kFedSgd:
    case StrategyKind::kFedProx:
    case StrategyKind::kFedNova:
      s.FlatRound(active);
      break;
    case StrategyKind::kHierFl:
      s.HierFlRound(active);
      break;
    case StrategyKind::kSplitFed:
      s.SplitFedRound(active);
      break;
    case StrategyKind::kHsfl:
    case StrategyKind::kSherl:
      s.TieredRound(active);
      break;
  }
  RoundMetrics m = Evaluate();
  if (!s.train_losses.empty()) {
    double sum = 0.0;
    for (double l : s.train_losses) sum += l;
    m.train_loss = sum / static_cast<double>(s.train_losses.size());
  }
  m.skipped_clients = s.skipped;
  return m;
}

PlanParams Simulation::EvaluationModel() const {
  const State& s = *state_;
  switch (s.exp.strategy.kind) {
    case StrategyKind::kHierFl:
      return SplitParams(s.edges.front().params, s.plan);
    case StrategyKind::kSplitFed: {
      auto [edge, cloud] = Cut(s.cloud.params, s.plan.edge, s.plan.cloud);
      return PlanParams{s.cloud.client_agg, std::move(edge), std::move(cloud)};
    }
    case StrategyKind::kHsfl:
    case StrategyKind::kSherl:
      return PlanParams{s.edges.front().client_agg, s.edges.front().params, s.cloud.params};
    default:
      return SplitParams(s.cloud.params, s.plan);
  }
}

RoundMetrics Simulation::Evaluate() const {
  const State& s = *state_;
  const Dataset& test = s.exp.test;
  RoundMetrics m;
  m.round = s.round;
  m.round_bytes = s.ledger.round_bytes(s.round);
  if (test.size() == 0) return m;
  const PlanParams model = EvaluationModel();
  const Tensor embedding =
      ForwardSegment(model.edge, ForwardSegment(model.client, test.Features()));
  const Tensor logits = ForwardSegment(model.cloud, embedding);
  Tape tape;
  m.loss = CrossEntropy(tape, logits, test.labels).item();
  std::vector<int> predicted(test.size());
  const std::size_t classes = logits.cols();
  for (std::size_t r = 0; r < test.size(); ++r) {
    predicted[r] = static_cast<int>(ArgMax(logits.data().subspan(r * classes, classes)));
  }
  m.macro_f1 = MacroF1(predicted, test.labels, test.num_classes);
  if (s.exp.eval_silhouette) {
    try {
      m.silhouette = EmbeddingSeparation(embedding, test.labels);
    } catch (const ContractError&) {
      m.silhouette.reset();
    }
  }
  if (test.has_masks()) {
    const std::size_t grid = test.masks.front().rows;
    double iou = 0.0, dice = 0.0;
    for (std::size_t r = 0; r < test.size(); ++r) {
      const Overlap o = IouDice(MaskForClass(predicted[r], grid), test.masks[r]);
      iou += o.iou;
      dice += o.dice;
    }
    m.iou = iou / static_cast<double>(test.size());
    m.dice = dice / static_cast<double>(test.size());
  }
  return m;
}

Embeddings Simulation::TestEmbeddings() const {
  const Dataset& test = state_->exp.test;
  Embeddings out;
  out.labels = test.labels;
  if (test.size() == 0) return out;
  const PlanParams model = EvaluationModel();
  const Tensor embedding =
      ForwardSegment(model.edge, ForwardSegment(model.client, test.Features()));
  out.dim = embedding.cols();
  out.values.assign(embedding.data().begin(), embedding.data().end());
  return out;
}

ExperimentResult RunExperiment(Experiment experiment) {
  Simulation sim(std::move(experiment));
  ExperimentResult result;
  for (int r = 0; r < sim.experiment().schedule.rounds; ++r) {
    result.metrics.push_back(sim.Step());
  }
  result.ledger = sim.ledger();
  result.embeddings = sim.TestEmbeddings();
  return result;
}

}  // namespace tierfl
