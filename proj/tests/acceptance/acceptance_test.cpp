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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero
// when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tierfl/config.hpp"
#include "tierfl/error.hpp"
#include "tierfl/ledger.hpp"
#include "tierfl/losses.hpp"
#include "tierfl/model.hpp"
#include "tierfl/protocol.hpp"
#include "tierfl/rng.hpp"
#include "tierfl/runner.hpp"

namespace tierfl {
namespace {

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void Require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail << "; failed: ";
      else detail << "; ";
      detail << what;
      pass = false;
    }
  }
};

double MaxAbsDiff(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return INFINITY;
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

std::vector<double> RandomVector(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.Normal();
  return v;
}

// ---------------------------------------------------------------------------
// 1. Autodiff against central finite differences.

struct Graph {
  std::vector<LayerSpec> layers;
  SegmentLayout layout;
  Tensor x1, x2;
  std::vector<int> labels;       // cross-entropy graphs
  std::vector<int> pair_labels;  // contrastive graphs
  bool contrastive = false;
  double margin = 0.5;
};

double GraphLoss(const Graph& g, const std::vector<double>& params, Tensor* leaf_out) {
  Tape tape;
  Tensor w = Tensor::Vector(params, leaf_out != nullptr);
  Tensor loss;
  if (g.contrastive) {
    const Tensor c1 = ForwardSegment(tape, g.layout, w, g.x1);
    const Tensor c2 = ForwardSegment(tape, g.layout, w, g.x2);
    loss = ContrastiveLoss(tape, c1, c2, g.pair_labels, Margin(g.margin));
  } else {
    loss = CrossEntropy(tape, ForwardSegment(tape, g.layout, w, g.x1), g.labels);
  }
  if (leaf_out != nullptr) {
    tape.Backward(loss);
    *leaf_out = w;
  }
  return loss.item();
}

// Smallest |margin - cos| over the pairs of a contrastive graph.
double KinkDistance(const Graph& g, const std::vector<double>& params) {
  const SegmentParams p{params, g.layout};
  const Tensor c1 = ForwardSegment(p, g.x1), c2 = ForwardSegment(p, g.x2);
  double closest = INFINITY;
  for (std::size_t r = 0; r < c1.rows(); ++r) {
    const auto a = c1.data().subspan(r * c1.cols(), c1.cols());
    const auto b = c2.data().subspan(r * c2.cols(), c2.cols());
    closest = std::min(closest, std::abs(g.margin - CosineMeasure(a, b)));
  }
  return closest;
}

Graph RandomGraph(Rng& rng, bool contrastive) {
  Graph g;
  g.contrastive = contrastive;
  const std::size_t depth = 1 + rng.UniformInt(5);
  std::size_t in = 1 + rng.UniformInt(64);
  const std::size_t batch = 1 + rng.UniformInt(6);
  const std::size_t input_dim = in;
  for (std::size_t l = 0; l < depth; ++l) {
    const std::size_t out = (l + 1 == depth && !contrastive) ? 2 + rng.UniformInt(9)
                                                              : 1 + rng.UniformInt(64);
    const bool relu = l + 1 < depth && rng.Bernoulli(0.7);
    g.layers.push_back({in, out, relu ? Activation::kRelu : Activation::kNone});
    in = out;
  }
  g.layout = SegmentLayout::For(g.layers);
  g.x1 = Tensor::Matrix(batch, input_dim, RandomVector(rng, batch * input_dim));
  g.x2 = Tensor::Matrix(batch, input_dim, RandomVector(rng, batch * input_dim));
  for (std::size_t r = 0; r < batch; ++r) {
    g.labels.push_back(static_cast<int>(rng.UniformInt(in)));
    g.pair_labels.push_back(static_cast<int>(rng.UniformInt(2)));
  }
  g.margin = rng.Uniform(0.0, 2.0);
  return g;
}

Outcome GradientCorrectness() {
  Outcome o;
  const auto start = Clock::now();
  Rng rng(1001);
  double worst = 0.0;
  std::size_t checked = 0, kinks = 0, contrastive_graphs = 0;
  for (int gi = 0; gi < 100; ++gi) {
    const bool contrastive = gi % 2 == 1;
    Graph g;
    std::vector<double> params;
    // Redraw contrastive graphs that sit on the hinge kink or produce a zero
    // embedding.
    for (int attempt = 0;; ++attempt) {
      g = RandomGraph(rng, contrastive);
      params = BuildSegment(g.layers, rng.NextU64()).flat;
      for (double& p : params) p += 0.1 * rng.Normal();  // nonzero biases
      if (!contrastive) break;
      try {
        if (KinkDistance(g, params) > 1e-3) break;
      } catch (const NumericError&) {
      }
      if (attempt > 50) break;
    }
    contrastive_graphs += contrastive;
    Tensor leaf;
    GraphLoss(g, params, &leaf);
    const std::vector<double> analytic(leaf.grad().begin(), leaf.grad().end());
    // Up to 64 coordinates per graph.
    std::vector<std::size_t> coords(params.size());
    for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    for (std::size_t i = coords.size(); i > 1; --i) {
      std::swap(coords[i - 1], coords[rng.UniformInt(i)]);
    }
    coords.resize(std::min<std::size_t>(coords.size(), 64));
    for (std::size_t j : coords) {
      auto central = [&](double h) {
        std::vector<double> p = params;
        p[j] = params[j] + h;
        const double up = GraphLoss(g, p, nullptr);
        p[j] = params[j] - h;
        const double down = GraphLoss(g, p, nullptr);
        return (up - down) / (2.0 * h);
      };
      const double fd = central(1e-6);
      // A step that crosses a ReLU or hinge kink makes the two estimates
      // disagree; such coordinates are not differentiable at this scale.
      const double fd_half = central(5e-7);
      const double scale = std::max({std::abs(fd), std::abs(analytic[j]), 1e-3});
      if (std::abs(fd - fd_half) / scale > 1e-6) {
        ++kinks;
        continue;
      }
      const double rel = std::abs(analytic[j] - fd) / scale;
      worst = std::max(worst, rel);
      ++checked;
    }
  }
  const double secs = Seconds(start);
  o.detail << "100 graphs (" << contrastive_graphs << " contrastive), " << checked
           << " coordinates, " << kinks << " skipped at kinks, max rel err " << worst
           << ", " << secs << " s";
  o.Require(worst < 1e-5, "relative error >= 1e-5");
  o.Require(checked > 1000, "too few coordinates checked");
  o.Require(secs < 30.0, "runtime >= 30 s");
  return o;
}

// ---------------------------------------------------------------------------
// 2. Split transparency.

Outcome SplitTransparency() {
  Outcome o;
  Rng rng(2002);
  double worst_fwd = 0.0, worst_grad = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n_layers = 3 + rng.UniformInt(4);
    const std::size_t input = 1 + rng.UniformInt(32);
    std::vector<std::size_t> hidden;
    for (std::size_t l = 0; l + 1 < n_layers; ++l) hidden.push_back(1 + rng.UniformInt(32));
    const std::size_t classes = 2 + rng.UniformInt(6);
    const auto layers = MlpLayers(input, hidden, classes);
    const std::size_t cut1 = 1 + rng.UniformInt(n_layers - 2);
    const std::size_t cut2 = cut1 + 1 + rng.UniformInt(n_layers - cut1 - 1);
    const SplitPlan plan = RoleAwareSplit(layers, cut1, cut2);
    const SegmentParams full = BuildSegment(layers, rng.NextU64());
    const PlanParams parts = SplitParams(full, plan);
    const std::size_t batch = 1 + rng.UniformInt(8);
    const Tensor x = Tensor::Matrix(batch, input, RandomVector(rng, batch * input));
    std::vector<int> y;
    for (std::size_t r = 0; r < batch; ++r) y.push_back(static_cast<int>(rng.UniformInt(classes)));

    const Tensor unsplit = ForwardSegment(full, x);
    const Tensor hopped = ForwardSegment(
        parts.cloud, ForwardSegment(parts.edge, ForwardSegment(parts.client, x)));
    worst_fwd = std::max(worst_fwd, MaxAbsDiff({unsplit.data().begin(), unsplit.data().end()},
                                               {hopped.data().begin(), hopped.data().end()}));

    const SegmentGradients g = SplitTaskGradients(parts, x, y);
    Tape tape;
    Tensor w = Tensor::Vector(full.flat, true);
    const Tensor loss = CrossEntropy(tape, ForwardSegment(tape, full.layout, w, x), y);
    tape.Backward(loss);
    std::vector<double> joined = g.client;
    joined.insert(joined.end(), g.edge.begin(), g.edge.end());
    joined.insert(joined.end(), g.cloud.begin(), g.cloud.end());
    worst_grad = std::max(worst_grad, MaxAbsDiff(joined, {w.grad().begin(), w.grad().end()}));
    worst_grad = std::max(worst_grad, std::abs(g.loss - loss.item()));
  }
  o.detail << "20 configs, max forward diff " << worst_fwd << ", max gradient diff "
           << worst_grad;
  o.Require(worst_fwd <= 1e-10, "forward mismatch");
  o.Require(worst_grad <= 1e-10, "gradient mismatch");
  return o;
}

// ---------------------------------------------------------------------------
// 3. Hierarchy collapse.

RunConfig CollapseBase() {
  RunConfig c;
  c.seed = 3003;
  c.strategy.kind = StrategyKind::kFedAvg;
  c.strategy.batch_size = 8;
  c.strategy.local_epochs = 2;
  c.strategy.optimizer.lr = 1e-3;
  c.n_clients = 8;
  c.n_edges = 1;
  c.schedule = Schedule{20, 1, 1, 0.5};
  c.model.hidden = {16, 16, 8, 8};
  c.data.classes = 4;
  c.data.dim = 8;
  c.data.train_per_class = 32;  // 16 samples per client, two batches each
  c.data.test_per_class = 10;
  c.data.partition = PartitionMode::kIid;
  c.eval_silhouette = false;
  return c;
}

bool BitIdentical(const Simulation& a, const Simulation& b) {
  if (a.CloudParams().flat != b.CloudParams().flat) return false;
  for (std::size_t i = 0; i < a.experiment().topology.n_clients; ++i) {
    if (a.ClientParams(i).flat != b.ClientParams(i).flat) return false;
  }
  return true;
}

Outcome HierarchyCollapse() {
  Outcome o;
  const RunConfig avg = CollapseBase();
  RunConfig hier = avg;
  hier.strategy.kind = StrategyKind::kHierFl;
  RunConfig prox = avg;
  prox.strategy.kind = StrategyKind::kFedProx;
  prox.strategy.mu = 0.0;
  RunConfig nova = avg;
  nova.strategy.kind = StrategyKind::kFedNova;

  Simulation s_avg(BuildExperiment(avg)), s_hier(BuildExperiment(hier)),
      s_prox(BuildExperiment(prox)), s_nova(BuildExperiment(nova));
  bool hier_same = true, prox_same = true;
  double nova_diff = 0.0;
  for (int r = 0; r < 20; ++r) {
    const RoundMetrics ma = s_avg.Step();
    const RoundMetrics mh = s_hier.Step();
    const RoundMetrics mp = s_prox.Step();
    s_nova.Step();
    hier_same = hier_same && BitIdentical(s_avg, s_hier) && ma.loss == mh.loss &&
                ma.macro_f1 == mh.macro_f1;
    prox_same = prox_same && BitIdentical(s_avg, s_prox) && ma.loss == mp.loss;
    nova_diff = std::max(nova_diff, MaxAbsDiff(s_avg.CloudParams().flat, s_nova.CloudParams().flat));
  }
  o.detail << "hierfl==fedavg bitwise: " << (hier_same ? "yes" : "no")
           << ", fedprox(mu=0)==fedavg bitwise: " << (prox_same ? "yes" : "no")
           << ", fednova max diff " << nova_diff << " over 20 rounds";
  o.Require(hier_same, "hierfl diverged from fedavg");
  o.Require(prox_same, "fedprox diverged from fedavg");
  o.Require(nova_diff <= 1e-12, "fednova differs by more than 1e-12");
  return o;
}

// ---------------------------------------------------------------------------
// 4. Reference cost table arithmetic. Values in GB.

struct TableRow {
  std::string name;
  StrategyKind strategy;
  int t1, t2;
  std::map<MessageKind, double> gb;
  double printed_total;
};

std::vector<TableRow> CostTable() {
  using enum MessageKind;
  auto tiered = [](std::string name, StrategyKind kind, int t1, int t2, double up,
                   double down, double edge, double total) {
    TableRow row{std::move(name), kind, t1, t2,
                 {{kClientSmashedUp, 54.93}, {kEdgeSmashedUp, 13.74},
                  {kClientModelUp, up}, {kClientModelDown, down},
                  {kEdgeModelUp, edge}, {kEdgeModelDown, edge},
                  {kGradFromEdge, 31.25}},
                 total};
    if (kind == StrategyKind::kHsfl) row.gb[kGradFromCloud] = 12.22;
    return row;
  };
  return {
      {"FedAvg", StrategyKind::kFedAvg, 1, 1,
       {{kClientModelUp, 351.40}, {kClientModelDown, 3513.95}}, 3865.35},
      {"HierFL", StrategyKind::kHierFl, 5, 10,
       {{kClientModelUp, 351.40}, {kClientModelDown, 3865.34}, {kEdgeModelUp, 175.70}},
       4392.44},
      {"SplitFed", StrategyKind::kSplitFed, 1, 1,
       {{kClientSmashedUp, 6.87}, {kClientModelUp, 1.09}, {kClientModelDown, 216.82},
        {kGradFromCloud, 3.73}},
       228.51},
      tiered("HSFL(A)", StrategyKind::kHsfl, 5, 10, 0.22, 0.93, 1.34, 115.97),
      tiered("HSFL(B)", StrategyKind::kHsfl, 10, 20, 0.11, 0.48, 0.67, 114.07),
      tiered("HSFL(C)", StrategyKind::kHsfl, 25, 50, 0.06, 0.24, 0.34, 113.12),
      tiered("Ours(A)", StrategyKind::kSherl, 5, 10, 0.22, 0.93, 1.34, 103.75),
      tiered("Ours(B)", StrategyKind::kSherl, 10, 20, 0.11, 0.48, 0.67, 101.85),
      tiered("Ours(C)", StrategyKind::kSherl, 25, 50, 0.06, 0.24, 0.34, 100.90),
  };
}

CostModelInput ReferenceShape(StrategyKind kind, int t1, int t2) {
  CostModelInput in;
  in.strategy = kind;
  in.n_clients = 200;
  in.n_edges = 10;
  in.rounds = 200;
  in.sample_rate = 0.1;
  in.t1 = t1;
  in.t2 = t2;
  return in;
}

Outcome TableArithmetic() {
  Outcome o;
  std::map<std::string, double> totals;
  std::map<std::string, CostModelInput> units;
  double worst = 0.0;
  for (const TableRow& row : CostTable()) {
    LedgerSummary observed;
    for (const auto& [kind, gb] : row.gb) observed[kind] = gb * kBytesPerGB;
    const CostModelInput in = InvertUnitSizes(ReferenceShape(row.strategy, row.t1, row.t2), observed);
    const LedgerSummary predicted = AnalyticCost(in);
    const double total = predicted.Total() / kBytesPerGB;
    totals[row.name] = total;
    units[row.name] = in;
    worst = std::max(worst, std::abs(total - row.printed_total));
    o.Require(std::abs(total - row.printed_total) <= 0.01, row.name + " total off");
    for (const auto& [kind, gb] : row.gb) {
      o.Require(std::abs(predicted[kind] / kBytesPerGB - gb) <= 0.005,
                row.name + " " + MessageKindName(kind) + " off");
    }
  }
  double worst_delta = 0.0;
  for (const char* s : {"A", "B", "C"}) {
    const std::string h = std::string("HSFL(") + s + ")", ours = std::string("Ours(") + s + ")";
    const double delta = totals[h] - totals[ours];
    worst_delta = std::max(worst_delta, std::abs(delta - 12.22));
    // The whole gap is the cloud gradient category.
    CostModelInput as_sherl = units[h];
    as_sherl.strategy = StrategyKind::kSherl;
    const LedgerSummary hsfl = AnalyticCost(units[h]), sherl = AnalyticCost(as_sherl);
    for (MessageKind k : kAllMessageKinds) {
      if (k == MessageKind::kGradFromCloud) continue;
      o.Require(hsfl[k] == sherl[k], h + " and " + ours + " differ outside grad_from_cloud");
    }
    o.Require(sherl[MessageKind::kGradFromCloud] == 0.0, ours + " has cloud gradients");
    o.Require(std::abs((hsfl.Total() - sherl.Total()) / kBytesPerGB - 12.22) <= 1e-9,
              h + " - " + ours + " != 12.22 GB");
    o.Require(std::abs(sherl.Total() / kBytesPerGB - totals[ours]) <= 1e-9,
              ours + " not reproduced from " + h + " unit sizes");
  }
  o.detail << "max row total error " << worst << " GB, max |HSFL-Ours - 12.22| "
           << worst_delta << " GB";
  o.Require(worst_delta <= 1e-9, "HSFL-Ours delta");
  return o;
}

// ---------------------------------------------------------------------------
// 5. Ordering at the reference scale.

RunConfig ReferenceScale(StrategyKind kind) {
  RunConfig c;
  c.seed = 5005;
  c.strategy.kind = kind;
  c.n_clients = 200;
  c.n_edges = 10;
  c.schedule = Schedule{200, 5, 10, 0.1};
  if (kind == StrategyKind::kHierFl) c.schedule.t1 = c.schedule.t2 = 1;
  if (kind == StrategyKind::kSplitFed) c.schedule.t1 = c.schedule.t2 = 1;
  c.data.classes = 10;
  c.data.train_per_class = 400;  // 20 samples per client on average
  c.data.test_per_class = 20;
  c.eval_silhouette = false;
  return c;
}

Outcome Ordering() {
  Outcome o;
  const auto start = Clock::now();
  const std::vector<std::pair<std::string, StrategyKind>> order = {
      {"sherl", StrategyKind::kSherl},       {"hsfl", StrategyKind::kHsfl},
      {"splitfed", StrategyKind::kSplitFed}, {"fedavg", StrategyKind::kFedAvg},
      {"hierfl", StrategyKind::kHierFl}};
  std::vector<double> gb;
  for (const auto& [name, kind] : order) {
    const ExperimentResult r = RunExperiment(BuildExperiment(ReferenceScale(kind)));
    gb.push_back(static_cast<double>(r.ledger.total_bytes()) / kBytesPerGB);
    o.detail << name << " " << gb.back() << " GB, ";
    if (kind == StrategyKind::kSherl) {
      bool clean = r.ledger.kind_bytes(MessageKind::kGradFromCloud) == 0;
      for (const MessageRecord& m : r.ledger.records()) {
        clean = clean && m.kind != MessageKind::kGradFromCloud;
      }
      o.Require(clean, "sherl ledger holds cloud gradients");
      o.Require(r.metrics.size() == 200, "sherl did not run 200 rounds");
    }
  }
  for (std::size_t i = 0; i + 1 < gb.size(); ++i) {
    o.Require(gb[i] < gb[i + 1], order[i].first + " !< " + order[i + 1].first);
  }
  o.detail << Seconds(start) << " s";
  return o;
}

// ---------------------------------------------------------------------------
// 6. Schedule scaling of the model exchange categories.

Outcome ScheduleScaling() {
  Outcome o;
  const std::vector<MessageKind> exchange = {MessageKind::kClientModelUp,
                                             MessageKind::kClientModelDown,
                                             MessageKind::kEdgeModelUp,
                                             MessageKind::kEdgeModelDown};
  for (int rounds : {200, 203}) {
    std::map<std::pair<int, int>, Ledger> ledgers;
    for (auto [t1, t2] : {std::pair{5, 10}, std::pair{10, 20}, std::pair{25, 50}}) {
      RunConfig c;
      c.seed = 6006;
      c.strategy.kind = StrategyKind::kHsfl;
      c.n_clients = 20;
      c.n_edges = 2;
      c.schedule = Schedule{rounds, t1, t2, 0.1};
      c.model.hidden = {8, 8, 6, 6};
      c.data.classes = 3;
      c.data.dim = 4;
      c.data.train_per_class = 40;
      c.data.test_per_class = 5;
      c.eval_silhouette = false;
      ledgers[{t1, t2}] = RunExperiment(BuildExperiment(c)).ledger;
    }
    const Ledger& a = ledgers[{5, 10}];
    const Ledger& b = ledgers[{10, 20}];
    const Ledger& cc = ledgers[{25, 50}];
    // One sync event moves `per_sync` messages of a kind; rounding of R / t may
    // shift the count by one event.
    const std::map<MessageKind, double> per_sync = {{MessageKind::kClientModelUp, 2},
                                                    {MessageKind::kClientModelDown, 20},
                                                    {MessageKind::kEdgeModelUp, 2},
                                                    {MessageKind::kEdgeModelDown, 2}};
    for (MessageKind k : exchange) {
      const double na = static_cast<double>(a.count(k)), nb = static_cast<double>(b.count(k)),
                   nc = static_cast<double>(cc.count(k));
      const double tol = per_sync.at(k);
      o.Require(std::abs(na - 2.0 * nb) <= tol,
                std::string("doubling ") + MessageKindName(k) + " R=" + std::to_string(rounds));
      o.Require(std::abs(na - 5.0 * nc) <= tol,
                std::string("A->C ") + MessageKindName(k) + " R=" + std::to_string(rounds));
      if (rounds == 200) {
        o.detail << MessageKindName(k) << " " << na << "/" << nb << "/" << nc << " msgs, ";
        // Bytes scale exactly: the model sizes do not change with the schedule.
        o.Require(a.kind_bytes(k) == 5 * cc.kind_bytes(k),
                  std::string("bytes A != 5C ") + MessageKindName(k));
      }
    }
  }
  o.detail << "reference HSFL client_model_up 0.22->0.06 GB is " << 0.22 / 0.06
           << "x after two-decimal rounding";
  return o;
}

// ---------------------------------------------------------------------------
// 7. Desk-scale learning.

RunConfig DeskScale(StrategyKind kind, PartitionMode partition) {
  RunConfig c;
  c.seed = 7007;
  c.strategy.kind = kind;
  c.strategy.margin = 0.5;
  c.strategy.optimizer.lr = 1e-2;
  c.n_clients = 20;
  c.n_edges = 2;
  c.schedule = Schedule{50, 5, 10, 1.0};
  c.model.hidden = {32, 32, 16, 16};
  c.data.classes = 4;
  c.data.dim = 16;
  c.data.train_per_class = 50;
  c.data.test_per_class = 50;
  c.data.partition = partition;
  c.data.alpha = 0.3;
  c.eval_silhouette = true;
  return c;
}

Outcome DeskScaleLearning() {
  Outcome o;
  const auto start = Clock::now();
  const ExperimentResult iid =
      RunExperiment(BuildExperiment(DeskScale(StrategyKind::kSherl, PartitionMode::kIid)));
  double best_f1 = 0.0;
  int first_round = 0;
  for (const RoundMetrics& m : iid.metrics) {
    if (first_round == 0 && m.macro_f1 >= 0.9) first_round = m.round;
    best_f1 = std::max(best_f1, m.macro_f1);
  }
  const double final_f1 = iid.metrics.back().macro_f1;
  o.detail << "iid macro-F1 first >= 0.9 at round " << first_round << ", final " << final_f1;
  o.Require(first_round > 0, "macro-F1 never reached 0.9 within 50 rounds");

  const ExperimentResult full = RunExperiment(
      BuildExperiment(DeskScale(StrategyKind::kSherl, PartitionMode::kDirichlet)));
  const ExperimentResult ablated = RunExperiment(
      BuildExperiment(DeskScale(StrategyKind::kHsfl, PartitionMode::kDirichlet)));
  const auto& sf = full.metrics.back().silhouette;
  const auto& sa = ablated.metrics.back().silhouette;
  o.Require(sf.has_value() && sa.has_value(), "silhouette unavailable");
  if (sf && sa) {
    o.detail << "; dirichlet silhouette full " << *sf << " vs no_contrastive " << *sa;
    o.Require(*sf > *sa, "full silhouette does not exceed the ablation");
  }
  const double secs = Seconds(start);
  o.detail << "; " << secs << " s";
  o.Require(secs < 300.0, "runtime >= 5 min");
  return o;
}

// ---------------------------------------------------------------------------
// 8. Margin sweep.

Outcome MarginSweep() {
  Outcome o;
  RunConfig base = DeskScale(StrategyKind::kSherl, PartitionMode::kIid);
  base.schedule.rounds = 20;
  const std::string text = std::string(R"({"base": )") + ConfigToJson(base) +
                           R"(, "axis": "margin", "values": [0.2, 0.5, 1.0, 1.5, 2.0]})";
  const SweepSpec spec = ParseSweep(text);
  const auto first = RunSweep(spec, false);
  const auto second = RunSweep(spec, false);
  o.Require(first.size() == 5, "expected 5 rows");
  for (const SweepRow& r : first) {
    o.Require(r.ok, r.label + ": " + r.error);
    o.Require(r.final.round == 20, r.label + " incomplete");
    o.detail << r.label << " f1=" << r.final.macro_f1 << " ";
  }
  o.Require(SweepCsv(first) == SweepCsv(second), "sweep not deterministic");
  return o;
}

// ---------------------------------------------------------------------------
// 9. Byte-identical reruns.

std::string Slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome Determinism() {
  Outcome o;
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "tierfl_acceptance_determinism";
  fs::remove_all(root);
  for (StrategyKind kind :
       {StrategyKind::kFedAvg, StrategyKind::kFedSgd, StrategyKind::kFedProx,
        StrategyKind::kFedNova, StrategyKind::kSplitFed, StrategyKind::kHierFl,
        StrategyKind::kHsfl, StrategyKind::kSherl}) {
    RunConfig c = CollapseBase();
    c.strategy.kind = kind;
    c.strategy.mu = 0.01;
    c.n_edges = 2;
    c.schedule = Schedule{6, 2, 4, 0.5};
    c.data.partition = PartitionMode::kDirichlet;
    c.eval_silhouette = true;
    for (const char* run : {"a", "b"}) {
      c.output_dir = (root / StrategyName(kind) / run).string();
      RunToDisk(c);
    }
    for (const char* file : {"metrics.csv", "ledger.csv"}) {
      const std::string a = Slurp(root / StrategyName(kind) / "a" / file);
      const std::string b = Slurp(root / StrategyName(kind) / "b" / file);
      o.Require(!a.empty() && a == b, std::string(StrategyName(kind)) + " " + file);
    }
  }
  fs::remove_all(root);
  o.detail << "8 strategies, metrics.csv and ledger.csv compared byte for byte";
  return o;
}

}  // namespace
}  // namespace tierfl

int main() {
  using tierfl::Outcome;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"gradient_correctness", tierfl::GradientCorrectness},
      {"split_transparency", tierfl::SplitTransparency},
      {"hierarchy_collapse", tierfl::HierarchyCollapse},
      {"cost_table_arithmetic", tierfl::TableArithmetic},
      {"ordering_at_scale", tierfl::Ordering},
      {"schedule_scaling", tierfl::ScheduleScaling},
      {"desk_scale_learning", tierfl::DeskScaleLearning},
      {"margin_sweep", tierfl::MarginSweep},
      {"determinism", tierfl::Determinism},
  };
  int failures = 0;
  int index = 0;
  for (const auto& [name, fn] : criteria) {
    ++index;
    bool pass = false;
    std::string detail;
    try {
      Outcome o = fn();
      pass = o.pass;
      detail = o.detail.str();
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    failures += !pass;
    std::printf("%s %d %s: %s\n", pass ? "PASS" : "FAIL", index, name, detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
