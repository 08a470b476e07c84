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

#include "tierfl/checks.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>

#include "tierfl/config.hpp"
#include "tierfl/error.hpp"
#include "tierfl/ledger.hpp"
#include "tierfl/losses.hpp"
#include "tierfl/protocol.hpp"
#include "tierfl/rng.hpp"
#include "tierfl/runner.hpp"

namespace tierfl {

namespace {

RunConfig TinyConfig(StrategyKind kind, std::uint64_t seed) {
  RunConfig c;
  c.seed = seed;
  c.strategy.kind = kind;
  c.strategy.batch_size = 8;
  c.n_clients = 4;
  c.n_edges = 2;
  c.schedule = Schedule{4, 1, 2, 1.0};
  c.model.hidden = {8, 8, 6, 6};
  c.data.classes = 3;
  c.data.dim = 6;
  c.data.train_per_class = 8;
  c.data.test_per_class = 4;
  c.data.partition = PartitionMode::kIid;
  c.eval_silhouette = false;
  return c;
}

std::vector<LayerSpec> RandomLayers(Rng& rng, std::size_t count) {
  std::vector<LayerSpec> layers;
  std::size_t in = 2 + rng.UniformInt(6);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t out = 2 + rng.UniformInt(6);
    layers.push_back({in, out, i + 1 < count ? Activation::kRelu : Activation::kNone});
    in = out;
  }
  return layers;
}

Tensor RandomInput(Rng& rng, std::size_t rows, std::size_t cols) {
  std::vector<double> v(rows * cols);
  for (double& x : v) x = rng.Normal();
  return Tensor::Matrix(rows, cols, std::move(v));
}

double MaxAbsDiff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return INFINITY;
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

CheckResult Gradients(std::uint64_t seed) {
  Rng rng(DeriveSeed(seed, {101}));
  double worst = 0.0;
  for (int g = 0; g < 10; ++g) {
    const auto layers = RandomLayers(rng, 1 + rng.UniformInt(4));
    SegmentParams p = BuildSegment(layers, rng.NextU64());
    // Zero-initialised biases can leave a pre-activation exactly on the ReLU kink.
    for (double& w : p.flat) w += 0.1 * rng.Normal();
    const std::size_t rows = 3;
    const Tensor x = RandomInput(rng, rows, layers.front().in_dim);
    std::vector<int> labels(rows);
    for (int& y : labels) y = static_cast<int>(rng.UniformInt(layers.back().out_dim));
    const SegmentLayout layout = p.layout;
    ScalarFunction f = [&](Tape& t, const Tensor& w) {
      return CrossEntropy(t, ForwardSegment(t, layout, w, x), labels);
    };
    worst = std::max(worst, GradientCheck(f, Tensor::Vector(p.flat), 1e-6));
  }
  return {"gradient_check", worst < 1e-5, "max relative error " + FormatNumber(worst)};
}

CheckResult SplitTransparency(std::uint64_t seed) {
  Rng rng(DeriveSeed(seed, {102}));
  double worst = 0.0;
  for (int g = 0; g < 10; ++g) {
    const auto layers = RandomLayers(rng, 3 + rng.UniformInt(3));
    const std::size_t cut1 = 1 + rng.UniformInt(layers.size() - 2);
    const std::size_t cut2 = cut1 + 1 + rng.UniformInt(layers.size() - cut1 - 1);
    const SplitPlan plan = RoleAwareSplit(layers, cut1, cut2);
    const SegmentParams full = BuildSegment(layers, rng.NextU64());
    const Tensor x = RandomInput(rng, 4, layers.front().in_dim);
    std::vector<int> labels(4);
    for (int& y : labels) y = static_cast<int>(rng.UniformInt(layers.back().out_dim));
    const SegmentGradients split = SplitTaskGradients(SplitParams(full, plan), x, labels);
    Tape t;
    Tensor w = Tensor::Vector(full.flat, true);
    t.Backward(CrossEntropy(t, ForwardSegment(t, full.layout, w, x), labels));
    std::vector<double> joined = split.client;
    joined.insert(joined.end(), split.edge.begin(), split.edge.end());
    joined.insert(joined.end(), split.cloud.begin(), split.cloud.end());
    worst = std::max(worst, MaxAbsDiff(joined, w.grad()));
  }
  return {"split_transparency", worst <= 1e-10, "max abs difference " + FormatNumber(worst)};
}

bool SameTrajectory(Simulation& a, Simulation& b, int rounds) {
  for (int r = 0; r < rounds; ++r) {
    a.Step();
    b.Step();
    if (a.CloudParams().flat != b.CloudParams().flat) return false;
    for (std::size_t i = 0; i < a.experiment().topology.n_clients; ++i) {
      if (a.ClientParams(i).flat != b.ClientParams(i).flat) return false;
    }
  }
  return true;
}

CheckResult HierarchyCollapse(std::uint64_t seed) {
  RunConfig flat = TinyConfig(StrategyKind::kFedAvg, seed);
  flat.n_edges = 1;
  RunConfig hier = flat;
  hier.strategy.kind = StrategyKind::kHierFl;
  hier.schedule.t1 = hier.schedule.t2 = 1;
  Simulation a(BuildExperiment(flat));
  Simulation b(BuildExperiment(hier));
  const bool same = SameTrajectory(a, b, 5);
  return {"hierarchy_collapse", same, same ? "bit-identical" : "trajectories differ"};
}

CheckResult ProxReduction(std::uint64_t seed) {
  RunConfig avg = TinyConfig(StrategyKind::kFedAvg, seed);
  RunConfig prox = avg;
  prox.strategy.kind = StrategyKind::kFedProx;
  prox.strategy.mu = 0.0;
  Simulation a(BuildExperiment(avg));
  Simulation b(BuildExperiment(prox));
  const bool same = SameTrajectory(a, b, 5);
  return {"fedprox_mu0", same, same ? "bit-identical" : "trajectories differ"};
}

CheckResult NovaReduction(std::uint64_t seed) {
  Rng rng(DeriveSeed(seed, {103}));
  const auto layers = RandomLayers(rng, 2);
  const SegmentParams start = BuildSegment(layers, rng.NextU64());
  std::vector<SegmentParams> locals;
  std::vector<NovaUpdate> updates;
  std::vector<Contribution> parts;
  for (std::size_t i = 0; i < 5; ++i) {
    SegmentParams local = start;
    for (double& v : local.flat) v += 0.1 * rng.Normal();
    locals.push_back(local);
  }
  for (std::size_t i = 0; i < locals.size(); ++i) {
    const double w = 1.0 + static_cast<double>(rng.UniformInt(10));
    NovaUpdate u{i, std::vector<double>(start.flat.size()), 3, w};
    for (std::size_t j = 0; j < u.delta.size(); ++j) u.delta[j] = start.flat[j] - locals[i].flat[j];
    updates.push_back(std::move(u));
    parts.push_back({i, &locals[i], w});
  }
  const double diff = MaxAbsDiff(AggregateFedNova(start, updates).flat,
                                 AggregateWeighted(parts).flat);
  return {"fednova_homogeneous", diff <= 1e-12, "max abs difference " + FormatNumber(diff)};
}

CheckResult Permutation(std::uint64_t seed) {
  Rng rng(DeriveSeed(seed, {104}));
  const auto layers = RandomLayers(rng, 2);
  std::vector<SegmentParams> models;
  for (int i = 0; i < 6; ++i) models.push_back(BuildSegment(layers, rng.NextU64()));
  std::vector<Contribution> parts;
  for (std::size_t i = 0; i < models.size(); ++i) {
    parts.push_back({i, &models[i], 1.0 + static_cast<double>(rng.UniformInt(5))});
  }
  const SegmentParams ref = AggregateWeighted(parts);
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    for (std::size_t i = parts.size(); i > 1; --i) std::swap(parts[i - 1], parts[rng.UniformInt(i)]);
    worst = std::max(worst, MaxAbsDiff(AggregateWeighted(parts).flat, ref.flat));
  }
  return {"aggregation_permutation", worst <= 1e-12, "max abs difference " + FormatNumber(worst)};
}

CheckResult LedgerShape(std::uint64_t seed) {
  const ExperimentResult sherl = RunExperiment(BuildExperiment(TinyConfig(StrategyKind::kSherl, seed)));
  const LedgerSummary s = sherl.ledger.Summary();
  double sum = 0.0;
  for (double b : s.bytes) sum += b;
  const bool row_sum = sum == static_cast<double>(sherl.ledger.total_bytes());
  const bool no_cloud_grad = sherl.ledger.count(MessageKind::kGradFromCloud) == 0;
  const bool csv_round_trip = SummarizeLedgerCsv(sherl.ledger.ToCsv()).bytes == s.bytes;
  return {"ledger_shape", row_sum && no_cloud_grad && csv_round_trip,
          std::string("row sum ") + (row_sum ? "ok" : "broken") + ", sherl cloud gradients " +
              std::to_string(sherl.ledger.count(MessageKind::kGradFromCloud)) + ", csv round trip " +
              (csv_round_trip ? "ok" : "broken")};
}

// Only nested schedules (t2 a multiple of t1) are compared: with t1=2, t2=5 the
// union of sync rounds is larger than with t1=2, t2=4.
CheckResult ScheduleMonotonic() {
  const std::vector<std::pair<int, int>> nested_steps = {
      {1, 2}, {2, 3}, {3, 4}, {4, 6}, {6, 8}, {8, 12}, {12, 24}};
  bool ok = true;
  auto no_growth = [&](const CostModelInput& from, const CostModelInput& to) {
    const LedgerSummary a = AnalyticCost(from), b = AnalyticCost(to);
    for (MessageKind k : {MessageKind::kClientModelUp, MessageKind::kClientModelDown,
                          MessageKind::kEdgeModelUp, MessageKind::kEdgeModelDown}) {
      ok = ok && b[k] <= a[k];
    }
  };
  for (StrategyKind kind : {StrategyKind::kSplitFed, StrategyKind::kHierFl, StrategyKind::kHsfl,
                            StrategyKind::kSherl}) {
    CostModelInput base;
    base.strategy = kind;
    base.client_model = base.edge_model = 1.0;
    for (const auto& [lo, hi] : nested_steps) {
      CostModelInput a = base, b = base;
      a.t1 = lo;
      b.t1 = hi;
      a.t2 = b.t2 = 24;
      no_growth(a, b);
    }
    for (int t1 = 1; t1 <= 8; ++t1) {
      for (int m = 1; m <= 4; ++m) {
        CostModelInput a = base, b = base;
        a.t1 = b.t1 = t1;
        a.t2 = m * t1;
        b.t2 = (m + 1) * t1;
        no_growth(a, b);
      }
    }
  }
  return {"schedule_monotonic", ok,
          ok ? "model exchange never grows with t1 or t2 over nested schedules" : "violated"};
}

CheckResult Determinism(std::uint64_t seed) {
  const RunConfig c = TinyConfig(StrategyKind::kSherl, seed);
  const RunArtifacts a = RenderArtifacts(c, RunExperiment(BuildExperiment(c)));
  const RunArtifacts b = RenderArtifacts(c, RunExperiment(BuildExperiment(c)));
  const bool same = a.metrics_csv == b.metrics_csv && a.ledger_csv == b.ledger_csv;
  return {"determinism", same, same ? "byte-identical metrics and ledger" : "outputs differ"};
}

}  // namespace

std::vector<CheckResult> RunInvariantChecks(std::uint64_t seed) {
  const std::vector<std::pair<const char*, std::function<CheckResult()>>> checks = {
      {"gradient_check", [&] { return Gradients(seed); }},
      {"split_transparency", [&] { return SplitTransparency(seed); }},
      {"hierarchy_collapse", [&] { return HierarchyCollapse(seed); }},
      {"fedprox_mu0", [&] { return ProxReduction(seed); }},
      {"fednova_homogeneous", [&] { return NovaReduction(seed); }},
      {"aggregation_permutation", [&] { return Permutation(seed); }},
      {"ledger_shape", [&] { return LedgerShape(seed); }},
      {"schedule_monotonic", [] { return ScheduleMonotonic(); }},
      {"determinism", [&] { return Determinism(seed); }},
  };
  std::vector<CheckResult> results;
  for (const auto& [name, check] : checks) {
    try {
      results.push_back(check());
    } catch (const std::exception& e) {
      results.push_back({name, false, e.what()});
    }
  }
  return results;
}

}  // namespace tierfl
