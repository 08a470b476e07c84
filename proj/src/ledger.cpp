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

#include "tierfl/ledger.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "tierfl/error.hpp"

namespace tierfl {
namespace {

constexpr std::array<const char*, kNumMessageKinds> kKindNames = {
    "client_smashed_up", "edge_smashed_up", "client_model_up", "client_model_down",
    "edge_model_up",     "edge_model_down", "grad_from_cloud", "grad_from_edge",
};

constexpr std::array<const char*, 8> kStrategyNames = {
    "fedavg", "fedsgd", "fedprox", "fednova", "splitfed", "hierfl", "hsfl", "sherl",
};

}  // namespace

const char* StrategyName(StrategyKind kind) {
  return kStrategyNames[static_cast<std::size_t>(kind)];
}

std::optional<StrategyKind> ParseStrategy(std::string_view name) {
  for (std::size_t i = 0; i < kStrategyNames.size(); ++i) {
    if (name == kStrategyNames[i]) return static_cast<StrategyKind>(i);
  }
  return std::nullopt;
}

bool IsFlat(StrategyKind kind) {
  return kind == StrategyKind::kFedAvg || kind == StrategyKind::kFedSgd ||
         kind == StrategyKind::kFedProx || kind == StrategyKind::kFedNova;
}

bool IsTieredSplit(StrategyKind kind) {
  return kind == StrategyKind::kHsfl || kind == StrategyKind::kSherl;
}

const char* TierName(Tier tier) {
  switch (tier) {
    case Tier::kClient: return "client";
    case Tier::kEdge: return "edge";
    case Tier::kCloud: return "cloud";
  }
  return "?";
}

std::optional<Tier> ParseTier(std::string_view name) {
  for (Tier t : {Tier::kClient, Tier::kEdge, Tier::kCloud}) {
    if (name == TierName(t)) return t;
  }
  return std::nullopt;
}

const char* MessageKindName(MessageKind kind) { return kKindNames[KindIndex(kind)]; }

std::optional<MessageKind> ParseMessageKind(std::string_view name) {
  for (MessageKind k : kAllMessageKinds) {
    if (name == MessageKindName(k)) return k;
  }
  return std::nullopt;
}

bool KindMatchesTiers(MessageKind kind, Tier src, Tier dst) {
  using enum Tier;
  switch (kind) {
    case MessageKind::kClientSmashedUp:
    case MessageKind::kClientModelUp:
      return src == kClient && (dst == kEdge || dst == kCloud);
    case MessageKind::kClientModelDown:
      return (src == kEdge || src == kCloud) && dst == kClient;
    case MessageKind::kEdgeSmashedUp:
    case MessageKind::kEdgeModelUp:
      return src == kEdge && dst == kCloud;
    case MessageKind::kEdgeModelDown:
      return src == kCloud && dst == kEdge;
    case MessageKind::kGradFromCloud:
      return src == kCloud && (dst == kEdge || dst == kClient);
    case MessageKind::kGradFromEdge:
      return src == kEdge && dst == kClient;
  }
  return false;
}

double LedgerSummary::Total() const {
  double total = 0.0;
  for (double b : bytes) total += b;
  return total;
}

std::string LedgerSummary::ToJson() const {
  nlohmann::ordered_json j;
  for (MessageKind k : kAllMessageKinds) j[MessageKindName(k)] = (*this)[k];
  j["total"] = Total();
  return j.dump(2);
}

void Ledger::Record(const MessageRecord& m) {
  if (!KindMatchesTiers(m.kind, m.src, m.dst)) {
    throw ContractError(std::string("ledger: ") + MessageKindName(m.kind) +
                        " cannot travel " + TierName(m.src) + " -> " + TierName(m.dst));
  }
  if (m.round < 0) throw ContractError("ledger: negative round");
  records_.push_back(m);
  per_kind_[KindIndex(m.kind)] += m.bytes;
  counts_[KindIndex(m.kind)] += 1;
  total_ += m.bytes;
  const auto r = static_cast<std::size_t>(m.round);
  if (per_round_.size() <= r) per_round_.resize(r + 1, 0);
  per_round_[r] += m.bytes;
}

std::uint64_t Ledger::round_bytes(int round) const {
  const auto r = static_cast<std::size_t>(round);
  return round >= 0 && r < per_round_.size() ? per_round_[r] : 0;
}

LedgerSummary Ledger::Summary() const {
  LedgerSummary s;
  for (std::size_t i = 0; i < kNumMessageKinds; ++i) {
    s.bytes[i] = static_cast<double>(per_kind_[i]);
  }
  return s;
}

std::string Ledger::ToCsv() const {
  std::ostringstream out;
  out << "round,kind,src,dst,bytes\n";
  for (const auto& m : records_) {
    out << m.round << ',' << MessageKindName(m.kind) << ',' << TierName(m.src) << ','
        << TierName(m.dst) << ',' << m.bytes << '\n';
  }
  return out.str();
}

LedgerSummary SummarizeLedgerCsv(std::string_view csv) {
  std::istringstream in{std::string(csv)};
  std::string line;
  if (!std::getline(in, line) || line != "round,kind,src,dst,bytes") {
    throw ContractError("ledger csv: unexpected header");
  }
  Ledger ledger;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string round, kind, src, dst, bytes;
    std::getline(row, round, ',');
    std::getline(row, kind, ',');
    std::getline(row, src, ',');
    std::getline(row, dst, ',');
    std::getline(row, bytes, ',');
    auto k = ParseMessageKind(kind);
    auto s = ParseTier(src);
    auto d = ParseTier(dst);
    if (!k || !s || !d) throw ContractError("ledger csv: bad row \"" + line + "\"");
    ledger.Record({std::stoi(round), *k, *s, *d, std::stoull(bytes)});
  }
  return ledger.Summary();
}

std::size_t ActiveClientCount(std::size_t n_clients, double sample_rate) {
  const double exact = sample_rate * static_cast<double>(n_clients);
  // Products like 0.1 * 200 can land a hair above the integer.
  auto k = static_cast<std::size_t>(std::ceil(exact - 1e-9));
  return std::clamp<std::size_t>(k, 1, n_clients);
}

SyncCounts CountSyncs(StrategyKind kind, int rounds, int t1, int t2,
                      bool global_client_sync) {
  SyncCounts c;
  for (int r = 1; r <= rounds; ++r) {
    const bool edge_tick = t1 > 0 && r % t1 == 0;
    const bool cloud_tick = t2 > 0 && r % t2 == 0;
    if (IsFlat(kind)) {
      ++c.client_syncs;
    } else if (kind == StrategyKind::kSplitFed) {
      c.client_syncs += edge_tick;
    } else if (kind == StrategyKind::kHierFl) {
      c.client_syncs += edge_tick || cloud_tick;
      c.cloud_syncs += cloud_tick;
    } else {
      c.client_syncs += edge_tick || (global_client_sync && cloud_tick);
      c.cloud_syncs += cloud_tick;
    }
  }
  return c;
}

LedgerSummary Multiplicities(const CostModelInput& in) {
  LedgerSummary m;
  const double R = in.rounds;
  const double k = static_cast<double>(ActiveClientCount(in.n_clients, in.sample_rate));
  const double n = static_cast<double>(in.n_clients);
  const double E = static_cast<double>(in.n_edges);
  if (in.rounds <= 0) return m;
  const SyncCounts sync =
      CountSyncs(in.strategy, in.rounds, in.t1, in.t2, in.global_client_sync);
  const double S = sync.client_syncs, T = sync.cloud_syncs;
  using enum MessageKind;
  switch (in.strategy) {
    case StrategyKind::kFedAvg:
    case StrategyKind::kFedSgd:
    case StrategyKind::kFedProx:
    case StrategyKind::kFedNova:
      m[kClientModelUp] = S * k;
      m[kClientModelDown] = S * n;
      break;
    case StrategyKind::kHierFl:
      m[kClientModelUp] = R * k;
      m[kClientModelDown] = S * n;
      m[kEdgeModelUp] = T * E;
      m[kEdgeModelDown] = T * E;
      break;
    case StrategyKind::kSplitFed:
      m[kClientSmashedUp] = R * k;
      m[kGradFromCloud] = R * k;
      m[kClientModelUp] = S * k;
      m[kClientModelDown] = S * n;
      break;
    case StrategyKind::kHsfl:
    case StrategyKind::kSherl:
      m[kClientSmashedUp] = R * k;
      m[kEdgeSmashedUp] = R * E;
      m[kGradFromEdge] = R * k;
      m[kGradFromCloud] = in.strategy == StrategyKind::kHsfl ? R * E : 0.0;
      m[kClientModelUp] = S * k;
      m[kClientModelDown] = S * n;
      m[kEdgeModelUp] = T * E;
      m[kEdgeModelDown] = T * E;
      break;
  }
  return m;
}

namespace {

// The unit-size field that prices one message of `kind` under `strategy`.
double* UnitFor(CostModelInput& in, MessageKind kind) {
  switch (kind) {
    case MessageKind::kClientSmashedUp: return &in.smashed_per_client_round;
    case MessageKind::kEdgeSmashedUp: return &in.edge_smashed_per_edge_round;
    case MessageKind::kClientModelUp: return &in.client_model;
    case MessageKind::kClientModelDown:
      if (!in.client_model_down) in.client_model_down = in.client_model;
      return &*in.client_model_down;
    case MessageKind::kEdgeModelUp: return &in.edge_model;
    case MessageKind::kEdgeModelDown:
      if (!in.edge_model_down) in.edge_model_down = in.edge_model;
      return &*in.edge_model_down;
    case MessageKind::kGradFromCloud:
      return in.strategy == StrategyKind::kSplitFed ? &in.grad_per_client_round
                                                    : &in.cloud_grad_per_edge_round;
    case MessageKind::kGradFromEdge: return &in.grad_per_client_round;
  }
  return nullptr;
}

}  // namespace

LedgerSummary AnalyticCost(const CostModelInput& input) {
  CostModelInput in = input;
  const LedgerSummary mult = Multiplicities(in);
  LedgerSummary out;
  for (MessageKind k : kAllMessageKinds) {
    if (mult[k] == 0.0) continue;
    out[k] = mult[k] * *UnitFor(in, k);
  }
  return out;
}

CostModelInput InvertUnitSizes(const CostModelInput& shape, const LedgerSummary& observed) {
  CostModelInput in = shape;
  const LedgerSummary mult = Multiplicities(in);
  // Download overrides are set explicitly so they never inherit upload sizes.
  in.client_model_down = 0.0;
  in.edge_model_down = 0.0;
  for (MessageKind k : kAllMessageKinds) {
    if (mult[k] == 0.0) continue;
    *UnitFor(in, k) = observed[k] / mult[k];
  }
  return in;
}

std::string ReconcileReport::ToJson() const {
  nlohmann::ordered_json j;
  for (MessageKind k : kAllMessageKinds) {
    j["relative_diff"][MessageKindName(k)] = relative_diff[KindIndex(k)];
  }
  j["pass"] = pass;
  return j.dump(2);
}

ReconcileReport Reconcile(const LedgerSummary& measured, const LedgerSummary& predicted,
                          double tolerance) {
  ReconcileReport report;
  for (std::size_t i = 0; i < kNumMessageKinds; ++i) {
    const double diff = std::abs(measured.bytes[i] - predicted.bytes[i]) /
                        std::max(std::abs(predicted.bytes[i]), 1.0);
    report.relative_diff[i] = diff;
    if (!(diff <= tolerance)) report.pass = false;
  }
  return report;
}

}  // namespace tierfl
