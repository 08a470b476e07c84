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

#ifndef TIERFL_LEDGER_HPP_
#define TIERFL_LEDGER_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tierfl/strategy.hpp"

namespace tierfl {

enum class Tier { kClient, kEdge, kCloud };

enum class MessageKind {
  kClientSmashedUp,
  kEdgeSmashedUp,
  kClientModelUp,
  kClientModelDown,
  kEdgeModelUp,
  kEdgeModelDown,
  kGradFromCloud,
  kGradFromEdge,
};

inline constexpr std::size_t kNumMessageKinds = 8;
inline constexpr std::array<MessageKind, kNumMessageKinds> kAllMessageKinds = {
    MessageKind::kClientSmashedUp, MessageKind::kEdgeSmashedUp,
    MessageKind::kClientModelUp,   MessageKind::kClientModelDown,
    MessageKind::kEdgeModelUp,     MessageKind::kEdgeModelDown,
    MessageKind::kGradFromCloud,   MessageKind::kGradFromEdge,
};

const char* TierName(Tier tier);
std::optional<Tier> ParseTier(std::string_view name);
// Snake-case identifiers used in CSV and JSON ("client_smashed_up", ...).
const char* MessageKindName(MessageKind kind);
std::optional<MessageKind> ParseMessageKind(std::string_view name);
inline std::size_t KindIndex(MessageKind kind) { return static_cast<std::size_t>(kind); }

// True when a message of `kind` may travel from `src` to `dst`.
bool KindMatchesTiers(MessageKind kind, Tier src, Tier dst);

inline constexpr double kBytesPerGB = 1e9;

struct MessageRecord {
  int round = 0;
  MessageKind kind = MessageKind::kClientSmashedUp;
  Tier src = Tier::kClient;
  Tier dst = Tier::kEdge;
  std::uint64_t bytes = 0;
};

// Per-kind byte totals. Exact integers for recorded ledgers; analytic
// predictions may be fractional.
struct LedgerSummary {
  std::array<double, kNumMessageKinds> bytes{};

  double operator[](MessageKind kind) const { return bytes[KindIndex(kind)]; }
  double& operator[](MessageKind kind) { return bytes[KindIndex(kind)]; }
  // Summed in kind order, so the row-sum identity holds bit-for-bit.
  double Total() const;
  std::string ToJson() const;
};

class Ledger {
 public:
  // Throws ContractError when the kind does not fit the tiers.
  void Record(const MessageRecord& message);

  const std::vector<MessageRecord>& records() const { return records_; }
  std::uint64_t total_bytes() const { return total_; }
  std::uint64_t kind_bytes(MessageKind kind) const { return per_kind_[KindIndex(kind)]; }
  std::uint64_t round_bytes(int round) const;
  std::size_t count(MessageKind kind) const { return counts_[KindIndex(kind)]; }
  LedgerSummary Summary() const;

  // Columns: round,kind,src,dst,bytes.
  std::string ToCsv() const;

 private:
  std::vector<MessageRecord> records_;
  std::array<std::uint64_t, kNumMessageKinds> per_kind_{};
  std::array<std::size_t, kNumMessageKinds> counts_{};
  std::vector<std::uint64_t> per_round_;
  std::uint64_t total_ = 0;
};

// Parses a ledger CSV produced by Ledger::ToCsv back into its summary.
LedgerSummary SummarizeLedgerCsv(std::string_view csv);

// Inputs of the closed-form cost model. Unit sizes are bytes per message
// (per-round aggregates for the smashed and gradient units).
struct CostModelInput {
  StrategyKind strategy = StrategyKind::kSherl;
  std::size_t n_clients = 200;
  std::size_t n_edges = 10;
  int rounds = 200;
  double sample_rate = 0.1;
  int t1 = 5;
  int t2 = 10;
  // Client segments are also averaged across edges on cloud syncs.
  bool global_client_sync = true;

  double client_model = 0;
  double edge_model = 0;
  double smashed_per_client_round = 0;
  double edge_smashed_per_edge_round = 0;
  double grad_per_client_round = 0;
  double cloud_grad_per_edge_round = 0;
  // Download-side unit sizes; default to the upload sizes.
  std::optional<double> client_model_down;
  std::optional<double> edge_model_down;
};

// Number of active clients per round: ceil(sample_rate * n_clients).
std::size_t ActiveClientCount(std::size_t n_clients, double sample_rate);

// Rounds in [1, rounds] on which a model exchange of each schedule fires.
struct SyncCounts {
  int client_syncs = 0;  // client segments collected and redistributed
  int cloud_syncs = 0;   // edge models collected and redistributed
};
SyncCounts CountSyncs(StrategyKind kind, int rounds, int t1, int t2,
                      bool global_client_sync);

// Message counts per kind (the cost with every unit size equal to one).
LedgerSummary Multiplicities(const CostModelInput& input);
LedgerSummary AnalyticCost(const CostModelInput& input);

// Replaces the unit sizes of `shape` with the ones that make AnalyticCost
// reproduce `observed` category by category. Categories whose multiplicity is
// zero keep a zero unit.
CostModelInput InvertUnitSizes(const CostModelInput& shape, const LedgerSummary& observed);

struct ReconcileReport {
  std::array<double, kNumMessageKinds> relative_diff{};
  bool pass = true;
  std::string ToJson() const;
};

// Relative difference per kind: |measured - predicted| / max(|predicted|, 1).
ReconcileReport Reconcile(const LedgerSummary& measured, const LedgerSummary& predicted,
                          double tolerance);

}  // namespace tierfl

#endif  // TIERFL_LEDGER_HPP_
