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

#ifndef TIERFL_CHECKS_HPP_
#define TIERFL_CHECKS_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace tierfl {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Self-test of the simulator's structural invariants on small random
// instances: autodiff against finite differences, split transparency,
// hierarchy collapse, aggregation identities, ledger bookkeeping and
// determinism. Takes a few seconds.
std::vector<CheckResult> RunInvariantChecks(std::uint64_t seed);

}  // namespace tierfl

#endif  // TIERFL_CHECKS_HPP_
