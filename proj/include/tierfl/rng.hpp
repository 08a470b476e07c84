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

#ifndef TIERFL_RNG_HPP_
#define TIERFL_RNG_HPP_

#include <cstdint>
#include <initializer_list>
#include <random>

namespace tierfl {

// Mixes a master seed with a sequence of stream tags (node id, round, purpose
// ...) into an independent 64-bit seed. Counter-based, so the seed for any
// (node, round) pair is available without replaying earlier draws.
std::uint64_t DeriveSeed(std::uint64_t master,
                         std::initializer_list<std::uint64_t> tags);

// Stream tags for DeriveSeed.
enum class Stream : std::uint64_t {
  kInit = 1,
  kSampling = 2,
  kLocalShuffle = 3,
  kPairs = 4,
  kPartition = 5,
  kData = 6,
};

inline std::uint64_t Tag(Stream s) { return static_cast<std::uint64_t>(s); }

// Random source with portable distributions. std::mt19937_64 has a fully
// specified output sequence; the standard distributions do not, so the
// transforms below are written out.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t NextU64() { return engine_(); }
  // Uniform in [0, 1).
  double Uniform();
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  // Uniform integer in [0, n). n must be positive.
  std::uint64_t UniformInt(std::uint64_t n);
  double Normal();
  // Gamma(shape, 1).
  double Gamma(double shape);
  bool Bernoulli(double p) { return Uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace tierfl

#endif  // TIERFL_RNG_HPP_
