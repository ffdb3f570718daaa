// Copyright 2026 The qmeas Authors
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

// Counter-based uniform draws keyed by (seed, trial, draw). Every trial owns
// an independent substream, so trials can run in any order or on any thread
// and still see the same numbers.

#pragma once

#include <cstdint>
#include <string_view>

namespace qmeas {

inline constexpr std::string_view kRngName = "splitmix64-counter/v1";

constexpr std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class CounterRng {
   public:
    constexpr CounterRng(std::uint64_t seed, std::uint64_t trial)
        : key_(splitmix64(splitmix64(seed) ^ splitmix64(trial + 0x632be59bd9b4e019ULL))) {}

    /// Raw 64 bits for draw number `draw` of this trial.
    constexpr std::uint64_t bits(std::uint64_t draw) const { return splitmix64(key_ + draw * 0x9e3779b97f4a7c15ULL); }

    /// Uniform in [0, 1) with 53 random bits.
    constexpr double uniform(std::uint64_t draw) const {
        return static_cast<double>(bits(draw) >> 11) * 0x1.0p-53;
    }

   private:
    std::uint64_t key_;
};

}  // namespace qmeas
