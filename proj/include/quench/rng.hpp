/*
   Copyright 2026 The quench Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace quench {

/// Philox4x32-10 block function (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

/// Mixes a seed with a tag into an independent 64-bit key (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) noexcept;

/// 53-bit uniform in [0,1) as a pure function of (key, c0, c1).
double counter_uniform(std::uint64_t key, std::uint64_t c0, std::uint64_t c1 = 0) noexcept;

/// Sequential view of one Philox stream: key = seed, high counter word = stream id.
/// Two streams with the same (seed, stream) produce identical sequences.
class CounterStream {
public:
    using result_type = std::uint64_t;

    CounterStream(std::uint64_t seed, std::uint64_t stream) noexcept;

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept;
    double uniform() noexcept;           // [0,1)
    double uniform_open() noexcept;      // (0,1)
    double normal() noexcept;            // standard normal, Box-Muller

private:
    void refill() noexcept;

    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_;
    std::uint64_t position_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int available_ = 0;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace quench
