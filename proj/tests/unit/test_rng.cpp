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

#include "doctest.h"

#include <cmath>
#include <set>

#include "quench/rng.hpp"

using namespace quench;

TEST_CASE("philox known-answer vectors") {
    auto r = philox4x32({0, 0, 0, 0}, {0, 0});
    CHECK(r == std::array<std::uint32_t, 4>{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    r = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
    CHECK(r == std::array<std::uint32_t, 4>{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    r = philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
    CHECK(r == std::array<std::uint32_t, 4>{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("counter uniforms are pure and in range") {
    for (std::uint64_t c = 0; c < 1000; ++c) {
        const double u = counter_uniform(42, c);
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        CHECK(u == counter_uniform(42, c));
    }
    CHECK(counter_uniform(1, 5) != counter_uniform(2, 5));
}

TEST_CASE("streams replay and separate") {
    CounterStream a(7, 3), b(7, 3), c(7, 4);
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
        const double x = a.uniform();
        CHECK(x == b.uniform());
        differs |= x != c.uniform();
    }
    CHECK(differs);
}

TEST_CASE("normal draws have unit variance") {
    CounterStream s(11, 0);
    double m = 0.0, v = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double z = s.normal();
        m += z;
        v += z * z;
    }
    m /= n;
    v = v / n - m * m;
    CHECK(std::abs(m) < 5.0 / std::sqrt(n));
    CHECK(std::abs(v - 1.0) < 0.02);
}

TEST_CASE("derived seeds differ by tag") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t t = 0; t < 64; ++t) seen.insert(derive_seed(5, t));
    CHECK(seen.size() == 64);
}
