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

#include <algorithm>
#include <functional>
#include <thread>
#include <vector>

namespace quench {

/// Runs fn(begin, end) over `workers` contiguous chunks of [0, count).
/// Results belong in per-index slots.
inline void parallel_for(long count, int workers, const std::function<void(long, long)>& fn) {
    if (count <= 0) return;
    const long w = std::clamp<long>(workers, 1, count);
    if (w == 1) {
        fn(0, count);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(w));
    for (long k = 0; k < w; ++k) {
        const long begin = count * k / w, end = count * (k + 1) / w;
        pool.emplace_back([&fn, begin, end] { fn(begin, end); });
    }
    for (auto& t : pool) t.join();
}

}  // namespace quench
