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

#include "quench/driving.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "quench/error.hpp"
#include "quench/rng.hpp"

namespace quench {

namespace {
constexpr std::uint64_t kSymbolTag = 0x5359'4D42'4F4CULL;
}

void SymbolParams::validate() const {
    std::ostringstream err;
    if (d < 2) err << "d must be >= 2 (got " << d << "); ";
    if (!(b >= 0.0 && b < 1.0)) err << "b must lie in [0,1) (got " << b << "); ";
    if (!(eps >= 0.0)) err << "eps must be >= 0 (got " << eps << "); ";
    if (!(holder_bound >= 1.0)) err << "H must be >= 1 (got " << holder_bound << "); ";
    if (!std::isfinite(a) || !std::isfinite(c)) err << "observable coefficients must be finite; ";
    if (!err.str().empty()) throw ConfigError("symbol: " + err.str());
}

OmegaPath OmegaPath::sample(std::uint64_t seed, std::vector<SymbolParams> alphabet,
                            std::vector<double> probabilities) {
    if (alphabet.empty()) throw ConfigError("alphabet must not be empty");
    if (alphabet.size() != probabilities.size())
        throw ConfigError("probabilities: expected one probability per symbol");
    double total = 0.0;
    for (double p : probabilities) {
        if (!(p >= 0.0) || !std::isfinite(p)) throw ConfigError("probabilities: entries must be finite and >= 0");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) throw ConfigError("probabilities: must sum to 1 within 1e-12");
    for (const auto& s : alphabet) s.validate();

    auto core = std::make_shared<Core>();
    core->seed = seed;
    core->key = derive_seed(seed, kSymbolTag);
    core->alphabet = std::move(alphabet);
    core->probabilities = std::move(probabilities);
    core->cumulative.resize(core->probabilities.size());
    std::partial_sum(core->probabilities.begin(), core->probabilities.end(), core->cumulative.begin());
    core->cumulative.back() = std::numeric_limits<double>::infinity();
    return OmegaPath(std::move(core), 0);
}

OmegaPath OmegaPath::pinned(const std::map<long, int>& symbols) const {
    auto core = std::make_shared<Core>(*core_);
    for (const auto& [index, symbol] : symbols) {
        if (symbol < 0 || symbol >= static_cast<int>(core->alphabet.size()))
            throw ArgumentError("pinned symbol out of alphabet range");
        core->pins[origin_ + index] = symbol;
    }
    return OmegaPath(std::move(core), origin_);
}

int OmegaPath::symbol_at(long i) const {
    const long abs_index = origin_ + i;
    const auto& core = *core_;
    if (!core.pins.empty()) {
        auto it = core.pins.find(abs_index);
        if (it != core.pins.end()) return it->second;
    }
    if (core.cumulative.size() == 1) return 0;
    const double u = counter_uniform(core.key, static_cast<std::uint64_t>(abs_index));
    const auto it = std::upper_bound(core.cumulative.begin(), core.cumulative.end(), u);
    return static_cast<int>(it - core.cumulative.begin());
}

std::vector<int> OmegaPath::symbols(long first, long count) const {
    std::vector<int> out(static_cast<std::size_t>(std::max(count, 0L)));
    for (long k = 0; k < count; ++k) out[static_cast<std::size_t>(k)] = symbol_at(first + k);
    return out;
}

bool OmegaPath::potential_free() const noexcept {
    return std::all_of(core_->alphabet.begin(), core_->alphabet.end(),
                       [](const SymbolParams& s) { return s.eps == 0.0; });
}

int OmegaPath::min_branches() const noexcept {
    int m = std::numeric_limits<int>::max();
    for (std::size_t s = 0; s < core_->alphabet.size(); ++s)
        if (core_->probabilities[s] > 0.0 || core_->alphabet.size() == 1) m = std::min(m, core_->alphabet[s].d);
    for (const auto& [_, s] : core_->pins) m = std::min(m, core_->alphabet[s].d);
    return m;
}

int OmegaPath::max_branches() const noexcept {
    int m = 0;
    for (const auto& s : core_->alphabet) m = std::max(m, s.d);
    return m;
}

double OmegaPath::max_holder_bound() const noexcept {
    double m = 0.0;
    for (const auto& s : core_->alphabet) m = std::max(m, s.holder_bound);
    return m;
}

CocycleProducts cocycle_products(const OmegaPath& path, long n) {
    if (n <= 0) throw ArgumentError("cocycle_products: n must be >= 1");
    CocycleProducts out;
    for (long i = 0; i < n; ++i) {
        const int d = path.params_at(i).d;
        if (out.D_n > std::numeric_limits<std::int64_t>::max() / d)
            throw ArgumentError("cocycle_products: D_n overflows 63 bits");
        out.D_n *= d;
        out.gamma_n *= d;
    }
    return out;
}

double expansion_product(const OmegaPath& path, long first, long n) {
    double g = 1.0;
    for (long i = 0; i < n; ++i) g *= path.params_at(first + i).d;
    return g;
}

}  // namespace quench
