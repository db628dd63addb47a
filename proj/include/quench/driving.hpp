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

#include <cstdint>
#include <map>
#include <memory>
#include <unordered_map>
#include <vector>

namespace quench {

/// Per-symbol parameters of the random fiber dynamics.
///
/// The fiber map is x -> d*x + b (mod 1), the potential is
/// -ln d + eps*cos(2 pi x), and the default observable is
/// a*cos(2 pi x) + c*sin(4 pi x). `holder_bound` dominates the Hoelder
/// seminorms of potential and observable on this symbol.
struct SymbolParams {
    int d = 2;
    double b = 0.0;
    double eps = 0.0;
    double holder_bound = 1.0;
    double a = 1.0;
    double c = 0.0;

    void validate() const;  // throws ConfigError
};

/// Realization of the two-sided i.i.d. driving sequence.
///
/// The symbol at absolute index i is a pure function of (seed, i), computed
/// through a counter-based generator, so shifting never resamples and
/// negative indices are as cheap as positive ones. Instances are immutable
/// and cheap to copy; shifted paths share the underlying realization.
class OmegaPath {
public:
    static OmegaPath sample(std::uint64_t seed, std::vector<SymbolParams> alphabet,
                            std::vector<double> probabilities);

    /// Same realization, except symbols pinned at the given indices
    /// (relative to this path's origin). Useful for constructed examples.
    OmegaPath pinned(const std::map<long, int>& symbols) const;

    int symbol_at(long i) const;
    const SymbolParams& params_at(long i) const { return core_->alphabet[symbol_at(i)]; }

    OmegaPath shifted(long k) const { return OmegaPath(core_, origin_ + k); }

    long origin() const noexcept { return origin_; }
    long absolute(long i) const noexcept { return origin_ + i; }
    std::uint64_t seed() const noexcept { return core_->seed; }
    const std::vector<SymbolParams>& alphabet() const noexcept { return core_->alphabet; }
    const std::vector<double>& probabilities() const noexcept { return core_->probabilities; }

    /// Symbols at relative indices [first, first + count).
    std::vector<int> symbols(long first, long count) const;

    /// True when every symbol has eps == 0, i.e. the potential is -ln d and
    /// Lebesgue measure is equivariant.
    bool potential_free() const noexcept;
    int min_branches() const noexcept;
    int max_branches() const noexcept;
    double max_holder_bound() const noexcept;

    /// True if the two paths share the same realization (same seed, alphabet, pins).
    bool same_realization(const OmegaPath& other) const noexcept { return core_ == other.core_; }

private:
    struct Core {
        std::uint64_t seed;
        std::uint64_t key;
        std::vector<SymbolParams> alphabet;
        std::vector<double> probabilities;
        std::vector<double> cumulative;
        std::unordered_map<long, int> pins;
    };

    OmegaPath(std::shared_ptr<const Core> core, long origin) : core_(std::move(core)), origin_(origin) {}

    std::shared_ptr<const Core> core_;
    long origin_ = 0;
};

/// sigma^k applied to the path; k may be negative.
inline OmegaPath shift(const OmegaPath& path, long k) { return path.shifted(k); }

struct CocycleProducts {
    double gamma_n = 1.0;     // product of expansion rates over indices 0..n-1
    std::int64_t D_n = 1;     // product of branch counts over indices 0..n-1
};

/// Throws ArgumentError for n <= 0 or when D_n overflows 63 bits.
CocycleProducts cocycle_products(const OmegaPath& path, long n);

/// gamma_{sigma^first omega, n}: product of d over relative indices first..first+n-1.
double expansion_product(const OmegaPath& path, long first, long n);

}  // namespace quench
