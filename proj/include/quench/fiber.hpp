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

#include <cmath>
#include <vector>

#include "quench/driving.hpp"

namespace quench {

/// Canonical representative in [0,1).
inline double wrap01(double x) noexcept {
    double r = x - std::floor(x);
    return r >= 1.0 ? 0.0 : r;
}

/// Signed shortest displacement from x to y on the circle, in [-1/2, 1/2).
inline double circle_delta(double x, double y) noexcept {
    double dlt = y - x;
    dlt -= std::floor(dlt + 0.5);
    return dlt;
}

/// rho(x, y) = min(|x - y|, 1 - |x - y|).
inline double circle_distance(double x, double y) noexcept { return std::abs(circle_delta(x, y)); }

inline double apply_map(const SymbolParams& s, double x) noexcept { return wrap01(s.d * x + s.b); }

/// f_omega(x), using the symbol at index 0.
inline double apply_map(const OmegaPath& omega, double x) { return apply_map(omega.params_at(0), x); }

/// Orbit (x, f_omega x, ..., f_omega^n x); step i uses the symbol at index i.
std::vector<double> iterate(const OmegaPath& omega, double x, long n);

/// The d preimages ((x - b + i)/d) mod 1 in branch order i = 0..d-1.
std::vector<double> inverse_branches(const SymbolParams& s, double x);
inline std::vector<double> inverse_branches(const OmegaPath& omega, double x) {
    return inverse_branches(omega.params_at(0), x);
}

struct PairingReport {
    long pairs_checked = 0;   // (branch, j) pairs
    long branches = 0;        // number of n-step inverse branches
    double max_slack = 0.0;   // max over pairs of rho(f^j y, f^j y') - bound
    bool ok = true;
};

/// Pairs the n-step inverse branches of x and x' (both in the fiber of
/// sigma^n omega) by branch index and checks
/// rho(f^j y_i, f^j y_i') <= rho(x, x') / gamma_{sigma^j omega, n-j} for 0 <= j < n.
/// Throws PreconditionError when rho(x, x') >= xi.
PairingReport pairing_check(const OmegaPath& omega, double x, double x_prime, long n, double xi);

/// Smallest n with gamma_{omega,n} * 2 xi >= 1 (a xi-ball covers the circle after n steps).
long exactness_time(const OmegaPath& omega, double xi);

}  // namespace quench
