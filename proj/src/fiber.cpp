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

#include "quench/fiber.hpp"

#include <algorithm>

#include "quench/error.hpp"

namespace quench {

std::vector<double> iterate(const OmegaPath& omega, double x, long n) {
    if (n < 0) throw ArgumentError("iterate: n must be >= 0");
    std::vector<double> orbit;
    orbit.reserve(static_cast<std::size_t>(n) + 1);
    orbit.push_back(wrap01(x));
    for (long i = 0; i < n; ++i) orbit.push_back(apply_map(omega.params_at(i), orbit.back()));
    return orbit;
}

std::vector<double> inverse_branches(const SymbolParams& s, double x) {
    std::vector<double> out(static_cast<std::size_t>(s.d));
    for (int i = 0; i < s.d; ++i) out[static_cast<std::size_t>(i)] = wrap01((x - s.b + i) / s.d);
    return out;
}

namespace {

struct PairingWalk {
    const std::vector<SymbolParams>* steps;  // steps[j] = params at index j
    std::vector<double> bound;               // bound[j] = rho(x,x') / gamma_{sigma^j omega, n-j}
    PairingReport report;

    // Descend from level j+1 to level j. Lifted coordinates keep x' - x exact.
    void descend(long j, double x, double xp) {
        const auto& s = (*steps)[static_cast<std::size_t>(j)];
        for (int i = 0; i < s.d; ++i) {
            const double y = (x - s.b + i) / s.d;
            const double yp = (xp - s.b + i) / s.d;
            const double slack = circle_distance(wrap01(y), wrap01(yp)) - bound[static_cast<std::size_t>(j)];
            report.max_slack = std::max(report.max_slack, slack);
            ++report.pairs_checked;
            if (j == 0) {
                ++report.branches;
            } else {
                descend(j - 1, y, yp);
            }
        }
    }
};

}  // namespace

PairingReport pairing_check(const OmegaPath& omega, double x, double x_prime, long n, double xi) {
    if (n < 1) throw ArgumentError("pairing_check: n must be >= 1");
    const double rho = circle_distance(x, x_prime);
    if (rho >= xi) throw PreconditionError("pairing_check: rho(x, x') must be < xi");

    std::vector<SymbolParams> steps;
    steps.reserve(static_cast<std::size_t>(n));
    for (long j = 0; j < n; ++j) steps.push_back(omega.params_at(j));

    PairingWalk walk;
    walk.steps = &steps;
    walk.bound.assign(static_cast<std::size_t>(n), 0.0);
    double tail = 1.0;
    for (long j = n - 1; j >= 0; --j) {
        tail *= steps[static_cast<std::size_t>(j)].d;
        walk.bound[static_cast<std::size_t>(j)] = rho / tail;
    }
    walk.report.max_slack = -rho;
    const double xl = wrap01(x);
    walk.descend(n - 1, xl, xl + circle_delta(xl, x_prime));
    walk.report.ok = walk.report.max_slack <= 1e-12;
    return walk.report;
}

long exactness_time(const OmegaPath& omega, double xi) {
    if (!(xi > 0.0 && xi <= 0.25)) throw ArgumentError("exactness_time: xi must lie in (0, 1/4]");
    double gamma = 1.0;
    long n = 0;
    while (gamma * 2.0 * xi < 1.0) gamma *= omega.params_at(n++).d;
    return n;
}

}  // namespace quench
