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

#include "quench/inducing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "quench/error.hpp"
#include "quench/fiber.hpp"
#include "quench/stats.hpp"
#include "quench/transfer.hpp"

namespace quench {

namespace {

// running max of y against log n, fitted on positive values only
double running_max_exponent(const std::vector<double>& n, const std::vector<double>& y) {
    std::vector<double> lx, ly;
    double run = 0.0;
    for (std::size_t k = 0; k < n.size(); ++k) {
        run = std::max(run, y[k]);
        if (run > 0.0 && n[k] > 0.0) {
            lx.push_back(std::log(n[k]));
            ly.push_back(std::log(run));
        }
    }
    if (lx.size() < 2 || lx.front() == lx.back()) return 0.0;
    return linear_fit(lx, ly).slope;
}

}  // namespace

void ECriteria::validate() const {
    std::ostringstream err;
    if (!(C0 > 0.0)) err << " C0 must be > 0;";
    if (L < 1) err << " L must be >= 1;";
    if (N_check < L) err << " N_check must be >= L;";
    if (decay_steps < 2) err << " decay_steps must be >= 2;";
    if (!err.str().empty()) throw ConfigError("inducing:" + err.str());
}

SymbolWindowMembership::SymbolWindowMembership(OmegaPath omega, std::vector<int> pattern)
    : omega_(std::move(omega)), pattern_(std::move(pattern)) {
    const int n = static_cast<int>(omega_.alphabet().size());
    for (int s : pattern_)
        if (s < 0 || s >= n) throw ConfigError("inducing.test_mode_window: symbol id out of alphabet range");
}

bool SymbolWindowMembership::contains(long i) const {
    for (std::size_t k = 0; k < pattern_.size(); ++k)
        if (omega_.symbol_at(i + static_cast<long>(k)) != pattern_[k]) return false;
    return true;
}

double SymbolWindowMembership::probability() const {
    double p = 1.0;
    for (int s : pattern_) p *= omega_.probabilities()[static_cast<std::size_t>(s)];
    return p;
}

double ESurrogates::max_surrogate() const { return std::max({C, K_hat, h_sup, inv_h_norm, inv_Q}); }

SurrogateMembership::SurrogateMembership(std::shared_ptr<const MeasureStack> stack, const Observable& psi,
                                         HolderParams holder, ECriteria criteria, std::optional<double> sigma2,
                                         int workers)
    : stack_(std::move(stack)),
      holder_(holder),
      criteria_(criteria),
      sigma2_(sigma2.value_or(std::numeric_limits<double>::quiet_NaN())),
      band_(CorrelationBand::compute(*stack_, psi, stack_->first(), stack_->last() - stack_->first() + 1, 1e-12,
                                     workers)) {
    criteria_.validate();
    if (!stack_->lambda_normalized()) throw StateError("SurrogateMembership: stack must be lambda-normalized");
}

ESurrogates SurrogateMembership::evaluate(long i) const {
    if (std::isnan(sigma2_)) throw StateError("membership: asymptotic variance not yet estimated");
    const long horizon = std::max(criteria_.N_check, criteria_.decay_steps);
    if (!stack_->covers(i) || !stack_->covers(i + horizon))
        throw StateError("membership: stack window must cover [i, i + max(N_check, decay_steps)]");
    ESurrogates s;
    const double q = q_series(shift(stack_->path(), i), holder_).value;
    s.C = 4.0 * (1.0 + q);
    s.inv_Q = 1.0 / q;
    const auto h = stack_->h(i);
    s.h_sup = sup_norm(h);
    std::vector<double> inv(h.size()), g(h.size());
    for (std::size_t k = 0; k < h.size(); ++k) {
        inv[k] = 1.0 / h[k];
        g[k] = inv[k] - 1.0;  // mu-mean nu(1) - nu(h) = 0
    }
    s.inv_h_norm = holder_norm(std::span<const double>(inv), holder_);
    const auto fit = decay_rate(*stack_, i, HolderFunction(std::move(g)), criteria_.decay_steps, holder_);
    s.instant_decay = fit.instant_decay;
    s.K_hat = fit.instant_decay ? 0.0 : fit.K_hat;

    const auto moments = band_.second_moments(i, criteria_.N_check);
    s.min_floor_ratio = std::numeric_limits<double>::infinity();
    for (long n = criteria_.L; n <= criteria_.N_check; ++n) {
        const double v = moments[static_cast<std::size_t>(n - 1)] / static_cast<double>(n);
        s.min_floor_ratio = std::min(s.min_floor_ratio, sigma2_ > 0.0 ? v / sigma2_ : (v > 0.0 ? INFINITY : 0.0));
    }
    return s;
}

double empirical_P_E(const std::function<bool(long)>& member, long draws) {
    if (draws < 1) throw ArgumentError("empirical_P_E: draws must be >= 1");
    long hits = 0;
    for (long k = 0; k < draws; ++k) hits += member(k) ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(draws);
}

long InducedSystem::m(long k) const {
    if (k == 0) return 0;
    if (k < 0 || k > count()) throw ArgumentError("InducedSystem: return index out of range");
    return returns[static_cast<std::size_t>(k - 1)];
}

long InducedSystem::k(long n) const {
    return static_cast<long>(std::upper_bound(returns.begin(), returns.end(), n) - returns.begin());
}

double InducedSystem::frequency() const {
    return n_max > 0 ? static_cast<double>(count()) / static_cast<double>(n_max) : 0.0;
}

InducedSystem return_times(const MembershipOracle& oracle, long n_max) {
    if (n_max < 1) throw ArgumentError("return_times: n_max must be >= 1");
    InducedSystem sys;
    sys.n_max = n_max;
    sys.start_in_E = oracle.contains(0);
    if (!sys.start_in_E) sys.warnings.push_back("start point is not in E");
    for (long i = 1; i <= n_max; ++i)
        if (oracle.contains(i)) sys.returns.push_back(i);
    if (sys.returns.empty()) {
        sys.truncated = true;
        sys.warnings.push_back("no return to E up to n_max = " + std::to_string(n_max));
    }
    return sys;
}

bool return_structure_ok(const InducedSystem& sys, const MembershipOracle& oracle) {
    for (long k = 0; k < sys.count(); ++k) {
        if (!oracle.contains(sys.m(k + 1))) return false;
        for (long j = sys.m(k) + 1; j < sys.m(k + 1); ++j)
            if (oracle.contains(j)) return false;
    }
    return true;
}

double block_sup(const OmegaPath& omega, const Observable& psi, long a, long len, int grid) {
    if (len <= 0) return 0.0;
    const auto v = shift(omega, a);
    double best = 0.0;
    for (int k = 0; k < grid; ++k) {
        const double x = (k + 0.3819660112501051) / grid;
        best = std::max(best, std::abs(birkhoff_sum(v, psi, x, len)));
    }
    return best;
}

double InducedObservable::operator()(const OmegaPath& omega, const Observable& psi, double x) const {
    return birkhoff_sum(shift(omega, start), psi, x, length);
}

InducedObservable induced_observable(const OmegaPath& omega, const Observable& psi, const InducedSystem& sys,
                                     long block, int grid) {
    if (block < 0 || block >= sys.count()) throw ArgumentError("induced_observable: block out of range");
    InducedObservable o;
    o.start = sys.m(block);
    o.length = sys.m(block + 1) - o.start;
    o.A = block_sup(omega, psi, o.start, o.length, grid);
    return o;
}

std::vector<double> induced_increments(const InducedSystem& sys, std::span<const double> psi_values, long count) {
    if (count + 1 > sys.count() || sys.m(count + 1) > static_cast<long>(psi_values.size()))
        throw ArgumentError("induced_increments: trajectory does not cover the requested returns");
    std::vector<double> out(static_cast<std::size_t>(count));
    for (long l = 1; l <= count; ++l) {
        double s = 0.0;
        for (long j = sys.m(l); j < sys.m(l + 1); ++j) s += psi_values[static_cast<std::size_t>(j)];
        out[static_cast<std::size_t>(l - 1)] = s;
    }
    return out;
}

std::vector<double> induced_sequence(const InducedSystem& sys, std::span<const double> psi_values, long count) {
    if (count < 1) return {};
    if (count > sys.count() || sys.m(count) > static_cast<long>(psi_values.size()))
        throw ArgumentError("induced_sequence: trajectory does not cover the requested returns");
    std::vector<double> out(static_cast<std::size_t>(count));
    for (long l = 0; l < count; ++l) {
        double s = 0.0;
        for (long j = sys.m(l); j < sys.m(l + 1); ++j) s += psi_values[static_cast<std::size_t>(j)];
        out[static_cast<std::size_t>(l)] = s;
    }
    return out;
}

KacReport kac_check(const InducedSystem& sys, double P_hat) {
    if (sys.count() < 100) throw PreconditionError("kac_check: need at least 100 returns");
    if (!(P_hat > 0.0)) throw ArgumentError("kac_check: P_hat must be > 0");
    KacReport r;
    r.n = sys.count();
    r.m_over_n = static_cast<double>(sys.m(r.n)) / static_cast<double>(r.n);
    r.inv_P = 1.0 / P_hat;
    r.m_error = std::abs(r.m_over_n - r.inv_P) / r.inv_P;
    r.k_over_n = static_cast<double>(sys.k(sys.n_max)) / static_cast<double>(sys.n_max);
    r.k_error = std::abs(r.k_over_n - P_hat);
    for (long n = 1; n <= sys.n_max; ++n) {
        const long kn = sys.k(n);
        if (kn >= sys.count()) break;
        if (!(sys.m(kn) <= n && n < sys.m(kn + 1))) r.bracket_ok = false;
    }
    r.ok = r.m_error <= 0.1 && r.bracket_ok;
    return r;
}

MomentReport moment_check(std::span<const double> A, double p) {
    if (A.empty()) throw ArgumentError("moment_check: empty sample");
    MomentReport r;
    r.p = p;
    auto moment_of = [&](std::size_t n) {
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) s += std::pow(std::abs(A[k]), p);
        return s / static_cast<double>(n);
    };
    r.moment = moment_of(A.size());
    for (std::size_t div : {8u, 4u, 2u, 1u})
        if (A.size() / div >= 1) r.moment_by_doubling.push_back(moment_of(A.size() / div));

    std::vector<double> ns, ys;
    for (std::size_t n = 1; n <= A.size(); n *= 2) {
        double mx = 0.0;
        for (std::size_t k = 0; k < n; ++k) mx = std::max(mx, std::abs(A[k]));
        ns.push_back(static_cast<double>(n));
        ys.push_back(mx);
    }
    r.growth_exponent = running_max_exponent(ns, ys);

    std::vector<double> sorted(A.size());
    std::transform(A.begin(), A.end(), sorted.begin(), [](double v) { return std::abs(v); });
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const std::size_t k = std::max<std::size_t>(10, sorted.size() / 10);
    if (k < sorted.size() && sorted[k] > 0.0) {
        double s = 0.0;
        for (std::size_t i = 0; i < k; ++i) s += std::log(sorted[i] / sorted[k]);
        r.hill_tail_index = s > 0.0 ? static_cast<double>(k) / s : 0.0;
    }
    return r;
}

GoReport go_conditions_check(const TrajectoryEnsemble& ensemble, const InducedSystem& sys,
                             const std::vector<long>& m_grid, const std::vector<long>& offsets, double sigma2,
                             double p, int workers) {
    if (m_grid.empty() || offsets.empty()) throw ArgumentError("go_conditions_check: empty grid");
    const long K = *std::max_element(offsets.begin(), offsets.end()) + *std::max_element(m_grid.begin(), m_grid.end());
    if (K + 1 > sys.count() || sys.m(K + 1) > ensemble.length())
        throw PreconditionError("go_conditions_check: ensemble does not cover the needed induced blocks");

    const long N = ensemble.count();
    // prefix[path][j] = sum_{l <= j} A_l
    std::vector<std::vector<double>> prefix(static_cast<std::size_t>(N));
    std::vector<std::vector<double>> abs_p(static_cast<std::size_t>(N));
    ensemble.for_each(workers, [&](long k, double, std::span<const double> psi) {
        const auto A = induced_increments(sys, psi, K);
        auto& pre = prefix[static_cast<std::size_t>(k)];
        pre.assign(static_cast<std::size_t>(K + 1), 0.0);
        for (long l = 1; l <= K; ++l) pre[static_cast<std::size_t>(l)] = pre[static_cast<std::size_t>(l - 1)] + A[static_cast<std::size_t>(l - 1)];
        auto& ap = abs_p[static_cast<std::size_t>(k)];
        ap.resize(A.size());
        for (std::size_t l = 0; l < A.size(); ++l) ap[l] = std::pow(std::abs(A[l]), p);
    });

    GoReport r;
    r.m_grid = m_grid;
    r.offsets = offsets;
    r.sigma2 = sigma2;
    r.u_hat = std::numeric_limits<double>::infinity();
    std::vector<double> lx, ly;
    bool all_positive = true;
    for (long off : offsets) {
        std::vector<double> row;
        for (long m : m_grid) {
            std::vector<double> s(static_cast<std::size_t>(N));
            for (long k = 0; k < N; ++k) {
                const auto& pre = prefix[static_cast<std::size_t>(k)];
                s[static_cast<std::size_t>(k)] = pre[static_cast<std::size_t>(off + m)] - pre[static_cast<std::size_t>(off)];
            }
            const double v = sample_variance(s);
            row.push_back(v);
            r.u_hat = std::min(r.u_hat, v / static_cast<double>(m));
            if (v > 0.0) {
                lx.push_back(std::log(static_cast<double>(m)));
                ly.push_back(std::log(v));
            } else {
                all_positive = false;
            }
        }
        r.var.push_back(std::move(row));
    }
    r.growth_slope = all_positive && lx.size() >= 2 && lx.front() != lx.back() ? linear_fit(lx, ly).slope : 0.0;
    r.go1 = sigma2 > 0.0 && r.u_hat >= sigma2 / 4.0 && r.growth_slope >= 0.5;

    std::vector<double> ns, norms;
    for (long l = 1; l <= K; l *= 2) {
        double s = 0.0;
        for (long k = 0; k < N; ++k) s += abs_p[static_cast<std::size_t>(k)][static_cast<std::size_t>(l - 1)];
        ns.push_back(static_cast<double>(l));
        norms.push_back(std::pow(s / static_cast<double>(N), 1.0 / p));
    }
    r.go2_exponent = running_max_exponent(ns, norms);
    r.go2 = r.go2_exponent <= 1.0 / p + 0.1;
    return r;
}

TailReport tail_bound_check(const OmegaPath& omega, const Observable& psi, const InducedSystem& sys,
                            const std::vector<long>& n_grid, double p, int grid) {
    TailReport r;
    std::vector<double> ns;
    for (long n : n_grid) {
        const long kn = sys.k(n);
        if (n < 1 || kn >= sys.count()) throw ArgumentError("tail_bound_check: need a return after every n");
        const long a = sys.m(kn), next = sys.m(kn + 1);
        r.n_grid.push_back(n);
        r.discrepancy.push_back(block_sup(omega, psi, a, n - a, grid));
        r.bound.push_back(block_sup(omega, psi, a, next - a, grid) + block_sup(omega, psi, n, next - n, grid));
        ns.push_back(static_cast<double>(n));
    }
    r.exponent = running_max_exponent(ns, r.bound);
    r.ok = r.exponent <= 1.0 / p + 0.1;
    return r;
}

ResummationSides resummation_identity(const OmegaPath& omega, const Observable& psi, const InducedSystem& sys,
                                      double x, long n) {
    const long kn = sys.k(n);
    if (n < 0 || kn >= sys.count()) throw ArgumentError("resummation_identity: need a return after n");
    const auto orbit = iterate(omega, x, sys.m(kn + 1));
    ResummationSides s;
    s.lhs = birkhoff_sum(omega, psi, x, n);
    for (long j = 0; j < kn; ++j) {
        const long a = sys.m(j), b = sys.m(j + 1);
        s.lhs -= birkhoff_sum(shift(omega, a), psi, orbit[static_cast<std::size_t>(a)], b - a);
    }
    const long a = sys.m(kn), next = sys.m(kn + 1);
    s.rhs = birkhoff_sum(shift(omega, a), psi, orbit[static_cast<std::size_t>(a)], next - a) -
            birkhoff_sum(shift(omega, n), psi, orbit[static_cast<std::size_t>(n)], next - n);
    return s;
}

}  // namespace quench
